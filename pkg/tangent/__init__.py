"""Tangent-space estimation and the per-example tangent cache."""
