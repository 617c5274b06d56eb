"""Shared numerics, datasets and error kinds for Tart."""
