"""Accuracy metrics, the risk-gap checker and trained-model analysis."""
