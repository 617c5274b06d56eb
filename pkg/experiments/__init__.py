"""Experiment documents, the seed pipeline and the management commands."""
