"""This module contains the configuration for the Evaluation application."""
from django.apps import AppConfig


class EvaluationConfig(AppConfig):
    """Configuration class for the Evaluation application."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "evaluation"
