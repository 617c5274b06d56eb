"""This module contains the configuration for the Training application."""
from django.apps import AppConfig


class TrainingConfig(AppConfig):
    """Configuration class for the Training application."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "training"
