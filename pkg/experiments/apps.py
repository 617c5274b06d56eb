"""This module contains the configuration for the Experiments application."""
from django.apps import AppConfig


class ExperimentsConfig(AppConfig):
    """Configuration class for the Experiments application."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "experiments"
