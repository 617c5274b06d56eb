"""This module contains the configuration for the Tangent application."""
from django.apps import AppConfig


class TangentConfig(AppConfig):
    """Configuration class for the Tangent application."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "tangent"
