"""This module contains the configuration for the Attacks application."""
from django.apps import AppConfig


class AttacksConfig(AppConfig):
    """Configuration class for the Attacks application."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "attacks"
