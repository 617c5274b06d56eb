"""This module contains the configuration for the Network application."""
from django.apps import AppConfig


class NetworkConfig(AppConfig):
    """Configuration class for the Network application."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "network"
