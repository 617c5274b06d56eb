"""App configuration for the shared numerics core."""
from django.apps import AppConfig


class CoreConfig(AppConfig):
    """AppConfig for the core app (linear algebra, datasets, providers)."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "core"
