"""Celery configuration for the Tart project."""

import os

from celery import Celery

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "Tart.settings.dev")

app = Celery("tart")

app.config_from_object("django.conf:settings", namespace="CELERY")

app.autodiscover_tasks()
