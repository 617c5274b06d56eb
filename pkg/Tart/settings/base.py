"""
Django settings for the Tart project.

The project has no database and no URL routing: Django provides settings,
management commands (the experiment CLI) and app discovery for Celery tasks.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

import environ
from kombu import Exchange, Queue

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# Initialize environment variables
env = environ.Env()
env_path = os.path.join(BASE_DIR, ".env")

environ.Env.read_env(env_path)  # Reads the .env file if present


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env("DJANGO_SECRET_KEY", default="tart-insecure-development-key")

DEBUG = True

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "core",
    "network",
    "attacks",
    "tangent",
    "training",
    "evaluation",
    "experiments",
]

# No persistence layer: runs are files under TART_RUNS_DIR.
DATABASES = {}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Experiment runner

TART_RUNS_DIR = Path(env("TART_RUNS_DIR", default=os.path.join(BASE_DIR, "runs")))

# Run the seeds of one experiment as a Celery group instead of one after another.
TART_PARALLEL_SEEDS = env.bool("TART_PARALLEL_SEEDS", default=False)

TART_LOG_LEVEL = env("TART_LOG_LEVEL", default="INFO")


# Celery

CELERY_BROKER_URL = env("CELERY_BROKER_URL", default="memory://")
CELERY_RESULT_BACKEND = env("CELERY_RESULT_BACKEND", default="cache+memory://")
CELERY_RESULT_EXTENDED = True

CELERY_ACCEPT_CONTENT = ["json"]
CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_TRACK_STARTED = True
CELERY_TASK_TIME_LIMIT = 6 * 60 * 60
CELERY_TASK_SOFT_TIME_LIMIT = 5 * 60 * 60

# Seeds run in-process unless a worker pool is configured.
CELERY_TASK_ALWAYS_EAGER = env.bool("CELERY_TASK_ALWAYS_EAGER", default=True)
CELERY_TASK_EAGER_PROPAGATES = True

CELERY_TASK_QUEUES = (
    Queue("default", Exchange("default"), routing_key="default"),
    Queue("training", Exchange("training"), routing_key="training"),
)

CELERY_TASK_DEFAULT_QUEUE = "default"
CELERY_TASK_DEFAULT_EXCHANGE = "default"
CELERY_TASK_DEFAULT_ROUTING_KEY = "default"
CELERY_TASK_ROUTES = {"experiments.tasks.run_seed": {"queue": "training"}}


# Logging

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {name} {process:d} {message}",
            "style": "{",
        },
    },
    "loggers": {
        app: {
            "handlers": ["console"],
            "level": TART_LOG_LEVEL,
            "propagate": False,
        }
        for app in (
            "core",
            "network",
            "attacks",
            "tangent",
            "training",
            "evaluation",
            "experiments",
        )
    },
}
