"""Batch-host settings: real Celery workers and file logging."""

import os

from .base import *  # noqa: F401, F403
from .base import BASE_DIR, LOGGING, TART_LOG_LEVEL, env

DEBUG = False

SECRET_KEY = env("DJANGO_SECRET_KEY")

# Seeds are dispatched to workers listening on the "training" queue.
CELERY_TASK_ALWAYS_EAGER = env.bool("CELERY_TASK_ALWAYS_EAGER", default=False)
CELERY_BROKER_URL = env("CELERY_BROKER_URL_PROD", default="redis://localhost:6379/1")
CELERY_RESULT_BACKEND = env(
    "CELERY_RESULT_BACKEND_PROD", default="redis://localhost:6379/1"
)

TART_PARALLEL_SEEDS = env.bool("TART_PARALLEL_SEEDS", default=True)

LOGGING["handlers"]["file"] = {
    "level": "INFO",
    "class": "logging.handlers.RotatingFileHandler",
    "filename": os.path.join(BASE_DIR, "logs/tart.log"),
    "maxBytes": 1024 * 1024 * 5,  # 5 MB
    "backupCount": 5,
    "formatter": "verbose",
}
for logger in LOGGING["loggers"].values():
    logger["handlers"] = ["console", "file"]
    logger["level"] = TART_LOG_LEVEL
