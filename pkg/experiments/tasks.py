"""Celery tasks running experiment stages, one task per seed."""

import logging
from typing import Any, Dict, Iterable, List, Optional

from celery import group, shared_task
from celery.app.task import Task
from django.conf import settings

from experiments.config import ExperimentConfig, parse_config
from experiments.pipeline import run_stage

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def run_seed(self: Task, document: Dict[str, Any], stage: str, seed: int) -> Dict[str, Any]:
    """Re-validate the resolved document and run ``stage`` for ``seed``.

    The document travels as plain data so the task can run on a worker.
    """
    config = parse_config(document)
    logger.info("task %s: %s seed %d", self.request.id, stage, seed)
    return run_stage(config, stage, seed)


def dispatch(
    config: ExperimentConfig, stage: str, seeds: Optional[Iterable[int]] = None
) -> List[Dict[str, Any]]:
    """Run ``stage`` for every seed and return the per-seed reports in seed order.

    Seeds run as a Celery group when ``TART_PARALLEL_SEEDS`` is set,
    otherwise one after another in this process.
    """
    seeds = list(config.seeds if seeds is None else seeds)
    signatures = [run_seed.s(config.data, stage, seed) for seed in seeds]
    if settings.TART_PARALLEL_SEEDS and len(signatures) > 1:
        return list(group(signatures).apply_async().get())
    return [signature.apply().get() for signature in signatures]
