"""Clean training, standard adversarial training and tangent-aware training.

Every run is deterministic in its seed. Substreams:
  (seed, 0)                 weight initialization
  (seed, 1, epoch)          batch order
  (seed, 2, epoch, batch)   attack randomness
  (seed, 3, epoch)          per-epoch robust evaluation
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from attacks.pgd import pgd
from attacks.presets import AttackConfig
from core.datasets import ManifoldDataset
from core.exceptions import CacheMismatch
from core.seeding import derive_rng
from evaluation.metrics import clean_accuracy, robust_accuracy
from network.mlp import MlpClassifier, grad_params
from network.optim import SgdState, lr_at_epoch, sgd_step
from tangent.cache import TangentCache
from training.rules import AssignmentRule, RuleKind, assign_epsilons

logger = logging.getLogger(__name__)


class Method(str, Enum):
    CLEAN = "clean"
    STANDARD_AT = "standard-at"
    TART = "tart"


@dataclass(frozen=True)
class BatchStats:
    """What one optimizer step saw."""

    loss: float
    size: int
    used: int
    eps_max: int
    mean_tc: float = float("nan")
    attack_calls: int = 0


@dataclass(frozen=True)
class TrainRun:
    """Everything that determines a training trajectory."""

    method: Method
    hidden: Tuple[int, ...]
    optimizer: SgdState
    epochs: int
    batch_size: int
    attack: AttackConfig
    rule: Optional[AssignmentRule] = None
    robust_every: int = 0
    seed: int = 0

    def __post_init__(self: "TrainRun") -> None:
        """Coerce enums and check the run is well formed."""
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.method is Method.TART and self.rule is None:
            raise ValueError("the tart method needs an assignment rule")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be nonnegative and batch_size positive")

    @property
    def needs_cache(self: "TrainRun") -> bool:
        """Whether training ranks examples by tangential component."""
        return self.method is Method.TART and self.rule.needs_tangents


@dataclass(frozen=True)
class EpochMetrics:
    """One row of the metrics table; ``seconds`` times the epoch's optimizer steps."""

    epoch: int
    lr: float
    train_loss: float
    clean_acc: float
    robust_acc: float
    frac_eps_max: float
    mean_tc: float
    seconds: float = field(default=0.0, compare=False)


@dataclass
class TrainResult:
    last: MlpClassifier
    best: MlpClassifier
    best_epoch: int
    metrics: List[EpochMetrics] = field(default_factory=list)
    attack_calls: int = 0


def _update(
    model: MlpClassifier, x: np.ndarray, y: np.ndarray, state: SgdState, lr: float
) -> float:
    loss, grads = grad_params(model, x, y)
    sgd_step(model, grads, state, learning_rate=lr)
    return loss


def clean_batch_step(
    model: MlpClassifier, x: np.ndarray, y: np.ndarray, state: SgdState, lr: float
) -> BatchStats:
    """One SGD step on natural data."""
    loss = _update(model, x, y, state, lr)
    return BatchStats(loss=loss, size=len(y), used=len(y), eps_max=0)


def adversarial_batch_step(
    model: MlpClassifier,
    x: np.ndarray,
    y: np.ndarray,
    attack: AttackConfig,
    state: SgdState,
    lr: float,
    rng: np.random.Generator,
) -> BatchStats:
    """One SGD step on adversarial examples at the fixed budget."""
    x_adv = pgd(model, x, y, attack, rng)
    loss = _update(model, x_adv, y, state, lr)
    return BatchStats(loss=loss, size=len(y), used=len(y), eps_max=len(y), attack_calls=len(y))


def tart_batch_step(
    model: MlpClassifier,
    x: np.ndarray,
    y: np.ndarray,
    indices: np.ndarray,
    cache: Optional[TangentCache],
    rule: AssignmentRule,
    attack: AttackConfig,
    state: SgdState,
    lr: float,
    rng: np.random.Generator,
) -> BatchStats:
    """Attack once at ε_max, rank by tangential component, train on the assigned mix.

    Examples granted ε_max keep their adversarial example, examples granted 0
    use the natural input, and masked examples are dropped. Adversarial
    examples are never regenerated at a smaller budget.
    """
    if rule.kind is RuleKind.FIXED and rule.epsilon == 0:
        return clean_batch_step(model, x, y, state, lr)
    x_adv = pgd(model, x, y, attack, rng)
    mean_tc = float("nan")
    if rule.needs_tangents:
        if cache is None:
            raise CacheMismatch(f"rule {rule.kind.value} needs a tangent cache")
        tcs = cache.tangential_components(indices, x, x_adv)
        mean_tc = float(tcs.mean())
        epsilons, used = assign_epsilons(tcs, rule)
    else:
        epsilons, used = assign_epsilons(np.zeros(len(y)), rule)
    adversarial = epsilons > 0
    eps_max = int(np.count_nonzero(adversarial))
    if not used.any():
        return BatchStats(float("nan"), len(y), 0, eps_max, mean_tc, len(y))
    mixed = np.where(adversarial[:, np.newaxis], x_adv, x)
    if used.all():
        loss = _update(model, mixed, y, state, lr)
    else:
        loss = _update(model, mixed[used], y[used], state, lr)
    return BatchStats(loss, len(y), int(used.sum()), eps_max, mean_tc, len(y))


def _check_cache(
    run: TrainRun, train_set: ManifoldDataset, cache: Optional[TangentCache]
) -> None:
    if not run.needs_cache:
        return
    if cache is None:
        raise CacheMismatch(f"rule {run.rule.kind.value} needs a tangent cache")
    if not cache.matches(train_set):
        raise CacheMismatch("tangent cache was not built from this training set")


def _weighted_mean(values: Sequence[float], weights: Sequence[int]) -> float:
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    keep = weights > 0
    if not keep.any():
        return float("nan")
    return float(np.sum(values[keep] * weights[keep]) / np.sum(weights[keep]))


def train(
    run: TrainRun,
    train_set: ManifoldDataset,
    test_set: Optional[ManifoldDataset] = None,
    cache: Optional[TangentCache] = None,
) -> TrainResult:
    """Run ``run.epochs`` epochs of shuffled mini-batch SGD.

    Clean accuracy each epoch is measured on ``test_set`` (the training set
    when none is given); the best checkpoint is the one with the highest
    clean accuracy, earliest epoch on ties.
    """
    _check_cache(run, train_set, cache)
    monitor = test_set if test_set is not None else train_set
    model = MlpClassifier.initialize(
        [train_set.dim, *run.hidden, train_set.num_classes], derive_rng(run.seed, 0)
    )
    state = run.optimizer.fresh()
    result = TrainResult(last=model, best=model.copy(), best_epoch=-1)
    best_acc = -1.0
    n = len(train_set)
    for epoch in range(run.epochs):
        lr = lr_at_epoch(state, epoch)
        order = derive_rng(run.seed, 1, epoch).permutation(n)
        batches: List[BatchStats] = []
        started = time.perf_counter()
        for batch, start in enumerate(range(0, n, run.batch_size)):
            indices = order[start : start + run.batch_size]
            x, y = train_set.x[indices], train_set.labels[indices]
            rng = derive_rng(run.seed, 2, epoch, batch)
            if run.method is Method.CLEAN:
                stats = clean_batch_step(model, x, y, state, lr)
            elif run.method is Method.STANDARD_AT:
                stats = adversarial_batch_step(model, x, y, run.attack, state, lr, rng)
            else:
                stats = tart_batch_step(
                    model, x, y, indices, cache, run.rule, run.attack, state, lr, rng
                )
            logger.debug(
                "epoch %d batch %d loss=%.6g used=%d", epoch, batch, stats.loss, stats.used
            )
            batches.append(stats)
        seconds = time.perf_counter() - started
        result.attack_calls += sum(s.attack_calls for s in batches)
        robust = float("nan")
        if run.robust_every and (epoch + 1) % run.robust_every == 0:
            robust = robust_accuracy(model, monitor, run.attack, derive_rng(run.seed, 3, epoch))
        metrics = EpochMetrics(
            epoch=epoch,
            lr=lr,
            train_loss=_weighted_mean([s.loss for s in batches], [s.used for s in batches]),
            clean_acc=clean_accuracy(model, monitor),
            robust_acc=robust,
            frac_eps_max=sum(s.eps_max for s in batches) / n,
            mean_tc=_weighted_mean(
                [s.mean_tc for s in batches],
                [s.size if np.isfinite(s.mean_tc) else 0 for s in batches],
            ),
            seconds=seconds,
        )
        result.metrics.append(metrics)
        if metrics.clean_acc > best_acc:
            best_acc = metrics.clean_acc
            result.best = model.copy()
            result.best_epoch = epoch
        logger.info(
            "epoch %d lr=%.4g loss=%.4f clean=%.4f frac_eps_max=%.3f mean_tc=%.4g %.2fs",
            epoch,
            lr,
            metrics.train_loss,
            metrics.clean_acc,
            metrics.frac_eps_max,
            metrics.mean_tc,
            seconds,
        )
    return result
