"""FGSM and projected gradient descent in the l∞ ball."""

from typing import Optional

import numpy as np

from attacks.presets import AttackConfig
from core.exceptions import DimensionMismatch
from network.mlp import MlpClassifier, cross_entropy, loss_and_input_grad


def _project(x_adv: np.ndarray, x: np.ndarray, config: AttackConfig) -> np.ndarray:
    # Domain clip first; the ball projection last keeps ‖x*−x‖∞ ≤ ε unconditionally.
    if config.clip is not None:
        x_adv = np.clip(x_adv, config.clip[0], config.clip[1])
    return np.clip(x_adv, x - config.epsilon, x + config.epsilon)


def _single_run(
    model: MlpClassifier,
    x: np.ndarray,
    y: np.ndarray,
    config: AttackConfig,
    rng: Optional[np.random.Generator],
) -> np.ndarray:
    x_adv = x.copy()
    if config.random_start:
        if rng is None:
            raise ValueError("a random start needs a generator")
        noise = rng.uniform(-config.epsilon, config.epsilon, size=x.shape)
        x_adv = _project(x + noise, x, config)
    for _ in range(config.steps):
        _, gradient = loss_and_input_grad(model, x_adv, y)
        x_adv = _project(x_adv + config.step_size * np.sign(gradient), x, config)
    return x_adv


def pgd(
    model: MlpClassifier,
    x: np.ndarray,
    y: np.ndarray,
    config: AttackConfig,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Adversarial examples for the rows of ``x`` (or a single vector).

    Every step is x ← Π(x + α·sign(∇ₓℓ)) with sign(0) = 0. With a random
    start the iterate begins at x + U[−ε, ε]^d, projected.
    """
    rows = np.asarray(x, dtype=np.float64)
    single = rows.ndim == 1
    if single:
        rows = rows[np.newaxis, :]
    if rows.ndim != 2 or rows.shape[1] != model.input_dim:
        raise DimensionMismatch(
            f"cannot attack shape {np.shape(x)} with input width {model.input_dim}"
        )
    labels = np.asarray(y, dtype=np.int64).reshape(-1)
    if config.is_noop:
        best = rows.copy()
    else:
        best = _single_run(model, rows, labels, config, rng)
        if config.restarts > 1:
            best_loss = cross_entropy(model.forward(best), labels)
            for _ in range(config.restarts - 1):
                candidate = _single_run(model, rows, labels, config, rng)
                loss = cross_entropy(model.forward(candidate), labels)
                improved = loss > best_loss
                best[improved] = candidate[improved]
                best_loss = np.where(improved, loss, best_loss)
    return best[0] if single else best


def fgsm(
    model: MlpClassifier,
    x: np.ndarray,
    y: np.ndarray,
    epsilon: float,
    clip: Optional[tuple] = None,
) -> np.ndarray:
    """x + ε·sign(∇ₓℓ), clipped; a single projected step of size ε."""
    config = AttackConfig(
        epsilon=epsilon, steps=1 if epsilon > 0 else 0, step_size=epsilon, clip=clip
    )
    return pgd(model, x, y, config)
