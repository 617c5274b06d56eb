"""Fully connected autoencoder trained on mean squared reconstruction error."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import DimensionMismatch
from core.linalg import as_matrix
from core.seeding import derive_rng
from network.mlp import MlpClassifier
from network.optim import SgdState, lr_at_epoch, sgd_step

logger = logging.getLogger(__name__)


@dataclass
class Autoencoder:
    """Encoder E: ℝ^d → ℝ^k and decoder D: ℝ^k → ℝ^d."""

    encoder: MlpClassifier
    decoder: MlpClassifier

    def __post_init__(self: "Autoencoder") -> None:
        """Check that the two halves chain."""
        if self.encoder.output_dim != self.decoder.input_dim:
            raise DimensionMismatch(
                f"encoder emits {self.encoder.output_dim} latents, "
                f"decoder expects {self.decoder.input_dim}"
            )
        if self.decoder.output_dim != self.encoder.input_dim:
            raise DimensionMismatch("decoder output width differs from encoder input width")

    @classmethod
    def initialize(
        cls: type,
        input_dim: int,
        latent_dim: int,
        hidden: Sequence[int],
        rng: np.random.Generator,
        activation: str = "tanh",
    ) -> "Autoencoder":
        """Mirror-image encoder d→hidden→k and decoder k→reversed(hidden)→d."""
        encoder = MlpClassifier.initialize(
            [input_dim, *hidden, latent_dim], rng, activation=activation
        )
        decoder = MlpClassifier.initialize(
            [latent_dim, *reversed(list(hidden)), input_dim], rng, activation=activation
        )
        return cls(encoder=encoder, decoder=decoder)

    @property
    def input_dim(self: "Autoencoder") -> int:
        """Ambient dimension d."""
        return self.encoder.input_dim

    @property
    def latent_dim(self: "Autoencoder") -> int:
        """Width of the code z."""
        return self.encoder.output_dim

    def encode(self: "Autoencoder", x: np.ndarray) -> np.ndarray:
        """E(x) for a row or a batch of rows."""
        return self.encoder.forward(x)

    def decode(self: "Autoencoder", z: np.ndarray) -> np.ndarray:
        """D(z) for a code or a batch of codes."""
        return self.decoder.forward(z)

    def named_parameters(self: "Autoencoder") -> List[Tuple[str, np.ndarray]]:
        """Encoder parameters followed by decoder parameters."""
        return [(f"encoder.{name}", p) for name, p in self.encoder.named_parameters()] + [
            (f"decoder.{name}", p) for name, p in self.decoder.named_parameters()
        ]

    def copy(self: "Autoencoder") -> "Autoencoder":
        """Deep copy."""
        return Autoencoder(encoder=self.encoder.copy(), decoder=self.decoder.copy())


def reconstruction_error(ae: Autoencoder, x: np.ndarray) -> float:
    """Mean over rows of ‖D(E(x)) − x‖²."""
    x = as_matrix(x, "x")
    residual = ae.decode(ae.encode(x)) - x
    return float(np.mean(np.sum(residual**2, axis=1)))


def reconstruction_grads(ae: Autoencoder, x: np.ndarray) -> Tuple[float, List[np.ndarray]]:
    """Reconstruction error of the batch and its parameter gradients."""
    encoder_trace = ae.encoder.trace(x)
    latent = encoder_trace[0][-1]
    decoder_trace = ae.decoder.trace(latent)
    residual = decoder_trace[0][-1] - encoder_trace[0][0]
    rows = residual.shape[0]
    loss = float(np.mean(np.sum(residual**2, axis=1)))
    decoder_grads, latent_grad = ae.decoder.backward(decoder_trace, 2.0 * residual / rows)
    encoder_grads, _ = ae.encoder.backward(encoder_trace, latent_grad)
    return loss, encoder_grads + decoder_grads


def train_autoencoder(
    x: np.ndarray,
    latent_dim: int,
    epochs: int,
    state: SgdState,
    batch_size: int = 128,
    seed: int = 0,
    hidden: Sequence[int] = (64,),
    initial: Optional[Autoencoder] = None,
) -> Tuple[Autoencoder, List[float]]:
    """Fit an autoencoder by mini-batch SGD.

    Returns:
        The trained autoencoder and the loss trace: the reconstruction error
        on ``x`` before training, then after each epoch.
    """
    x = as_matrix(x, "x")
    n, d = x.shape
    if latent_dim > d:
        raise DimensionMismatch(f"latent dimension {latent_dim} exceeds input dimension {d}")
    if initial is None:
        ae = Autoencoder.initialize(d, latent_dim, hidden, derive_rng(seed, 0))
    else:
        ae = initial.copy()
        if ae.input_dim != d or ae.latent_dim != latent_dim:
            raise DimensionMismatch("initial autoencoder does not match the data or latent width")
    trace = [reconstruction_error(ae, x)]
    for epoch in range(epochs):
        rate = lr_at_epoch(state, epoch)
        order = derive_rng(seed, 1, epoch).permutation(n)
        for start in range(0, n, batch_size):
            _, grads = reconstruction_grads(ae, x[order[start : start + batch_size]])
            sgd_step(ae, grads, state, learning_rate=rate)
        trace.append(reconstruction_error(ae, x))
        logger.debug("autoencoder epoch %d lr=%.4g loss=%.6g", epoch, rate, trace[-1])
    logger.info(
        "autoencoder trained: loss %.6g -> %.6g over %d epochs", trace[0], trace[-1], epochs
    )
    return ae, trace
