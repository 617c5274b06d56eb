"""Fully connected networks with exact backpropagation and the cross-entropy loss.

Inputs are batched row-wise: an n×d array gives n×c logits. A 1-D input is
treated as a batch of one and returns a 1-D result.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import scipy.special

from core.exceptions import DimensionMismatch, EmptyBatch, LabelOutOfRange, NonFiniteValue

Trace = Tuple[List[np.ndarray], List[np.ndarray]]


def _relu(h: np.ndarray) -> np.ndarray:
    return np.maximum(h, 0.0)


def _relu_grad(h: np.ndarray) -> np.ndarray:
    return (h > 0.0).astype(np.float64)


def _tanh_grad(h: np.ndarray) -> np.ndarray:
    return 1.0 - np.tanh(h) ** 2


ACTIVATIONS: Dict[str, Tuple[Callable, Callable]] = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
}


@dataclass
class DenseLayer:
    """Affine map h = W a + b with W of shape out×in."""

    weight: np.ndarray
    bias: np.ndarray

    @property
    def in_dim(self: "DenseLayer") -> int:
        """Input width."""
        return self.weight.shape[1]

    @property
    def out_dim(self: "DenseLayer") -> int:
        """Output width."""
        return self.weight.shape[0]


class MlpClassifier:
    """Stack of dense layers with a shared hidden activation and identity output."""

    def __init__(
        self: "MlpClassifier", layers: Sequence[DenseLayer], activation: str = "relu"
    ) -> None:
        """Validate that the layer widths chain and every parameter is finite."""
        if not layers:
            raise DimensionMismatch("a network needs at least one layer")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        checked = []
        for position, layer in enumerate(layers):
            weight = np.array(layer.weight, dtype=np.float64)
            bias = np.array(layer.bias, dtype=np.float64)
            if weight.ndim != 2 or bias.shape != (weight.shape[0],):
                raise DimensionMismatch(
                    f"layer {position}: weight {weight.shape}, bias {bias.shape}"
                )
            if checked and checked[-1].out_dim != weight.shape[1]:
                raise DimensionMismatch(
                    f"layer {position} expects {weight.shape[1]} inputs, "
                    f"previous layer emits {checked[-1].out_dim}"
                )
            if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias))):
                raise NonFiniteValue(f"layer {position} has non-finite parameters")
            checked.append(DenseLayer(weight=weight, bias=bias))
        self.layers: List[DenseLayer] = checked
        self.activation = activation

    @classmethod
    def initialize(
        cls: type,
        sizes: Sequence[int],
        rng: np.random.Generator,
        activation: str = "relu",
    ) -> "MlpClassifier":
        """Glorot-uniform weights in ±√(6/(fan_in+fan_out)) and zero biases."""
        if len(sizes) < 2 or min(sizes) < 1:
            raise DimensionMismatch(f"invalid layer sizes {list(sizes)}")
        layers = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            layers.append(
                DenseLayer(
                    weight=rng.uniform(-limit, limit, size=(fan_out, fan_in)),
                    bias=np.zeros(fan_out),
                )
            )
        return cls(layers, activation=activation)

    @property
    def input_dim(self: "MlpClassifier") -> int:
        """Width of the first layer's input."""
        return self.layers[0].in_dim

    @property
    def output_dim(self: "MlpClassifier") -> int:
        """Number of logits (or reconstruction width for a decoder)."""
        return self.layers[-1].out_dim

    @property
    def sizes(self: "MlpClassifier") -> List[int]:
        """Layer widths from input to output."""
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    def named_parameters(self: "MlpClassifier") -> List[Tuple[str, np.ndarray]]:
        """Parameter arrays in a fixed order; the arrays are live, not copies."""
        named = []
        for position, layer in enumerate(self.layers):
            named.append((f"layers.{position}.weight", layer.weight))
            named.append((f"layers.{position}.bias", layer.bias))
        return named

    def parameters(self: "MlpClassifier") -> List[np.ndarray]:
        """Parameter arrays in :meth:`named_parameters` order."""
        return [array for _, array in self.named_parameters()]

    def copy(self: "MlpClassifier") -> "MlpClassifier":
        """Deep copy."""
        return MlpClassifier(
            [DenseLayer(layer.weight.copy(), layer.bias.copy()) for layer in self.layers],
            activation=self.activation,
        )

    def _batch(self: "MlpClassifier", x: np.ndarray) -> np.ndarray:
        array = np.asarray(x, dtype=np.float64)
        if array.ndim == 1:
            array = array[np.newaxis, :]
        if array.ndim != 2 or array.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"input shape {np.shape(x)} does not match input width {self.input_dim}"
            )
        return array

    def trace(self: "MlpClassifier", x: np.ndarray) -> Trace:
        """Forward pass keeping layer inputs and pre-activations for backprop."""
        act, _ = ACTIVATIONS[self.activation]
        inputs = [self._batch(x)]
        pre = []
        last = len(self.layers) - 1
        for position, layer in enumerate(self.layers):
            h = inputs[-1] @ layer.weight.T + layer.bias
            pre.append(h)
            inputs.append(h if position == last else act(h))
        return inputs, pre

    def forward(self: "MlpClassifier", x: np.ndarray) -> np.ndarray:
        """Outputs for a vector (1-D) or a batch of rows (2-D)."""
        inputs, _ = self.trace(x)
        return inputs[-1][0] if np.ndim(x) == 1 else inputs[-1]

    def backward(
        self: "MlpClassifier", trace: Trace, upstream: np.ndarray
    ) -> Tuple[List[np.ndarray], np.ndarray]:
        """Gradients given dL/d(output) for every row of the traced batch.

        Returns:
            Parameter gradients in :meth:`parameters` order and the n×d
            gradient with respect to the input rows.
        """
        _, act_grad = ACTIVATIONS[self.activation]
        inputs, pre = trace
        grads: List[np.ndarray] = []
        delta = upstream
        for position in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[position]
            grads.append(delta.sum(axis=0))
            grads.append(delta.T @ inputs[position])
            delta = delta @ layer.weight
            if position > 0:
                delta = delta * act_grad(pre[position - 1])
        grads.reverse()
        return grads, delta


def forward(model: MlpClassifier, x: np.ndarray) -> np.ndarray:
    """Logits of ``model`` at ``x``."""
    return model.forward(x)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax."""
    return scipy.special.softmax(logits, axis=-1)


def _check_labels(labels: np.ndarray, num_classes: int, rows: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape != (rows,):
        raise DimensionMismatch(f"{labels.size} labels for {rows} rows")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelOutOfRange(f"labels outside [0, {num_classes})")
    return labels


def cross_entropy(logits: np.ndarray, y: np.ndarray) -> np.ndarray:
    """−log softmax(logits)[y] through the max-shifted log-sum-exp.

    A 1-D ``logits`` with a scalar label gives a float; an n×c array gives
    the n per-example losses.
    """
    array = np.asarray(logits, dtype=np.float64)
    single = array.ndim == 1
    if single:
        array = array[np.newaxis, :]
    labels = _check_labels(y, array.shape[1], array.shape[0])
    losses = scipy.special.logsumexp(array, axis=1) - array[np.arange(len(labels)), labels]
    losses = np.maximum(losses, 0.0)
    return float(losses[0]) if single else losses


def _loss_upstream(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    residual = softmax(logits)
    residual[np.arange(len(labels)), labels] -= 1.0
    return residual


def grad_params(
    model: MlpClassifier, x: np.ndarray, y: np.ndarray
) -> Tuple[float, List[np.ndarray]]:
    """Mean cross-entropy over the batch and its gradient for every parameter."""
    inputs, pre = model.trace(x)
    rows = inputs[0].shape[0]
    if rows == 0:
        raise EmptyBatch("gradient of an empty batch")
    labels = _check_labels(y, model.output_dim, rows)
    logits = inputs[-1]
    loss = float(np.mean(cross_entropy(logits, labels)))
    grads, _ = model.backward((inputs, pre), _loss_upstream(logits, labels) / rows)
    return loss, grads


def loss_and_input_grad(
    model: MlpClassifier, x: np.ndarray, y: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-example losses and per-example gradients of each loss w.r.t. its input row."""
    inputs, pre = model.trace(x)
    labels = _check_labels(y, model.output_dim, inputs[0].shape[0])
    logits = inputs[-1]
    _, input_grad = model.backward((inputs, pre), _loss_upstream(logits, labels))
    return cross_entropy(logits, labels), input_grad


def grad_input(model: MlpClassifier, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """∇ₓ of the cross-entropy at ``x`` (row-wise for a batch)."""
    _, gradient = loss_and_input_grad(model, x, y)
    return gradient[0] if np.ndim(x) == 1 else gradient
