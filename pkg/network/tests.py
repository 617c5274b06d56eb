"""tests module for network app."""

import numpy as np
import pytest

from core.exceptions import DimensionMismatch, EmptyBatch, FormatError, LabelOutOfRange
from core.factories import HemisphereConfigFactory, SgdStateFactory
from core.providers.manifolds.hemisphere import random_orthonormal_frame, sample_hemisphere
from network.autoencoder import Autoencoder, reconstruction_error, train_autoencoder
from network.checkpoints import (
    decode_networks,
    encode_networks,
    load_autoencoder,
    load_model,
    save_autoencoder,
    save_model,
)
from network.mlp import (
    DenseLayer,
    MlpClassifier,
    cross_entropy,
    forward,
    grad_input,
    grad_params,
    softmax,
)
from network.optim import SgdState, lr_at_epoch, milestone_schedule, sgd_step


def _random_model(sizes, seed=0, activation="relu"):
    return MlpClassifier.initialize(sizes, np.random.default_rng(seed), activation=activation)


def _linear(weight, bias):
    return MlpClassifier([DenseLayer(np.asarray(weight, float), np.asarray(bias, float))])


def _mean_loss(model, x, y):
    return float(np.mean(cross_entropy(model.forward(x), y)))


# forward


def test_zero_network_gives_zero_logits():
    layers = [DenseLayer(np.zeros((4, 3)), np.zeros(4)), DenseLayer(np.zeros((2, 4)), np.zeros(2))]
    model = MlpClassifier(layers)
    np.testing.assert_array_equal(forward(model, np.array([1.0, -2.0, 3.0])), np.zeros(2))


def test_single_layer_is_affine():
    rng = np.random.default_rng(0)
    weight, bias, x = rng.standard_normal((3, 5)), rng.standard_normal(3), rng.standard_normal(5)
    np.testing.assert_array_equal(_linear(weight, bias).forward(x), weight @ x + bias)


def test_forward_matches_straight_line_evaluation():
    """Test a random two-hidden-layer network against an independent evaluator."""
    model = _random_model([6, 8, 5, 3], seed=1)
    x = np.random.default_rng(2).standard_normal(6)
    (w0, b0), (w1, b1), (w2, b2) = [(layer.weight, layer.bias) for layer in model.layers]
    hidden = np.maximum(w0 @ x + b0, 0.0)
    hidden = np.maximum(w1 @ hidden + b1, 0.0)
    np.testing.assert_allclose(model.forward(x), w2 @ hidden + b2, atol=1e-12)


def test_batched_forward_matches_rows():
    model = _random_model([4, 6, 3], seed=3, activation="tanh")
    rows = np.random.default_rng(3).standard_normal((5, 4))
    expected = np.stack([model.forward(row) for row in rows])
    np.testing.assert_allclose(model.forward(rows), expected, atol=1e-14)


def test_layer_widths_must_chain():
    with pytest.raises(DimensionMismatch):
        MlpClassifier(
            [DenseLayer(np.zeros((4, 3)), np.zeros(4)), DenseLayer(np.zeros((2, 5)), np.zeros(2))]
        )
    with pytest.raises(DimensionMismatch):
        _random_model([3, 2]).forward(np.ones(4))


# loss


def test_uniform_logits_cost_log_c():
    assert cross_entropy(np.zeros(4), 2) == pytest.approx(np.log(4), abs=1e-12)


def test_confident_logits_do_not_overflow():
    loss = cross_entropy(np.array([0.0, 1000.0, 0.0]), 1)
    assert np.isfinite(loss)
    assert loss == pytest.approx(0.0, abs=1e-12)


def test_cross_entropy_matches_naive_formula():
    rng = np.random.default_rng(4)
    logits = 3 * rng.standard_normal((10, 5))
    labels = rng.integers(0, 5, size=10)
    exp = np.exp(logits)
    naive = -np.log(exp[np.arange(10), labels] / exp.sum(axis=1))
    np.testing.assert_allclose(cross_entropy(logits, labels), naive, atol=1e-10)


def test_cross_entropy_rejects_bad_labels():
    with pytest.raises(LabelOutOfRange):
        cross_entropy(np.zeros(3), 3)


def test_softmax_rows_are_distributions():
    rng = np.random.default_rng(14)
    logits = 5 * rng.standard_normal((10, 4))
    probabilities = softmax(logits)
    assert np.all(probabilities >= 0)
    np.testing.assert_allclose(probabilities.sum(axis=1), 1.0, atol=1e-12)
    shifted = softmax(logits + rng.standard_normal((10, 1)) * 100)
    np.testing.assert_allclose(shifted, probabilities, atol=1e-12)
    np.testing.assert_allclose(softmax(np.array([1000.0, 0.0])), [1.0, 0.0], atol=1e-12)


def test_full_batch_steps_lower_the_loss_on_separable_data():
    rng = np.random.default_rng(15)
    x = np.vstack([rng.normal(-2.0, 0.5, (20, 2)), rng.normal(2.0, 0.5, (20, 2))])
    y = np.repeat([0, 1], 20)
    model = _random_model([2, 8, 2], seed=15, activation="tanh")
    state = SgdState(learning_rate=0.01)
    losses = []
    for _ in range(10):
        loss, grads = grad_params(model, x, y)
        losses.append(loss)
        sgd_step(model, grads, state)
    losses.append(_mean_loss(model, x, y))
    assert np.all(np.diff(losses) < 0)


# gradients


def test_output_bias_gradient_of_zero_model():
    """Test that a zero linear model has bias gradient 1/c minus the label frequency."""
    model = _linear(np.zeros((3, 2)), np.zeros(3))
    x = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [2.0, 2.0], [-2.0, -2.0]])
    y = np.array([0, 0, 1, 1, 2, 2])
    loss, grads = grad_params(model, x, y)
    assert loss == pytest.approx(np.log(3))
    np.testing.assert_allclose(grads[1], np.zeros(3), atol=1e-15)
    np.testing.assert_allclose(grads[0], np.zeros((3, 2)), atol=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_parameter_gradients_match_central_differences(seed):
    """Test random networks of at most 200 parameters on random batches."""
    rng = np.random.default_rng(seed)
    sizes = [int(rng.integers(2, 6)), int(rng.integers(2, 8)), int(rng.integers(2, 6))]
    sizes.append(int(rng.integers(2, 5)))
    activation = "tanh" if seed % 2 else "relu"
    model = _random_model(sizes, seed=seed, activation=activation)
    assert sum(param.size for param in model.parameters()) <= 200
    x = rng.standard_normal((int(rng.integers(1, 9)), sizes[0]))
    y = rng.integers(0, sizes[-1], size=len(x))
    _, grads = grad_params(model, x, y)
    h = 1e-6
    for (_, param), grad in zip(model.named_parameters(), grads):
        numeric = np.zeros_like(param)
        for index in np.ndindex(param.shape):
            saved = param[index]
            param[index] = saved + h
            upper = _mean_loss(model, x, y)
            param[index] = saved - h
            lower = _mean_loss(model, x, y)
            param[index] = saved
            numeric[index] = (upper - lower) / (2 * h)
        error = np.linalg.norm(numeric - grad) / max(np.linalg.norm(numeric), 1e-4)
        assert error < 1e-4


def test_duplicated_batch_has_the_same_gradient():
    model = _random_model([3, 4, 2], seed=6)
    rng = np.random.default_rng(6)
    x = rng.standard_normal((5, 3))
    y = rng.integers(0, 2, size=5)
    loss, grads = grad_params(model, x, y)
    loss2, grads2 = grad_params(model, np.vstack([x, x]), np.concatenate([y, y]))
    assert loss2 == pytest.approx(loss, abs=1e-14)
    for a, b in zip(grads, grads2):
        np.testing.assert_allclose(a, b, atol=1e-14)


def test_empty_batch_has_no_gradient():
    with pytest.raises(EmptyBatch):
        grad_params(_random_model([3, 2]), np.zeros((0, 3)), np.zeros(0, dtype=int))


def test_linear_softmax_input_gradient_closed_form():
    rng = np.random.default_rng(7)
    weight, bias = rng.standard_normal((2, 4)), rng.standard_normal(2)
    model = _linear(weight, bias)
    x = rng.standard_normal(4)
    logits = weight @ x + bias
    probabilities = np.exp(logits - logits.max())
    probabilities /= probabilities.sum()
    onehot = np.array([0.0, 1.0])
    expected = (probabilities - onehot) @ weight
    np.testing.assert_allclose(grad_input(model, x, 1), expected, atol=1e-12)


def test_input_gradient_matches_central_differences():
    model = _random_model([5, 7, 4], seed=8, activation="tanh")
    rng = np.random.default_rng(8)
    x = rng.standard_normal(5)
    gradient = grad_input(model, x, 2)
    h = 1e-6

    def loss(point):
        return cross_entropy(model.forward(point), 2)

    numeric = np.array([(loss(x + h * e) - loss(x - h * e)) / (2 * h) for e in np.eye(5)])
    assert np.linalg.norm(numeric - gradient) / np.linalg.norm(numeric) < 1e-4


def test_dead_relu_region_has_zero_input_gradient():
    hidden = DenseLayer(-np.ones((4, 3)), -np.ones(4))
    output = DenseLayer(np.zeros((2, 4)), np.zeros(2))
    model = MlpClassifier([hidden, output])
    np.testing.assert_array_equal(grad_input(model, np.array([0.5, 0.2, 0.1]), 0), np.zeros(3))


# optimizer


def test_plain_sgd_step():
    model = _linear([[1.0, 2.0]], [0.5])
    grads = [np.array([[0.1, -0.2]]), np.array([0.3])]
    sgd_step(model, grads, SgdState(learning_rate=0.5))
    np.testing.assert_allclose(model.layers[0].weight, [[0.95, 2.1]])
    np.testing.assert_allclose(model.layers[0].bias, [0.35])


def test_zero_gradient_follows_velocity():
    model = _linear([[1.0]], [0.0])
    state = SgdState(learning_rate=0.1, momentum=0.9)
    state.velocity = [np.array([[2.0]]), np.array([1.0])]
    sgd_step(model, [np.zeros((1, 1)), np.zeros(1)], state)
    np.testing.assert_allclose(model.layers[0].weight, [[1.0 - 0.1 * 0.9 * 2.0]])
    np.testing.assert_allclose(model.layers[0].bias, [-0.1 * 0.9 * 1.0])


def test_two_momentum_steps_unroll():
    """Test that two steps with constant g move parameters by −lr·g·(2 + μ)."""
    lr, mu, g = 0.1, 0.9, 0.5
    model = _linear([[0.0]], [0.0])
    state = SgdState(learning_rate=lr, momentum=mu)
    for _ in range(2):
        sgd_step(model, [np.full((1, 1), g), np.full(1, g)], state)
    assert model.layers[0].weight[0, 0] == pytest.approx(-lr * g * (2 + mu))
    assert model.layers[0].bias[0] == pytest.approx(-lr * g * (2 + mu))


def test_weight_decay_skips_biases():
    model = _linear([[2.0]], [2.0])
    sgd_step(model, [np.zeros((1, 1)), np.zeros(1)], SgdState(learning_rate=0.1, weight_decay=0.5))
    assert model.layers[0].weight[0, 0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)
    assert model.layers[0].bias[0] == 2.0


def test_gradient_count_must_match():
    with pytest.raises(DimensionMismatch):
        sgd_step(_linear([[1.0]], [0.0]), [np.zeros((1, 1))], SgdState(learning_rate=0.1))


@pytest.mark.parametrize("epoch, rate", [(0, 0.1), (29, 0.1), (30, 0.01), (44, 0.01), (45, 0.001)])
def test_stepped_learning_rate(epoch, rate):
    state = SgdStateFactory(learning_rate=0.1, schedule=milestone_schedule([30, 45], 10))
    assert lr_at_epoch(state, epoch) == pytest.approx(rate, rel=1e-12)


def test_fresh_state_drops_velocity():
    state = SgdStateFactory()
    state.velocity = [np.ones(1)]
    assert state.fresh().velocity is None
    assert state.fresh().learning_rate == state.learning_rate


# autoencoder


def test_identity_autoencoder_has_zero_loss():
    encoder = _linear(np.eye(4), np.zeros(4))
    decoder = _linear(np.eye(4), np.zeros(4))
    x = np.random.default_rng(9).standard_normal((10, 4))
    ae = Autoencoder(encoder=encoder, decoder=decoder)
    _, trace = train_autoencoder(
        x, latent_dim=4, epochs=0, state=SgdState(learning_rate=0.01), initial=ae
    )
    assert trace == [0.0]
    assert reconstruction_error(ae, x) == 0.0


def test_linear_autoencoder_recovers_a_linear_subspace():
    """Test that a linear autoencoder on 2-D subspace data reaches the zero floor."""
    rng = np.random.default_rng(10)
    basis = random_orthonormal_frame(5, 2, 10)
    x = rng.standard_normal((128, 2)) @ basis.T
    ae, trace = train_autoencoder(
        x,
        latent_dim=2,
        epochs=400,
        state=SgdState(learning_rate=0.02, momentum=0.9),
        batch_size=16,
        seed=10,
        hidden=(),
    )
    assert trace[-1] < 1e-3
    assert reconstruction_error(ae, x) == trace[-1]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_autoencoder_loss_decreases_on_hemisphere(seed):
    train = sample_hemisphere(HemisphereConfigFactory(ambient_dim=10, seed=seed)).train
    _, trace = train_autoencoder(
        train.x,
        latent_dim=2,
        epochs=10,
        state=SgdState(learning_rate=0.01, momentum=0.9),
        batch_size=16,
        seed=seed,
        hidden=(16,),
    )
    assert len(trace) == 11
    assert np.all(np.isfinite(trace))
    assert trace[-1] <= trace[0]


def test_autoencoder_latent_cannot_exceed_input():
    with pytest.raises(DimensionMismatch):
        train_autoencoder(
            np.zeros((4, 3)), latent_dim=4, epochs=1, state=SgdState(learning_rate=0.1)
        )


# checkpoints


def test_model_checkpoint_is_exact(tmp_path):
    model = _random_model([5, 7, 3], seed=11, activation="tanh")
    path = tmp_path / "model.tamd"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.activation == "tanh"
    for a, b in zip(model.parameters(), loaded.parameters()):
        assert np.array_equal(a, b)


def test_autoencoder_checkpoint(tmp_path):
    ae = Autoencoder.initialize(6, 2, (4,), np.random.default_rng(12))
    path = tmp_path / "ae.tamd"
    save_autoencoder(ae, path)
    loaded = load_autoencoder(path)
    x = np.random.default_rng(12).standard_normal((3, 6))
    np.testing.assert_array_equal(loaded.decode(loaded.encode(x)), ae.decode(ae.encode(x)))
    with pytest.raises(FormatError):
        load_model(path)


def test_damaged_checkpoint_is_a_format_error():
    payload = encode_networks([_random_model([3, 2])])
    with pytest.raises(FormatError):
        decode_networks(payload[:-1])
    with pytest.raises(FormatError):
        decode_networks(b"TAMX" + payload[4:])
