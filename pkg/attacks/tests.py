"""tests module for attacks app."""

import numpy as np
import pytest

from attacks.pgd import fgsm, pgd
from attacks.presets import PRESETS, AttackConfig, from_preset
from core.factories import AttackConfigFactory
from network.mlp import DenseLayer, MlpClassifier, cross_entropy, grad_input


@pytest.fixture
def model():
    """Fixture providing a small random relu network."""
    return MlpClassifier.initialize([6, 16, 3], np.random.default_rng(0))


@pytest.fixture
def batch():
    """Fixture providing inputs and labels for the model fixture."""
    rng = np.random.default_rng(1)
    return rng.standard_normal((20, 6)), rng.integers(0, 3, size=20)


def test_zero_budget_returns_the_input(model, batch):
    x, y = batch
    assert np.array_equal(fgsm(model, x, y, 0.0), x)
    attack = from_preset("train-pgd10", 0.0)
    assert attack.is_noop and attack.steps == 0
    assert np.array_equal(pgd(model, x, y, attack, np.random.default_rng(2)), x)


def test_fgsm_on_a_linear_model_moves_along_the_gradient_sign():
    rng = np.random.default_rng(3)
    model = MlpClassifier([DenseLayer(rng.standard_normal((2, 5)), rng.standard_normal(2))])
    x = rng.standard_normal(5)
    sign = np.sign(grad_input(model, x, 0))
    np.testing.assert_allclose(fgsm(model, x, 0, 0.05), x + 0.05 * sign, atol=1e-15)


def test_fgsm_usually_increases_the_loss():
    """Test that a first-order step raises the loss in at least 95% of 200 trials."""
    rng = np.random.default_rng(4)
    increased = 0
    for trial in range(200):
        model = MlpClassifier.initialize([5, 10, 3], np.random.default_rng(trial))
        x = rng.standard_normal(5)
        y = int(rng.integers(0, 3))
        x_adv = fgsm(model, x, y, 0.03)
        increased += cross_entropy(model.forward(x_adv), y) >= cross_entropy(model.forward(x), y)
    assert increased >= 190


def test_zero_steps_without_random_start_is_identity(model, batch):
    x, y = batch
    assert np.array_equal(pgd(model, x, y, AttackConfig(epsilon=0.1, steps=0)), x)


def test_one_saturating_step_equals_fgsm(model, batch):
    x, y = batch
    config = AttackConfig(epsilon=0.05, steps=1, step_size=0.1)
    assert np.array_equal(pgd(model, x, y, config), fgsm(model, x, y, 0.05))


def test_pgd_is_at_least_as_strong_as_fgsm():
    """Test PGD-20 against FGSM on 100 random (model, x) pairs."""
    rng = np.random.default_rng(5)
    wins = 0
    for trial in range(100):
        model = MlpClassifier.initialize([5, 12, 3], np.random.default_rng(100 + trial))
        x = rng.standard_normal(5)
        y = int(rng.integers(0, 3))
        attack = from_preset("eval-pgd20", 0.1)
        strong = cross_entropy(model.forward(pgd(model, x, y, attack, rng)), y)
        weak = cross_entropy(model.forward(fgsm(model, x, y, 0.1)), y)
        wins += strong >= weak - 1e-9
    assert wins >= 90


def test_attack_stays_in_the_ball_and_domain(model, batch):
    x, y = batch
    config = AttackConfigFactory(epsilon=0.2, steps=7, clip=(-1.0, 1.0))
    x_adv = pgd(model, x, y, config, np.random.default_rng(6))
    assert np.max(np.abs(x_adv - x)) <= 0.2 + 1e-12
    assert x_adv.min() >= -1.0 and x_adv.max() <= 1.0


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_stays_in_the_ball(name):
    """Test 2,500 adversarial examples per preset, 10,000 in all."""
    rng = np.random.default_rng(10)
    for trial, epsilon in enumerate([0.01, 0.03, 0.05, 0.1, 0.3]):
        model = MlpClassifier.initialize([6, 16, 3], np.random.default_rng(trial))
        x = rng.standard_normal((500, 6))
        y = rng.integers(0, 3, size=500)
        x_adv = pgd(model, x, y, from_preset(name, epsilon), rng)
        assert np.max(np.abs(x_adv - x)) <= epsilon + 1e-12


def test_worst_case_loss_grows_with_the_budget():
    """Test the best of 10 restarts against ε in {0.01, 0.03, 0.05} on 50 cases."""
    rng = np.random.default_rng(11)
    monotone = 0
    for trial in range(50):
        model = MlpClassifier.initialize([5, 12, 3], np.random.default_rng(200 + trial))
        x = rng.standard_normal(5)
        y = int(rng.integers(0, 3))
        losses = [
            cross_entropy(
                model.forward(pgd(model, x, y, from_preset("eval-pgd20", eps, restarts=10), rng)),
                y,
            )
            for eps in (0.01, 0.03, 0.05)
        ]
        monotone += bool(np.all(np.diff(losses) >= -1e-12))
    assert monotone >= 45


def test_attack_is_deterministic_in_its_generator(model, batch):
    x, y = batch
    config = AttackConfigFactory()
    first = pgd(model, x, y, config, np.random.default_rng(7))
    second = pgd(model, x, y, config, np.random.default_rng(7))
    assert np.array_equal(first, second)


def test_restarts_never_lower_the_loss(model, batch):
    x, y = batch
    single = pgd(model, x, y, AttackConfigFactory(restarts=1), np.random.default_rng(8))
    repeated = pgd(model, x, y, AttackConfigFactory(restarts=3), np.random.default_rng(8))
    assert np.all(
        cross_entropy(model.forward(repeated), y) >= cross_entropy(model.forward(single), y)
    )


def test_single_vector_attack(model, batch):
    x, y = batch
    x_adv = pgd(model, x[0], y[0], AttackConfigFactory(), np.random.default_rng(9))
    assert x_adv.shape == (6,)


def test_random_start_needs_a_generator(model, batch):
    x, y = batch
    with pytest.raises(ValueError):
        pgd(model, x, y, AttackConfigFactory())


def test_presets():
    train = from_preset("train-pgd10", 0.03)
    assert (train.steps, train.random_start) == (10, True)
    assert train.step_size == pytest.approx(0.0075)
    evaluation = from_preset("eval-pgd40", 0.03, restarts=2)
    assert (evaluation.steps, evaluation.restarts) == (40, 2)
    assert evaluation.step_size == pytest.approx(0.003)
    single = from_preset("fgsm", 0.03)
    assert (single.steps, single.step_size, single.random_start) == (1, 0.03, False)
    assert set(PRESETS) == {"train-pgd10", "eval-pgd20", "eval-pgd40", "fgsm"}
    with pytest.raises(ValueError):
        from_preset("pgd-1000", 0.03)


def test_attack_config_validation():
    with pytest.raises(ValueError):
        AttackConfig(epsilon=-0.1, steps=1, step_size=0.1)
    with pytest.raises(ValueError):
        AttackConfig(epsilon=0.1, steps=3)
    with pytest.raises(ValueError):
        AttackConfig(epsilon=0.1, steps=1, step_size=0.1, clip=(1.0, 0.0))
