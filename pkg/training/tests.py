"""tests module for training app."""

import math

import numpy as np
import pytest

from attacks import pgd as pgd_module
from core.exceptions import CacheMismatch, EmptyBatch
from core.factories import (
    AssignmentRuleFactory,
    AttackConfigFactory,
    CirclesConfigFactory,
    HemisphereConfigFactory,
    SgdStateFactory,
    TrainRunFactory,
)
from core.providers.manifolds.circles import sample_concentric_circles
from core.providers.manifolds.hemisphere import sample_hemisphere
from evaluation.metrics import clean_accuracy, robust_accuracy
from network.mlp import MlpClassifier
from tangent.cache import build_cache
from training import loops
from training.loops import (
    Method,
    adversarial_batch_step,
    clean_batch_step,
    tart_batch_step,
    train,
)
from training.rules import AssignmentRule, RuleKind, assign_epsilons, quartile_count


@pytest.fixture
def split():
    """Fixture providing a small hemisphere split."""
    return sample_hemisphere(HemisphereConfigFactory(ambient_dim=6, train_size=48, seed=0))


@pytest.fixture
def cache(split):
    """Fixture providing the exact tangent cache of the split's training set."""
    return build_cache(split.train)


def _assert_same_model(a, b):
    for left, right in zip(a.parameters(), b.parameters()):
        assert np.array_equal(left, right)


def _assert_same_metrics(a, b):
    assert len(a) == len(b)
    for left, right in zip(a, b):
        np.testing.assert_equal(vars(left) | {"seconds": 0}, vars(right) | {"seconds": 0})


# assignment rules


def test_median_split_example():
    epsilons, used = assign_epsilons([0.1, 0.2, 0.3, 0.4], AssignmentRule("median", 0.05))
    np.testing.assert_array_equal(epsilons, [0.0, 0.0, 0.05, 0.05])
    assert used.all()


def test_median_ties_all_get_the_budget():
    epsilons, _ = assign_epsilons([0.2] * 5, AssignmentRule("median", 0.03))
    np.testing.assert_array_equal(epsilons, [0.03] * 5)


def test_quartile_split_example():
    epsilons, used = assign_epsilons(np.arange(1.0, 9.0), AssignmentRule("quartile", 0.1))
    np.testing.assert_array_equal(epsilons, [0, 0, 0, 0, 0, 0, 0.1, 0.1])
    np.testing.assert_array_equal(used, [True, True, False, False, False, False, True, True])


def test_reverse_rules_swap_the_groups():
    epsilons, used = assign_epsilons(np.arange(1.0, 9.0), AssignmentRule("reverse-quartile", 0.1))
    np.testing.assert_array_equal(epsilons, [0.1, 0.1, 0, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(used, [True, True, False, False, False, False, True, True])
    epsilons, _ = assign_epsilons([0.1, 0.2, 0.3, 0.4], AssignmentRule("reverse-median", 0.05))
    np.testing.assert_array_equal(epsilons, [0.05, 0.05, 0.0, 0.0])


def test_fixed_rule_ignores_components():
    epsilons, used = assign_epsilons([0.4, 0.1, 0.9], AssignmentRule("fixed", 0.02))
    np.testing.assert_array_equal(epsilons, [0.02, 0.02, 0.02])
    assert used.all()


def test_single_example_quartile_batch():
    epsilons, used = assign_epsilons([0.5], AssignmentRule("quartile", 0.1))
    assert used.tolist() == [True] and epsilons.tolist() == [0.1]


def test_empty_batch_has_no_budgets():
    with pytest.raises(EmptyBatch):
        assign_epsilons([], AssignmentRule("median", 0.1))


@pytest.mark.parametrize("kind", [k.value for k in RuleKind])
def test_budgets_are_monotone_in_the_component(kind):
    """Test that larger components never get a smaller budget (the reverse for reverse rules)."""
    rng = np.random.default_rng(0)
    rule = AssignmentRule(kind, 0.1)
    for _ in range(1000):
        tcs = rng.integers(0, 5, size=int(rng.integers(1, 40))).astype(float)
        epsilons, used = assign_epsilons(tcs, rule)
        kept_tcs, kept = tcs[used], epsilons[used]
        at_least = kept_tcs[:, None] >= kept_tcs[None, :]
        if rule.reverse:
            assert np.all(kept[:, None] <= kept[None, :], where=at_least)
        else:
            assert np.all(kept[:, None] >= kept[None, :], where=at_least)


@pytest.mark.parametrize("kind", ["quartile", "reverse-quartile"])
def test_tied_components_share_a_budget(kind):
    epsilons, used = assign_epsilons(np.zeros(8), AssignmentRule(kind, 0.1))
    assert used.all()
    assert len(set(epsilons.tolist())) == 1
    tcs = np.array([0.1, 0.2, 0.2, 0.2, 0.5, 0.6, 0.7, 0.9])
    epsilons, used = assign_epsilons(tcs, AssignmentRule(kind, 0.1))
    np.testing.assert_array_equal(used, [True, True, True, True, False, False, True, True])
    assert len(set(epsilons[1:4].tolist())) == 1
    assert np.count_nonzero(epsilons) == (4 if kind == "reverse-quartile" else 2)


def test_median_split_grants_at_least_half():
    rng = np.random.default_rng(1)
    for size in range(1, 40):
        epsilons, _ = assign_epsilons(rng.random(size), AssignmentRule("median", 0.1))
        assert np.count_nonzero(epsilons) >= math.ceil(size / 2)


@pytest.mark.parametrize("size, count", [(1, 1), (3, 1), (4, 1), (8, 2), (128, 32), (130, 32)])
def test_quartile_count(size, count):
    assert quartile_count(size) == count


def test_quartile_split_uses_half_the_batch():
    tcs = np.random.default_rng(2).random(128)
    epsilons, used = assign_epsilons(tcs, AssignmentRule("quartile", 1.0))
    assert used.sum() == 64 and np.count_nonzero(epsilons) == 32


# batch steps


def test_fixed_budget_step_equals_adversarial_step(split):
    x, y = split.train.x[:16], split.train.labels[:16]
    model = MlpClassifier.initialize([6, 8, 4], np.random.default_rng(3))
    twin = model.copy()
    attack = AttackConfigFactory()
    first = adversarial_batch_step(
        model, x, y, attack, SgdStateFactory(), 0.1, np.random.default_rng(4)
    )
    second = tart_batch_step(
        twin,
        x,
        y,
        np.arange(16),
        None,
        AssignmentRule("fixed", attack.epsilon),
        attack,
        SgdStateFactory(),
        0.1,
        np.random.default_rng(4),
    )
    _assert_same_model(model, twin)
    assert first.loss == second.loss


def test_zero_budget_step_equals_clean_step(split):
    x, y = split.train.x[:16], split.train.labels[:16]
    model = MlpClassifier.initialize([6, 8, 4], np.random.default_rng(5))
    twin = model.copy()
    clean_batch_step(model, x, y, SgdStateFactory(), 0.1)
    stats = tart_batch_step(
        twin,
        x,
        y,
        np.arange(16),
        None,
        AssignmentRule("fixed", 0.0),
        AttackConfigFactory(),
        SgdStateFactory(),
        0.1,
        np.random.default_rng(6),
    )
    _assert_same_model(model, twin)
    assert stats.attack_calls == 0 and stats.eps_max == 0


def test_tart_step_trains_on_the_assigned_mix(split, cache):
    indices = np.arange(16)
    x, y = split.train.x[indices], split.train.labels[indices]
    model = MlpClassifier.initialize([6, 8, 4], np.random.default_rng(7))
    stats = tart_batch_step(
        model,
        x,
        y,
        indices,
        cache,
        AssignmentRuleFactory(kind="quartile"),
        AttackConfigFactory(),
        SgdStateFactory(),
        0.1,
        np.random.default_rng(8),
    )
    assert (stats.size, stats.used, stats.eps_max, stats.attack_calls) == (16, 8, 4, 16)
    assert np.isfinite(stats.mean_tc) and stats.mean_tc >= 0


def test_tangent_rules_need_a_cache(split):
    model = MlpClassifier.initialize([6, 8, 4], np.random.default_rng(9))
    with pytest.raises(CacheMismatch):
        tart_batch_step(
            model,
            split.train.x[:4],
            split.train.labels[:4],
            np.arange(4),
            None,
            AssignmentRuleFactory(kind="median"),
            AttackConfigFactory(),
            SgdStateFactory(),
            0.1,
            np.random.default_rng(9),
        )


# training runs


def test_fixed_rule_trajectory_equals_standard_adversarial_training(split):
    """Test bitwise equality of whole trajectories under the ε_max fixed rule."""
    standard = TrainRunFactory(method=Method.STANDARD_AT, robust_every=1)
    fixed = TrainRunFactory(
        method=Method.TART,
        rule=AssignmentRule("fixed", standard.attack.epsilon),
        robust_every=1,
    )
    first = train(standard, split.train, split.test)
    second = train(fixed, split.train, split.test)
    _assert_same_model(first.last, second.last)
    _assert_same_model(first.best, second.best)
    _assert_same_metrics(first.metrics, second.metrics)
    assert first.attack_calls == second.attack_calls == 3 * 48


def test_zero_fixed_rule_trajectory_equals_clean_training(split):
    clean = train(TrainRunFactory(method=Method.CLEAN), split.train, split.test)
    zero = train(
        TrainRunFactory(method=Method.TART, rule=AssignmentRule("fixed", 0.0)),
        split.train,
        split.test,
    )
    _assert_same_model(clean.last, zero.last)
    _assert_same_metrics(clean.metrics, zero.metrics)
    assert zero.attack_calls == 0


def test_each_example_is_attacked_once_per_epoch(split, cache, monkeypatch):
    attacked = []

    def counting_pgd(model, x, y, config, rng=None):
        attacked.append(len(y))
        return pgd_module.pgd(model, x, y, config, rng)

    monkeypatch.setattr(loops, "pgd", counting_pgd)
    run = TrainRunFactory(method=Method.TART, rule=AssignmentRuleFactory(kind="quartile"))
    result = train(run, split.train, split.test, cache)
    batches_per_epoch = math.ceil(48 / run.batch_size)
    assert len(attacked) == run.epochs * batches_per_epoch
    assert sum(attacked) == run.epochs * 48 == result.attack_calls


def test_training_is_deterministic(split, cache):
    run = TrainRunFactory(method=Method.TART, rule=AssignmentRuleFactory(kind="median"))
    first = train(run, split.train, split.test, cache)
    second = train(run, split.train, split.test, cache)
    _assert_same_model(first.last, second.last)
    _assert_same_metrics(first.metrics, second.metrics)


def test_metrics_and_best_checkpoint(split, cache):
    rule = AssignmentRuleFactory(kind="quartile")
    run = TrainRunFactory(method=Method.TART, rule=rule, epochs=4)
    result = train(run, split.train, split.test, cache)
    assert [m.epoch for m in result.metrics] == [0, 1, 2, 3]
    best = max(m.clean_acc for m in result.metrics)
    assert result.metrics[result.best_epoch].clean_acc == best
    assert all(m.clean_acc < best for m in result.metrics[: result.best_epoch])
    assert clean_accuracy(result.best, split.test) == best
    for metrics in result.metrics:
        assert metrics.frac_eps_max == pytest.approx(0.25, abs=0.1)
        assert math.isnan(metrics.robust_acc)
        assert metrics.mean_tc >= 0
        assert metrics.seconds > 0


def test_learning_rate_schedule_is_applied(split):
    run = TrainRunFactory(
        method=Method.CLEAN,
        epochs=3,
        optimizer=SgdStateFactory(learning_rate=0.2, schedule=((1, 2.0), (2, 2.0))),
    )
    result = train(run, split.train)
    assert [m.lr for m in result.metrics] == [0.2, 0.1, 0.05]


def test_tart_needs_a_matching_cache(split):
    run = TrainRunFactory(method=Method.TART, rule=AssignmentRuleFactory(kind="quartile"))
    with pytest.raises(CacheMismatch):
        train(run, split.train, split.test)
    with pytest.raises(CacheMismatch):
        train(run, split.train, split.test, build_cache(split.test))


def test_tart_run_needs_a_rule():
    with pytest.raises(ValueError):
        TrainRunFactory(method=Method.TART, rule=None)


def test_clean_training_fits_noiseless_circles():
    train_set = sample_concentric_circles(
        CirclesConfigFactory(n_per_class=200, noise_std=0.0, seed=0)
    ).train
    run = TrainRunFactory(
        method=Method.CLEAN,
        hidden=(32,),
        epochs=50,
        batch_size=32,
        optimizer=SgdStateFactory(learning_rate=0.05),
    )
    result = train(run, train_set)
    assert clean_accuracy(result.last, train_set) == 1.0


@pytest.mark.slow
@pytest.mark.parametrize("epsilon", [0.1, 0.85])
def test_adversarial_training_on_circles(epsilon):
    """Compare clean training, standard AT and the quartile rule on the circles toy.

    At 0.1 every method is perfect on the default geometry. At 0.85 the budget
    matches the x₃ offset and standard AT keeps its accuracy but not its robustness.
    """
    config = CirclesConfigFactory(n_per_class=500, test_per_class=500, seed=0)
    split = sample_concentric_circles(config)
    cache = build_cache(split.train)
    attack = AttackConfigFactory(epsilon=epsilon, steps=10, step_size=epsilon / 4)
    evaluation = AttackConfigFactory(epsilon=epsilon, steps=20, step_size=epsilon / 10)

    def run(method, rule=None):
        run_config = TrainRunFactory(
            method=method, rule=rule, hidden=(64, 64), epochs=50, batch_size=64, attack=attack
        )
        result = train(run_config, split.train, split.test, cache if rule else None)
        return (
            clean_accuracy(result.last, split.test),
            robust_accuracy(result.last, split.test, evaluation, np.random.default_rng(0)),
        )

    clean_model = run(Method.CLEAN)
    standard = run(Method.STANDARD_AT)
    tart = run(Method.TART, AssignmentRule("quartile", epsilon))
    assert clean_model[0] >= 0.99
    assert tart[0] >= standard[0] - 0.01
    if epsilon < config.gap:
        assert standard == tart == (1.0, 1.0)
    else:
        assert standard[1] <= 0.6 < standard[0]
