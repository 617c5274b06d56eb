"""tests module for evaluation app."""

import numpy as np
import pytest

from attacks.presets import from_preset
from core.datasets import ManifoldDataset
from core.exceptions import CacheMismatch, DimensionMismatch, EmptyBatch, InvalidDistribution
from core.factories import (
    AttackConfigFactory,
    HemisphereConfigFactory,
    TrainRunFactory,
)
from core.providers.manifolds.hemisphere import sample_hemisphere
from evaluation.analysis import (
    SlicePlane,
    decision_grid,
    histogram,
    loss_vs_tc,
    loss_vs_tc_batches,
    perturbation_geometry,
)
from evaluation.metrics import (
    MetricsRecord,
    aggregate,
    clean_accuracy,
    predict,
    records_frame,
    robust_accuracy,
)
from evaluation.theory import (
    DiscreteDistributionPair,
    risk_gap_check,
    tv_distance,
)
from network.mlp import DenseLayer, MlpClassifier
from tangent.cache import build_cache
from training.loops import Method, train


@pytest.fixture
def split():
    """Fixture providing a small hemisphere split."""
    return sample_hemisphere(HemisphereConfigFactory(ambient_dim=6, train_size=64, seed=2))


@pytest.fixture
def model():
    """Fixture providing an untrained classifier for the split fixture."""
    return MlpClassifier.initialize([6, 12, 4], np.random.default_rng(2))


def _constant_model(dim, classes):
    return MlpClassifier([DenseLayer(np.zeros((classes, dim)), np.zeros(classes))])


# accuracy


def test_constant_model_ties_go_to_the_first_class():
    dataset = ManifoldDataset(x=np.ones((8, 3)), labels=[0, 1, 2, 3] * 2, num_classes=4)
    model = _constant_model(3, 4)
    assert predict(model, dataset.x).tolist() == [0] * 8
    assert clean_accuracy(model, dataset) == 0.25


def test_memorizing_model_is_perfect():
    labels = np.array([2, 0, 1, 1, 2])
    dataset = ManifoldDataset(x=np.eye(3)[labels], labels=labels, num_classes=3)
    model = MlpClassifier([DenseLayer(np.eye(3), np.zeros(3))])
    assert clean_accuracy(model, dataset) == 1.0


def test_accuracy_matches_a_loop(split, model):
    correct = 0
    for x, label in zip(split.test.x, split.test.labels):
        logits = model.forward(x)
        correct += int(np.argmax(logits) == label)
    assert clean_accuracy(model, split.test) == correct / len(split.test)


def test_zero_budget_robust_accuracy_is_clean_accuracy(split, model):
    attack = from_preset("eval-pgd20", 0.0)
    assert robust_accuracy(model, split.test, attack) == clean_accuracy(model, split.test)


@pytest.mark.parametrize("seed", range(5))
def test_attacks_do_not_help_an_untrained_model(split, seed):
    model = MlpClassifier.initialize([6, 12, 4], np.random.default_rng(seed))
    attack = from_preset("eval-pgd20", 0.03)
    robust = robust_accuracy(model, split.test, attack, np.random.default_rng(seed))
    assert robust <= clean_accuracy(model, split.test) + 0.02


def test_robust_accuracy_is_batch_size_independent(split, model):
    """Test that batching changes nothing for attacks without a random start."""
    attack = from_preset("fgsm", 0.05)
    whole = robust_accuracy(model, split.test, attack, batch_size=512)
    pieces = robust_accuracy(model, split.test, attack, batch_size=5)
    assert whole == pieces


def test_empty_dataset_is_rejected():
    with pytest.raises(DimensionMismatch):
        ManifoldDataset(x=np.zeros((0, 6)), labels=np.zeros(0), num_classes=4)


def test_aggregate_uses_the_sample_deviation():
    records = [
        MetricsRecord(seed=0, clean_last=0.9, clean_best=0.95, robust={"eval-pgd20": 0.5}),
        MetricsRecord(seed=1, clean_last=0.7, clean_best=0.75, robust={"eval-pgd20": 0.7}),
    ]
    summary = aggregate(records)
    assert summary["clean_last"]["mean"] == pytest.approx(0.8)
    assert summary["clean_last"]["std"] == pytest.approx(np.sqrt(0.02))
    assert summary["robust_eval-pgd20"]["mean"] == pytest.approx(0.6)
    assert list(records_frame(records).columns) == [
        "seed",
        "clean_last",
        "clean_best",
        "robust_eval-pgd20",
    ]
    assert aggregate(records[:1])["clean_best"] == {"mean": 0.95, "std": 0.0}
    with pytest.raises(EmptyBatch):
        aggregate([])


# theory


def test_total_variation_examples():
    assert tv_distance([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert tv_distance([0.5, 0.5], [0.9, 0.1]) == pytest.approx(0.4)


def test_invalid_distributions():
    with pytest.raises(InvalidDistribution):
        tv_distance([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(InvalidDistribution):
        tv_distance([1.5, -0.5], [0.5, 0.5])
    with pytest.raises(InvalidDistribution):
        tv_distance([1.0], [0.5, 0.5])


def test_risk_gap_examples():
    same = risk_gap_check(DiscreteDistributionPair([0.2, 0.8], [0.2, 0.8], [0, 1], [1, 1]))
    assert same.gap == 0.0 and same.bound == 0.0 and same.holds
    perfect = risk_gap_check(DiscreteDistributionPair([0.5, 0.5], [0.9, 0.1], [0, 1], [0, 1]))
    assert perfect.risk_p == perfect.risk_q == 0.0 and perfect.holds


def test_risk_gap_bound_on_random_pairs():
    """Test both the 4·TV and the 2·TV bounds on 10,000 random finite problems."""
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        pair = DiscreteDistributionPair.random(rng, int(rng.integers(1, 11)))
        result = risk_gap_check(pair)
        assert result.holds
        assert result.tight_holds


# analysis


@pytest.fixture
def trained(split):
    """Fixture training a small clean model and caching the split's exact tangents."""
    result = train(
        TrainRunFactory(method=Method.CLEAN, hidden=(12,), epochs=5), split.train, split.test
    )
    return result.last, build_cache(split.train)


def test_single_batch_loss_table(split, trained):
    model, cache = trained
    report = loss_vs_tc(
        model, split.train, cache, AttackConfigFactory(), num_batches=1, batch_size=16
    )
    assert len(report.table) == 1
    assert np.all(np.isfinite(report.table[["mean_tc", "loss"]].to_numpy()))
    assert np.isnan(report.correlation)


def test_duplicated_batch_gives_identical_rows(split, trained):
    model, cache = trained
    batch = np.arange(10, 26)
    report = loss_vs_tc_batches(model, split.train, cache, AttackConfigFactory(), [batch, batch])
    first, second = report.table.iloc[0], report.table.iloc[1]
    assert first["mean_tc"] == second["mean_tc"]
    assert first["loss"] == second["loss"]


def test_loss_table_needs_the_matching_cache(split, trained):
    model, _ = trained
    with pytest.raises(CacheMismatch):
        loss_vs_tc(model, split.train, build_cache(split.test), AttackConfigFactory(), 2)


def test_perturbation_angles_are_in_range(split, trained):
    model, cache = trained
    geometry = perturbation_geometry(model, split.train, cache, AttackConfigFactory())
    assert np.all((geometry.angles >= 0) & (geometry.angles <= 90))
    table = histogram(geometry.angles, 30, (0.0, 90.0))
    assert len(table) == 30 and table["count"].sum() == len(geometry.angles)
    assert table["left"].iloc[0] == 0.0 and table["right"].iloc[-1] == 90.0
    summary = geometry.summary()
    assert summary["quantity"].tolist() == ["tc", "angle_deg"]


def test_slice_plane_parsing():
    plane = SlicePlane.parse("x3=0.85")
    assert (plane.axis, plane.value, plane.label) == (2, 0.85, "x3=0.85")
    assert SlicePlane.parse(" x2 = 0 ").axis == 1
    with pytest.raises(ValueError):
        SlicePlane.parse("x4=1")


@pytest.mark.parametrize("resolution", [1, 7, 20])
def test_decision_grid_has_resolution_squared_rows(resolution):
    model = MlpClassifier.initialize([3, 8, 2], np.random.default_rng(3))
    grid = decision_grid(model, SlicePlane(axis=2, value=0.85), resolution=resolution)
    assert len(grid) == resolution**2
    assert list(grid.columns) == ["u", "v", "prediction"]


def test_constant_classifier_grid_is_one_class():
    model = MlpClassifier([DenseLayer(np.zeros((3, 3)), np.array([0.0, 1.0, 0.0]))])
    grid = decision_grid(model, SlicePlane(axis=1, value=0.0), resolution=15)
    assert set(grid["prediction"]) == {1}


def test_decision_grid_embeds_through_the_frame(split):
    model = MlpClassifier.initialize([6, 8, 4], np.random.default_rng(4))
    plane = SlicePlane(axis=2, value=0.5)
    grid = decision_grid(model, plane, resolution=5, frame=split.train.frame)
    assert len(grid) == 25
    with pytest.raises(DimensionMismatch):
        decision_grid(model, plane, resolution=5)


@pytest.mark.slow
def test_loss_falls_as_the_tangential_component_grows():
    """Test the sign of the loss/TC correlation for a clean-trained hemisphere model."""
    split = sample_hemisphere(HemisphereConfigFactory(ambient_dim=100, train_size=2000, seed=0))
    result = train(
        TrainRunFactory(method=Method.CLEAN, hidden=(128, 128), epochs=20, batch_size=128),
        split.train,
        split.test,
    )
    report = loss_vs_tc(
        result.last,
        split.train,
        build_cache(split.train),
        from_preset("train-pgd10", 0.03),
        num_batches=200,
    )
    assert report.correlation < 0


@pytest.mark.slow
def test_clean_model_is_far_less_robust():
    split = sample_hemisphere(HemisphereConfigFactory(ambient_dim=100, train_size=2000, seed=0))
    result = train(
        TrainRunFactory(method=Method.CLEAN, hidden=(128, 128), epochs=30, batch_size=128),
        split.train,
        split.test,
    )
    clean = clean_accuracy(result.last, split.test)
    robust = robust_accuracy(
        result.last, split.test, from_preset("eval-pgd20", 0.03), np.random.default_rng(0)
    )
    assert clean - robust > 0.2
