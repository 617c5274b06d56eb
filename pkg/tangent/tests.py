"""tests module for tangent app."""

import numpy as np
import pytest

from core.datasets import ManifoldDataset
from core.exceptions import (
    CacheMismatch,
    DimensionMismatch,
    FormatError,
    HashMismatch,
    RankDeficient,
    ZeroPerturbation,
)
from core.factories import HemisphereConfigFactory
from core.linalg import principal_angles, projector_factors
from core.providers.manifolds.hemisphere import sample_hemisphere
from core.seeding import derive_rng
from network.autoencoder import Autoencoder, train_autoencoder
from network.optim import SgdState
from tangent.cache import (
    HEADER,
    TangentSource,
    build_cache,
    decode_cache,
    encode_cache,
    load_cache,
    save_cache,
)
from tangent.diagnostics import (
    largest_angles_to_exact,
    random_subspace_baseline,
    storage_report,
    summarize_angles,
    timing_report,
)
from tangent.estimation import (
    SamplingSpec,
    angle_degrees,
    angles_from_components,
    estimate_tangent_space,
    tangential_component,
)


class FunctionDecoder:
    """Latent model whose encoder is a fixed point and decoder a given function."""

    def __init__(self, latent, decoder):
        self.latent = np.asarray(latent, dtype=float)
        self.decoder = decoder

    def encode(self, x):
        return self.latent

    def decode(self, z):
        return np.stack([self.decoder(row) for row in np.atleast_2d(z)])


@pytest.fixture
def hemisphere():
    """Fixture providing a small hemisphere training set."""
    return sample_hemisphere(HemisphereConfigFactory(ambient_dim=8, train_size=40, seed=1)).train


def test_linear_decoder_tangent_is_its_column_space():
    rng = np.random.default_rng(0)
    matrix, offset = rng.standard_normal((7, 2)), rng.standard_normal(7)
    model = FunctionDecoder(rng.standard_normal(2), lambda z: matrix @ z + offset)
    basis = estimate_tangent_space(model, np.zeros(7))
    assert basis.shape == (7, 2)
    assert max(principal_angles(basis, matrix)) < 1e-8


def test_quadratic_decoder_tangent_at_origin():
    model = FunctionDecoder([0.0, 0.0], lambda z: np.array([z[0], z[1], z[0] ** 2]))
    basis = estimate_tangent_space(model, np.zeros(3), spec=SamplingSpec(latent_spread=1e-3))
    assert max(principal_angles(basis, np.eye(3)[:, :2])) < 1e-3


def test_two_symmetric_samples_give_the_difference_direction():
    ae = Autoencoder.initialize(5, 2, (6,), np.random.default_rng(2))
    x = np.random.default_rng(3).standard_normal(5)
    spec = SamplingSpec(samples_per_dim=2, latent_spread=0.1, include_center=False)
    basis = estimate_tangent_space(ae, x, spec=spec)
    z = ae.encode(x)
    for axis in range(2):
        step = 0.1 * np.eye(2)[axis]
        difference = ae.decode(z + step) - ae.decode(z - step)
        cosine = abs(basis[:, axis] @ difference) / np.linalg.norm(difference)
        assert cosine == pytest.approx(1.0, abs=1e-10)


def test_sampling_offsets():
    np.testing.assert_allclose(SamplingSpec(2, 0.1).offsets(), [-0.1, 0.1])
    odd = SamplingSpec(5, 0.2).offsets()
    assert odd.size == 4 and 0.0 not in odd
    with pytest.raises(ValueError):
        SamplingSpec(1, 0.1)


def test_requested_rank_must_match_the_latent_width():
    ae = Autoencoder.initialize(5, 2, (4,), np.random.default_rng(4))
    with pytest.raises(DimensionMismatch):
        estimate_tangent_space(ae, np.zeros(5), k=3)


def test_tangential_component_examples():
    rng = np.random.default_rng(5)
    basis, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    entry = projector_factors(basis)
    x = rng.standard_normal(6)
    assert tangential_component(entry, x, x) == 0.0
    assert tangential_component(entry, x, x + 0.1 * basis[:, 0]) == pytest.approx(0.1, abs=1e-12)
    delta = rng.standard_normal(6)
    tc = tangential_component(entry, x, x + delta)
    residual = delta - entry.project(delta)
    assert delta @ delta == pytest.approx(tc**2 + residual @ residual, abs=1e-10)


def test_tangential_component_ignores_the_choice_of_basis():
    rng = np.random.default_rng(9)
    for _ in range(20):
        basis = rng.standard_normal((12, 3))
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        mixing = q @ np.diag(rng.uniform(0.5, 2.0, 3))
        x, x_adv = rng.standard_normal(12), rng.standard_normal(12)
        expected = tangential_component(projector_factors(basis), x, x_adv)
        mixed = tangential_component(projector_factors(basis @ mixing), x, x_adv)
        assert mixed == pytest.approx(expected, abs=1e-9)


def test_angle_examples():
    entry = projector_factors(np.eye(3)[:, :2])
    x = np.zeros(3)
    assert angle_degrees(entry, x, np.array([0.3, 0.4, 0.0])) == pytest.approx(0.0, abs=1e-5)
    assert angle_degrees(entry, x, np.array([0.0, 0.0, 2.0])) == pytest.approx(90.0)
    half = np.array([1.0, 0.0, np.sqrt(3.0)])
    assert angle_degrees(entry, x, half) == pytest.approx(60.0)
    with pytest.raises(ZeroPerturbation):
        angle_degrees(entry, x, x)
    np.testing.assert_allclose(angles_from_components(np.array([1.0]), np.array([2.0])), [60.0])


def test_exact_cache_passes_tangents_through(hemisphere):
    cache = build_cache(hemisphere, "exact")
    assert cache.source is TangentSource.EXACT
    assert cache.matches(hemisphere)
    for index in range(len(hemisphere)):
        assert max(principal_angles(cache.entry(index).basis, hemisphere.tangents[index])) < 1e-10
    np.testing.assert_allclose(largest_angles_to_exact(cache, hemisphere), 0.0, atol=1e-10)


def test_cache_tangential_components_match_entries(hemisphere):
    cache = build_cache(hemisphere)
    rng = np.random.default_rng(6)
    indices = np.array([3, 0, 17])
    x = hemisphere.x[indices]
    x_adv = x + 0.05 * rng.standard_normal(x.shape)
    expected = [
        tangential_component(cache.entry(i), row, adv) for i, row, adv in zip(indices, x, x_adv)
    ]
    actual = cache.tangential_components(indices, x, x_adv)
    np.testing.assert_allclose(actual, expected, atol=1e-14)
    with pytest.raises(CacheMismatch):
        cache.tangential_components([len(hemisphere)], x[:1], x_adv[:1])


def test_cache_file(tmp_path, hemisphere):
    cache = build_cache(hemisphere)
    path = tmp_path / "tangents.tatc"
    save_cache(cache, path)
    n, d, k = len(hemisphere), hemisphere.dim, 2
    assert HEADER.size == 57
    assert path.stat().st_size == 57 + n * 2 * d * k * 8 == cache.nbytes
    loaded = load_cache(path, hemisphere.content_hash())
    assert np.array_equal(loaded.bases, cache.bases)
    assert np.array_equal(loaded.left_factors, cache.left_factors)
    assert loaded.source is cache.source
    assert encode_cache(build_cache(hemisphere)) == path.read_bytes()


def test_damaged_cache_file(tmp_path, hemisphere):
    payload = encode_cache(build_cache(hemisphere))
    with pytest.raises(FormatError):
        decode_cache(payload[:-8])
    with pytest.raises(FormatError):
        decode_cache(payload[:30])


def test_cache_from_another_dataset_is_rejected(tmp_path, hemisphere):
    path = tmp_path / "tangents.tatc"
    save_cache(build_cache(hemisphere), path)
    other = sample_hemisphere(HemisphereConfigFactory(ambient_dim=8, train_size=40, seed=2)).train
    with pytest.raises(HashMismatch):
        load_cache(path, other.content_hash())
    assert not load_cache(path).matches(other)


def test_collapsed_decoder_reports_the_example():
    column = np.array([1.0, 2.0, 0.5, -1.0])
    model = FunctionDecoder([0.3, -0.2], lambda z: column * (z[0] + 2 * z[1]))
    dataset = ManifoldDataset(x=np.zeros((2, 4)), labels=[0, 1], num_classes=2)
    with pytest.raises(RankDeficient) as raised:
        build_cache(dataset, TangentSource.ESTIMATED, model)
    assert raised.value.index == 0


def test_cache_sources_need_their_inputs():
    dataset = ManifoldDataset(x=np.zeros((2, 4)), labels=[0, 1], num_classes=2)
    with pytest.raises(CacheMismatch):
        build_cache(dataset, "exact")
    with pytest.raises(CacheMismatch):
        build_cache(dataset, "estimated")


def test_storage_report(hemisphere):
    report = storage_report(build_cache(hemisphere))
    assert report.dense_bytes == 40 * 8 * 8 * 8
    assert report.cache_bytes == 57 + 40 * 2 * 8 * 2 * 8
    assert report.ratio == report.cache_bytes / report.dense_bytes


def test_timing_report_rebuilds_exact_projectors(hemisphere):
    cache = build_cache(hemisphere)
    report = timing_report(cache, hemisphere, np.random.default_rng(0), epsilon=0.1)
    assert report.examples == 40
    assert report.max_difference < 1e-12
    assert report.cached_seconds >= 0 and report.recomputed_seconds >= 0
    assert report.as_dict()["speedup"] == report.speedup > 0


def test_timing_report_reruns_the_estimate(hemisphere):
    rng = np.random.default_rng(1)
    matrix = rng.standard_normal((8, 2))
    model = FunctionDecoder(rng.standard_normal(2), lambda z: matrix @ z)
    cache = build_cache(hemisphere, TangentSource.ESTIMATED, model)
    report = timing_report(cache, hemisphere, rng, autoencoder=model)
    assert report.max_difference < 1e-12
    with pytest.raises(CacheMismatch):
        timing_report(cache, hemisphere, rng)


def test_timing_report_needs_the_matching_dataset(hemisphere):
    other = sample_hemisphere(HemisphereConfigFactory(ambient_dim=8, train_size=40, seed=2))
    with pytest.raises(CacheMismatch):
        timing_report(build_cache(hemisphere), other.train, np.random.default_rng(0))


def test_angle_summary_is_in_degrees():
    summary = summarize_angles(np.array([0.0, np.pi / 4, np.pi / 2]))
    assert summary.as_dict() == pytest.approx(
        {"count": 3, "minimum": 0.0, "mean": 45.0, "maximum": 90.0}
    )


def test_random_baseline_is_deterministic(hemisphere):
    first = random_subspace_baseline(hemisphere, 2, 50, derive_rng(0, 5))
    second = random_subspace_baseline(hemisphere, 2, 50, derive_rng(0, 5))
    assert np.array_equal(first, second)
    assert np.all((first >= 0) & (first <= np.pi / 2))


@pytest.mark.slow
def test_autoencoder_tangents_beat_random_subspaces():
    """Test that estimated tangents align better with the exact ones than random planes."""
    config = HemisphereConfigFactory(ambient_dim=100, train_size=500, seed=0)
    train = sample_hemisphere(config).train
    ae, _ = train_autoencoder(
        train.x,
        latent_dim=2,
        epochs=30,
        state=SgdState(learning_rate=0.01, momentum=0.9),
        seed=0,
        hidden=(64,),
    )
    cache = build_cache(train, TangentSource.ESTIMATED, ae)
    estimated = largest_angles_to_exact(cache, train)
    baseline = random_subspace_baseline(train, 2, 1000, derive_rng(0, 5))
    assert estimated.mean() < baseline.mean()
