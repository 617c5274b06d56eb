"""tests module for core app."""

import hashlib

import numpy as np
import pytest
from scipy import stats

from core.datasets import (
    ManifoldDataset,
    decode_dataset,
    encode_dataset,
    load_dataset,
    save_dataset,
)
from core.exceptions import (
    DegenerateSamples,
    DimensionMismatch,
    FormatError,
    LabelOutOfRange,
    NonFiniteValue,
    RankDeficient,
)
from core.factories import CirclesConfigFactory, HemisphereConfigFactory
from core.linalg import (
    first_principal_component,
    principal_angles,
    project,
    projector_factors,
)
from core.providers.manifolds.circles import sample_concentric_circles
from core.providers.manifolds.hemisphere import (
    HemisphereProvider,
    exact_tangent,
    hemisphere_label,
    random_orthonormal_frame,
    sample_hemisphere,
)
from core.seeding import derive_rng


@pytest.fixture
def hemisphere_split():
    """Fixture providing a small hemisphere split."""
    return sample_hemisphere(HemisphereConfigFactory(ambient_dim=10, seed=3))


# linalg


def test_orthonormal_basis_is_its_own_left_factor():
    """Test that orthonormal columns give AᵀA = I, so the left factor is A."""
    basis = np.eye(3)[:, :2]
    factors = projector_factors(basis)
    np.testing.assert_allclose(factors.left_factor, basis, atol=1e-15)


def test_scaled_column_left_factor():
    """Test that A = (2, 0, 0)ᵀ has left factor A / 4."""
    factors = projector_factors(np.array([[2.0], [0.0], [0.0]]))
    np.testing.assert_allclose(factors.left_factor, [[0.5], [0.0], [0.0]])


def test_projection_matches_least_squares():
    """Test Π_A v against the least-squares fit A·argmin‖Aβ − v‖."""
    rng = np.random.default_rng(11)
    basis = rng.standard_normal((10, 3))
    v = rng.standard_normal(10)
    beta, *_ = np.linalg.lstsq(basis, v, rcond=None)
    np.testing.assert_allclose(project(projector_factors(basis), v), basis @ beta, atol=1e-10)


def test_coordinate_projection():
    factors = projector_factors(np.eye(3)[:, :2])
    np.testing.assert_allclose(project(factors, np.array([3.0, 4.0, 5.0])), [3.0, 4.0, 0.0])


def test_projection_of_orthogonal_vector_is_zero():
    rng = np.random.default_rng(5)
    basis = rng.standard_normal((6, 2))
    q, _ = np.linalg.qr(np.column_stack([basis, rng.standard_normal(6)]))
    normal = q[:, 2]
    np.testing.assert_allclose(project(projector_factors(basis), normal), 0.0, atol=1e-12)


def test_projection_is_idempotent_on_column_space():
    rng = np.random.default_rng(6)
    basis = rng.standard_normal((8, 3))
    v = basis @ rng.standard_normal(3)
    np.testing.assert_allclose(project(projector_factors(basis), v), v, atol=1e-12)


def test_projection_of_rows_matches_vectors():
    """Test that projecting a 2-D array projects each row."""
    rng = np.random.default_rng(7)
    factors = projector_factors(rng.standard_normal((5, 2)))
    rows = rng.standard_normal((4, 5))
    expected = np.stack([project(factors, row) for row in rows])
    np.testing.assert_allclose(project(factors, rows), expected, atol=1e-14)


def _random_mixing(rng, k):
    q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    return q @ np.diag(rng.uniform(0.5, 2.0, k))


def test_projector_properties_on_random_bases():
    """Test idempotence, symmetry, contraction and basis invariance on 100 random bases."""
    rng = np.random.default_rng(12)
    for _ in range(100):
        k = int(rng.integers(1, 6))
        d = int(rng.integers(2 * k, 51))
        basis = rng.standard_normal((d, k))
        factors = projector_factors(basis)
        u, v = rng.standard_normal(d), rng.standard_normal(d)
        projected = project(factors, v)
        np.testing.assert_allclose(project(factors, projected), projected, rtol=0, atol=1e-9)
        assert abs(project(factors, u) @ v - u @ projected) <= 1e-9
        assert np.linalg.norm(projected) <= np.linalg.norm(v) + 1e-9
        mixed = projector_factors(basis @ _random_mixing(rng, k))
        np.testing.assert_allclose(project(mixed, v), projected, rtol=0, atol=1e-9)


def test_dependent_columns_are_rank_deficient():
    basis = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(RankDeficient):
        projector_factors(basis)


def test_more_columns_than_rows_is_rank_deficient():
    with pytest.raises(RankDeficient):
        projector_factors(np.ones((2, 3)))


def test_non_finite_basis_is_rejected():
    with pytest.raises(NonFiniteValue):
        projector_factors(np.array([[np.nan], [1.0]]))


def test_projection_dimension_mismatch():
    factors = projector_factors(np.eye(3)[:, :1])
    with pytest.raises(DimensionMismatch):
        project(factors, np.ones(4))


@pytest.mark.parametrize(
    "rows, expected",
    [
        ([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [1.0, 0.0]),
        ([[0.0, 0.0], [1.0, 1.0]], [1 / np.sqrt(2), 1 / np.sqrt(2)]),
    ],
)
def test_first_principal_component(rows, expected):
    np.testing.assert_allclose(first_principal_component(np.array(rows)), expected, atol=1e-12)


def test_first_principal_component_of_noisy_line():
    """Test recovery of a direction from 50 points along it plus tiny noise."""
    rng = np.random.default_rng(8)
    direction = rng.standard_normal(6)
    direction /= np.linalg.norm(direction)
    samples = np.outer(rng.standard_normal(50), direction) + 1e-6 * rng.standard_normal((50, 6))
    component = first_principal_component(samples)
    # Power iteration on the explicit covariance.
    centered = samples - samples.mean(axis=0)
    covariance = centered.T @ centered
    oracle = np.ones(6)
    for _ in range(200):
        oracle = covariance @ oracle
        oracle /= np.linalg.norm(oracle)
    assert np.arccos(min(1.0, abs(component @ direction))) < 1e-3
    assert abs(component @ oracle) == pytest.approx(1.0, abs=1e-9)


def test_first_principal_component_errors():
    with pytest.raises(DegenerateSamples):
        first_principal_component(np.ones((4, 3)))
    with pytest.raises(DimensionMismatch):
        first_principal_component(np.ones((1, 3)))


def test_principal_angles_examples():
    """Test identical, orthogonal and 45 degree subspaces."""
    rng = np.random.default_rng(9)
    u = rng.standard_normal((5, 2))
    np.testing.assert_allclose(principal_angles(u, u), [0.0, 0.0], atol=1e-7)
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    diagonal = np.array([[1.0], [1.0]]) / np.sqrt(2)
    assert principal_angles(e1, e2) == pytest.approx([np.pi / 2])
    assert principal_angles(e1, diagonal) == pytest.approx([np.pi / 4])


def test_principal_angles_need_same_ambient_dimension():
    with pytest.raises(DimensionMismatch):
        principal_angles(np.eye(3)[:, :1], np.eye(4)[:, :1])


# seeding


def test_derived_streams_are_deterministic_and_distinct():
    a = derive_rng(4, 1, 2).standard_normal(5)
    b = derive_rng(4, 1, 2).standard_normal(5)
    c = derive_rng(4, 2, 1).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.array_equal(derive_rng([4, 1], 2).standard_normal(5), a)


# hemisphere


def test_orthonormal_frame_square():
    frame = random_orthonormal_frame(3, 3, 0)
    np.testing.assert_allclose(frame.T @ frame, np.eye(3), atol=1e-12)


def test_orthonormal_frame_is_deterministic():
    assert np.array_equal(random_orthonormal_frame(20, 3, 7), random_orthonormal_frame(20, 3, 7))
    assert not np.array_equal(
        random_orthonormal_frame(20, 3, 7), random_orthonormal_frame(20, 3, 8)
    )


def test_orthonormal_frame_is_an_isometry():
    frame = random_orthonormal_frame(100, 3, 1)
    rng = np.random.default_rng(2)
    for z in rng.standard_normal((10, 3)):
        assert np.linalg.norm(frame @ z) == pytest.approx(np.linalg.norm(z), abs=1e-10)


def test_orthonormal_frame_needs_cols_below_d():
    with pytest.raises(DimensionMismatch):
        random_orthonormal_frame(2, 3, 0)


@pytest.mark.parametrize(
    "z, label",
    [
        ((1.0, 0.0, 0.0), 0),
        ((0.0, 1.0, 0.0), 1),
        ((-1.0, 1e-20, 0.0), 2),
    ],
)
def test_hemisphere_label(z, label):
    assert hemisphere_label(np.array(z), 4) == label


def test_north_pole_tangent_spans_first_two_frame_columns():
    frame = random_orthonormal_frame(12, 3, 0)
    tangent = exact_tangent(np.array([0.0, 0.0, 1.0]), frame)
    assert max(principal_angles(tangent, frame[:, :2])) < 1e-10


def test_exact_tangent_is_the_null_space_of_the_radius():
    """Test against the null space of (Tz)ᵀ inside span(T), computed by SVD."""
    frame = random_orthonormal_frame(15, 3, 4)
    rng = np.random.default_rng(4)
    z = rng.standard_normal(3)
    z[2] = abs(z[2])
    z /= np.linalg.norm(z)
    tangent = exact_tangent(z, frame)
    np.testing.assert_allclose(tangent.T @ (frame @ z), 0.0, atol=1e-12)
    _, _, vt = np.linalg.svd(z[np.newaxis, :])
    null_space = frame @ vt[1:].T
    assert max(principal_angles(tangent, null_space)) < 1e-8


def test_hemisphere_examples_are_consistent(hemisphere_split):
    """Test x = Tz, unit latents, z₃ ≥ 0 and orthonormal tangents orthogonal to x."""
    train = hemisphere_split.train
    np.testing.assert_allclose(train.x, train.latents @ train.frame.T, atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(train.latents, axis=1), 1.0, atol=1e-12)
    assert np.all(train.latents[:, 2] >= 0)
    for index in range(len(train)):
        basis = train.tangents[index]
        np.testing.assert_allclose(basis.T @ basis, np.eye(2), atol=1e-10)
        np.testing.assert_allclose(basis.T @ train.x[index], 0.0, atol=1e-10)
        assert train.labels[index] == hemisphere_label(train.latents[index], 4)


def test_hemisphere_split_shares_its_frame(hemisphere_split):
    assert np.array_equal(hemisphere_split.train.frame, hemisphere_split.test.frame)
    assert len(hemisphere_split.train) == 64
    assert len(hemisphere_split.test) == 32


def test_hemisphere_class_frequencies():
    """Test label balance with a chi-square test at the 1e-4 level."""
    split = sample_hemisphere(HemisphereConfigFactory(ambient_dim=5, train_size=4000, seed=0))
    counts = split.train.class_histogram()
    assert counts.sum() == 4000
    assert stats.chisquare(counts).pvalue > 1e-4


def test_example_view(hemisphere_split):
    train = hemisphere_split.train
    example = train.example(5)
    assert example.label == train.labels[5]
    np.testing.assert_array_equal(example.x, train.x[5])
    np.testing.assert_array_equal(example.latent, train.latents[5])
    np.testing.assert_array_equal(example.tangent_basis, train.tangents[5])
    bare = ManifoldDataset(x=np.zeros((2, 3)), labels=[0, 1], num_classes=2).example(1)
    assert bare.latent is None and bare.tangent_basis is None


def test_hemisphere_is_deterministic_per_seed():
    config = HemisphereConfigFactory(seed=12)
    first = sample_hemisphere(config)
    second = HemisphereProvider(config).generate()
    assert first.train.content_hash() == second.train.content_hash()
    assert first.test.content_hash() == second.test.content_hash()


def test_hemisphere_config_validation():
    with pytest.raises(ValueError):
        HemisphereConfigFactory(ambient_dim=2)
    with pytest.raises(ValueError):
        HemisphereConfigFactory(num_classes=1)


# circles


def test_noiseless_circles_lie_on_their_circles():
    split = sample_concentric_circles(CirclesConfigFactory(noise_std=0.0))
    train = split.train
    inner = train.x[train.labels == 0]
    outer = train.x[train.labels == 1]
    np.testing.assert_allclose(inner[:, 0] ** 2 + inner[:, 1] ** 2, 1.0, atol=1e-12)
    np.testing.assert_allclose(outer[:, 0] ** 2 + outer[:, 1] ** 2, 4.0, atol=1e-12)
    assert np.all(inner[:, 2] > 0)
    assert np.all(outer[:, 2] < 0)


def test_default_circles_are_separable_on_x3():
    """Test that a threshold on x₃ alone classifies every training point."""
    train = sample_concentric_circles(CirclesConfigFactory(n_per_class=500, seed=0)).train
    candidates = np.sort(train.x[:, 2])
    best = max(
        np.mean((train.x[:, 2] < threshold).astype(int) == train.labels)
        for threshold in candidates
    )
    assert best == 1.0


def test_circle_tangents_are_unit_and_horizontal():
    train = sample_concentric_circles(CirclesConfigFactory(noise_std=0.0)).train
    assert train.tangents.shape == (len(train), 3, 1)
    np.testing.assert_allclose(np.linalg.norm(train.tangents[:, :, 0], axis=1), 1.0)
    np.testing.assert_allclose(train.tangents[:, 2, 0], 0.0)
    radial = np.einsum("nd,nd->n", train.x[:, :2], train.tangents[:, :2, 0])
    np.testing.assert_allclose(radial, 0.0, atol=1e-12)


def test_circles_config_validation():
    with pytest.raises(ValueError):
        CirclesConfigFactory(radius_inner=2.0, radius_outer=1.0)


# datasets


def test_dataset_file_round_trip(tmp_path, hemisphere_split):
    path = tmp_path / "train.tads"
    digest = save_dataset(hemisphere_split.train, path)
    assert digest == hashlib.sha256(path.read_bytes()).digest()
    loaded = load_dataset(path)
    assert np.array_equal(loaded.x, hemisphere_split.train.x)
    assert np.array_equal(loaded.labels, hemisphere_split.train.labels)
    assert np.array_equal(loaded.tangents, hemisphere_split.train.tangents)
    assert np.array_equal(loaded.frame, hemisphere_split.train.frame)
    assert loaded.content_hash() == digest


def test_truncated_dataset_is_a_format_error(hemisphere_split):
    payload = encode_dataset(hemisphere_split.train)
    with pytest.raises(FormatError):
        decode_dataset(payload[:-3])
    with pytest.raises(FormatError):
        decode_dataset(payload + b"\x00")
    with pytest.raises(FormatError):
        decode_dataset(b"XXXX" + payload[4:])


def test_dataset_without_ground_truth():
    dataset = ManifoldDataset(x=np.zeros((2, 3)), labels=[0, 1], num_classes=2)
    decoded = decode_dataset(encode_dataset(dataset))
    assert decoded.tangents is None and decoded.latents is None and decoded.frame is None
    assert decoded.tangent_dim == 0


def test_dataset_validation():
    with pytest.raises(LabelOutOfRange):
        ManifoldDataset(x=np.zeros((2, 3)), labels=[0, 2], num_classes=2)
    with pytest.raises(DimensionMismatch):
        ManifoldDataset(x=np.zeros((2, 3)), labels=[0], num_classes=2)
