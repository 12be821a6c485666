import numpy as np
import pytest

from geosampler import MetricModel, SpdMatrix


def euclidean_model(lam: float = 1.0, dim: int = 2) -> MetricModel:
    """Degenerate metric with no centroids: Ginv = lam * I everywhere."""
    return MetricModel(
        dim=dim,
        centroids=np.zeros((0, dim)),
        factors=np.zeros((0, dim, dim)),
        temperature=0.8,
        regularization=lam,
    )


def single_bump_model(lam: float = 1e-3, temperature: float = 0.8) -> MetricModel:
    """One identity-factor centroid at the origin."""
    return MetricModel(
        dim=2,
        centroids=[[0.0, 0.0]],
        factors=[np.eye(2)],
        temperature=temperature,
        regularization=lam,
    )


def two_bump_model() -> MetricModel:
    """Canonical 2-centroid fixture for the stationarity tests.

    Tall bumps and a deep isotropic floor keep the walk inside the data
    region over very long runs, which is the regime where the chain's
    stationary law matches the box-restricted density.
    """
    return MetricModel(
        dim=2,
        centroids=[[-1.0, 0.0], [1.0, 0.0]],
        factors=[np.eye(2) * 2.0, np.eye(2) * 2.0],
        temperature=0.8,
        regularization=1e-7,
    )


def wide_bowl_model() -> MetricModel:
    """Single wide bump: the volume element decays gently over several units.

    Used for the proposal-scale trade-off test, where larger velocities
    must genuinely reach lower-density territory.
    """
    return MetricModel(
        dim=2,
        centroids=[[0.0, 0.0]],
        factors=[np.eye(2)],
        temperature=2.0,
        regularization=1e-7,
    )


def random_model(rng: np.random.Generator, n_centroids: int | None = None, dim: int = 2) -> MetricModel:
    """Moderate random model: centroids near the origin, O(1) factors."""
    n = int(rng.integers(1, 4)) if n_centroids is None else n_centroids
    centroids = rng.uniform(-2.0, 2.0, size=(n, dim))
    factors = []
    for _ in range(n):
        mat = np.tril(rng.normal(0.0, 0.4, size=(dim, dim)))
        np.fill_diagonal(mat, np.abs(np.diag(mat)) + 0.5)
        factors.append(mat)
    return MetricModel(
        dim=dim,
        centroids=centroids,
        factors=np.asarray(factors),
        temperature=0.8,
        regularization=float(10.0 ** rng.uniform(-3, -2)),
    )


def random_spd(rng: np.random.Generator, dim: int = 2) -> SpdMatrix:
    a = rng.normal(size=(dim, dim))
    return SpdMatrix.from_entries(a @ a.T + 0.5 * np.eye(dim))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
