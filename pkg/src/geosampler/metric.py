"""Learned Riemannian metric over a VAE latent space.

The inverse metric tensor is a sum of radial-basis bumps anchored at the
encoded training data plus an isotropic floor:

    Ginv(z) = sum_i L_i L_i^T exp(-||z - c_i||^2 / T^2) + lam * I

Each ``L_i`` is lower-triangular with positive diagonal, so every term is
SPD and the whole family is geodesically complete. Determinants and
inverses always go through the Cholesky factor of Ginv; the factorization
doubles as the positive-definiteness witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from ._backend import kernels


class PositiveDefiniteError(ValueError):
    """A matrix that must be SPD failed its Cholesky factorization."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpdMatrix:
    """Symmetric positive definite matrix with its cached Cholesky factor."""

    entries: np.ndarray
    chol: np.ndarray  # lower triangular, entries == chol @ chol.T

    @classmethod
    def from_entries(cls, entries) -> "SpdMatrix":
        entries = np.asarray(entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {entries.shape}")
        scale = max(np.abs(entries).max(), 1.0)
        if not np.allclose(entries, entries.T, rtol=0.0, atol=1e-12 * scale):
            raise ValueError("matrix is not symmetric within 1e-12 relative tolerance")
        try:
            chol = np.linalg.cholesky(entries)
        except np.linalg.LinAlgError as exc:
            raise PositiveDefiniteError(f"matrix is not positive definite: {exc}") from exc
        return cls(entries=_readonly(entries), chol=_readonly(chol))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve((self.chol, True), rhs)

    def inverse(self) -> "SpdMatrix":
        inv = self.solve(np.eye(self.dim))
        inv = 0.5 * (inv + inv.T)
        return SpdMatrix.from_entries(inv)


@dataclass(frozen=True)
class MetricModel:
    """Parameters of the latent metric, immutable after construction.

    ``factor_products`` caches ``L_i @ L_i.T`` and ``inv_t2`` caches
    ``1 / temperature**2``; both are what the evaluation kernels consume.
    """

    dim: int
    centroids: np.ndarray      # (N, dim)
    factors: np.ndarray        # (N, dim, dim), lower triangular
    temperature: float
    regularization: float
    factor_products: np.ndarray = field(init=False, repr=False, compare=False)
    inv_t2: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            raise ValueError(f"dim: must be a positive integer, got {self.dim!r}")
        centroids = np.asarray(self.centroids, dtype=np.float64)
        factors = np.asarray(self.factors, dtype=np.float64)
        if centroids.size == 0:
            centroids = centroids.reshape(0, self.dim)
        if factors.size == 0:
            factors = factors.reshape(0, self.dim, self.dim)
        if centroids.ndim != 2 or centroids.shape[1] != self.dim:
            raise ValueError(
                f"centroids: expected shape (N, {self.dim}), got {centroids.shape}"
            )
        if factors.shape != (centroids.shape[0], self.dim, self.dim):
            raise ValueError(
                f"factors: expected shape ({centroids.shape[0]}, {self.dim}, "
                f"{self.dim}) matching centroids, got {factors.shape}"
            )
        if not np.isfinite(centroids).all():
            raise ValueError("centroids: contain non-finite values")
        if not np.isfinite(factors).all():
            raise ValueError("factors: contain non-finite values")
        for i, mat in enumerate(factors):
            if np.any(np.triu(mat, k=1) != 0.0):
                raise ValueError(f"factors[{i}]: not lower-triangular")
            if np.any(np.diag(mat) <= 0.0):
                raise ValueError(f"factors[{i}]: diagonal must be strictly positive")
        if not (np.isfinite(self.temperature) and self.temperature > 0.0):
            raise ValueError(f"temperature: must be positive, got {self.temperature!r}")
        if not (np.isfinite(self.regularization) and self.regularization > 0.0):
            raise ValueError(
                f"regularization: must be positive, got {self.regularization!r}"
            )
        object.__setattr__(self, "centroids", _readonly(centroids))
        object.__setattr__(self, "factors", _readonly(factors))
        object.__setattr__(self, "temperature", float(self.temperature))
        object.__setattr__(self, "regularization", float(self.regularization))
        object.__setattr__(
            self, "factor_products", _readonly(factors @ factors.transpose(0, 2, 1))
        )
        object.__setattr__(self, "inv_t2", 1.0 / self.temperature**2)

    @property
    def n_centroids(self) -> int:
        return self.centroids.shape[0]


def _check_point(model: MetricModel, z, name: str = "z") -> np.ndarray:
    z = np.ascontiguousarray(z, dtype=np.float64)
    if z.shape != (model.dim,):
        raise ValueError(
            f"{name}: expected a point of dimension {model.dim}, got shape {z.shape}"
        )
    return z


def metric_inverse(model: MetricModel, z) -> SpdMatrix:
    """Evaluate Ginv(z)."""
    z = _check_point(model, z)
    entries = kernels.metric_inverse(
        model.centroids, model.factor_products, model.inv_t2, model.regularization, z
    )
    return SpdMatrix.from_entries(entries)


def metric(model: MetricModel, z) -> SpdMatrix:
    """Evaluate G(z), the matrix inverse of Ginv(z), via Cholesky."""
    return metric_inverse(model, z).inverse()


def log_volume_element(model: MetricModel, z) -> float:
    """log sqrt(det G(z)), computed as -sum(log diag chol(Ginv(z)))."""
    ginv = metric_inverse(model, z)
    return -float(np.sum(np.log(np.diag(ginv.chol))))


def grad_metric_inverse(model: MetricModel, z) -> np.ndarray:
    """Derivatives of Ginv at z, shape (dim, dim, dim); entry [k] is d Ginv / d z_k."""
    z = _check_point(model, z)
    return kernels.grad_metric_inverse(
        model.centroids, model.factor_products, model.inv_t2, model.regularization, z
    )


def log_det_metric_inverse_at(model: MetricModel, points: np.ndarray) -> np.ndarray:
    """Batched log det Ginv over rows of ``points`` (m, dim), vectorized in numpy.

    Used by the density oracle and the field export, where many thousands
    of cell centers are evaluated at once.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != model.dim:
        raise ValueError(
            f"points: expected shape (m, {model.dim}), got {points.shape}"
        )
    d = model.dim
    ginv = np.tile(model.regularization * np.eye(d), (points.shape[0], 1, 1))
    if model.n_centroids:
        diff = points[:, None, :] - model.centroids[None, :, :]  # (m, N, d)
        w = np.exp(-np.einsum("mij,mij->mi", diff, diff) * model.inv_t2)
        ginv += np.tensordot(w, model.factor_products, axes=([1], [0]))
    chol = np.linalg.cholesky(ginv)
    diag = np.diagonal(chol, axis1=1, axis2=2)
    return 2.0 * np.sum(np.log(diag), axis=1)
