"""Geodesic flow under the learned metric.

Geodesics are integrated in Hamiltonian form, H(p, q) = q^T Ginv(p) q / 2,
where the position p lives on the manifold and q = G p' is the momentum.
The exponential map runs a fixed number of explicit-midpoint (RK2) steps
over unit time; the single metric inversion happens at initialization when
the starting velocity is converted to a momentum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .metric import MetricModel, _check_point, metric_inverse


class IntegrationError(RuntimeError):
    """Non-finite state encountered mid-integration.

    Signals an ill-conditioned model or a too-large initial velocity; the
    integration is aborted rather than clamped so a sampler never sees a
    silently corrupted proposal.
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite state at integration step {step}")


@dataclass(frozen=True)
class PhaseState:
    """Position/momentum pair evolved by the geodesic integrator."""

    position: np.ndarray
    momentum: np.ndarray

    def __post_init__(self):
        position = np.ascontiguousarray(self.position, dtype=np.float64)
        momentum = np.ascontiguousarray(self.momentum, dtype=np.float64)
        if position.ndim != 1 or position.shape != momentum.shape:
            raise ValueError(
                "position and momentum must be 1-d arrays of equal length, got "
                f"{position.shape} and {momentum.shape}"
            )
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "momentum", momentum)


@dataclass(frozen=True)
class IntegratorConfig:
    """Resolution of the exponential-map integrator.

    ``n_steps`` midpoint steps cover unit time. ``record_path`` keeps every
    intermediate position (and momentum) instead of just the endpoints.
    """

    n_steps: int = 100
    record_path: bool = False

    def __post_init__(self):
        if not (isinstance(self.n_steps, (int, np.integer)) and self.n_steps >= 1):
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps!r}")


@dataclass(frozen=True)
class GeodesicPath:
    """Integrated geodesic: recorded positions plus boundary data.

    ``points`` has n_steps + 1 rows when the path was recorded, otherwise
    just the start and the endpoint. ``momenta`` mirrors ``points`` row for
    row; the final momentum is what a reversed integration needs.
    """

    points: np.ndarray
    momenta: np.ndarray
    endpoint: np.ndarray
    initial_velocity: np.ndarray
    final_momentum: np.ndarray


def hamiltonian(model: MetricModel, state: PhaseState) -> float:
    """Kinetic energy q^T Ginv(p) q / 2 of a phase point."""
    p = _check_point(model, state.position, "position")
    q = _check_point(model, state.momentum, "momentum")
    ginv = kernels.metric_inverse(
        model.centroids, model.factor_products, model.inv_t2, model.regularization, p
    )
    return 0.5 * float(q @ ginv @ q)


def hamiltonian_grads(model: MetricModel, state: PhaseState) -> tuple[np.ndarray, np.ndarray]:
    """Gradients (dH/dp, dH/dq) driving the geodesic equations."""
    p = _check_point(model, state.position, "position")
    q = _check_point(model, state.momentum, "momentum")
    return kernels.hamiltonian_grads(
        model.centroids, model.factor_products, model.inv_t2, model.regularization, p, q
    )


def exp_map(model: MetricModel, z0, v, cfg: IntegratorConfig = IntegratorConfig()) -> GeodesicPath:
    """Shoot the geodesic from z0 with initial velocity v up to time 1.

    The initial momentum is q0 = G(z0) v, obtained by solving Ginv(z0) q = v
    through the cached Cholesky factor. Raises :class:`IntegrationError` if
    the state turns non-finite.
    """
    z0 = _check_point(model, z0, "z0")
    v = _check_point(model, v, "v")
    q0 = np.ascontiguousarray(metric_inverse(model, z0).solve(v))
    return _integrate(model, z0, v, q0, cfg)


def _integrate(model: MetricModel, z0, v, q0, cfg: IntegratorConfig) -> GeodesicPath:
    path, momenta, p_end, q_end, fail_step = kernels.exp_map(
        model.centroids,
        model.factor_products,
        model.inv_t2,
        model.regularization,
        z0,
        q0,
        cfg.n_steps,
        cfg.record_path,
    )
    if fail_step != -1:
        raise IntegrationError(fail_step)
    if path is None:
        path = np.stack([z0, p_end])
        momenta = np.stack([q0, q_end])
    return GeodesicPath(
        points=path,
        momenta=momenta,
        endpoint=p_end,
        initial_velocity=v.copy(),
        final_momentum=q_end,
    )


def curve_length(model: MetricModel, path: GeodesicPath) -> float:
    """Discrete length of a path: sum of sqrt(step^T G(midpoint) step).

    The metric at each segment midpoint is applied through a Cholesky
    solve of Ginv, so no inverse is ever formed.
    """
    points = np.asarray(path.points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError("path must contain at least 2 points")
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        step = b - a
        mid = 0.5 * (a + b)
        total += float(np.sqrt(step @ metric_inverse(model, mid).solve(step)))
    return total
