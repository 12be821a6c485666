"""Latent-space sampling: wrapped normal draws and the geometry-aware walk.

A wrapped normal draw takes a tangent velocity v ~ N(0, Sigma) and pushes
it onto the manifold through the exponential map. The random walk chains
such proposals and accepts each one with probability

    alpha = min(1, sqrt(det Ginv(proposal) / det Ginv(current))),

so moves toward low-volume-element regions (where the data lives) are
always accepted and moves away are penalized, in Hastings-Metropolis
fashion. For small Sigma the chain targets the inverse-volume-element
density restricted to a compact set; :mod:`geosampler.density` provides
the quadrature oracle that checks this.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from ._backend import kernels
from .geodesics import IntegrationError, IntegratorConfig
from .metric import MetricModel, SpdMatrix, _check_point


@dataclass(frozen=True)
class WrappedNormalSpec:
    """Base point on the manifold plus the tangent-space covariance."""

    base_point: np.ndarray
    covariance: SpdMatrix

    def __post_init__(self):
        base = np.ascontiguousarray(self.base_point, dtype=np.float64)
        if base.ndim != 1 or base.shape[0] != self.covariance.dim:
            raise ValueError(
                f"base_point shape {base.shape} does not match covariance "
                f"dimension {self.covariance.dim}"
            )
        object.__setattr__(self, "base_point", base)


@dataclass(frozen=True)
class ChainConfig:
    """Random-walk settings. ``burn_in=None`` resolves to 10% of the length."""

    chain_length: int
    covariance: SpdMatrix
    seed: int = 0
    burn_in: int | None = None
    thinning: int = 1
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        if not (isinstance(self.chain_length, (int, np.integer)) and self.chain_length >= 1):
            raise ValueError(f"chain_length must be positive, got {self.chain_length!r}")
        burn_in = self.chain_length // 10 if self.burn_in is None else int(self.burn_in)
        if burn_in < 0:
            raise ValueError(f"burn_in must be nonnegative, got {burn_in}")
        if burn_in >= self.chain_length:
            raise ValueError(
                f"burn_in {burn_in} >= chain_length {self.chain_length}: "
                "no samples would be retained"
            )
        if not (isinstance(self.thinning, (int, np.integer)) and self.thinning >= 1):
            raise ValueError(f"thinning must be >= 1, got {self.thinning!r}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        object.__setattr__(self, "burn_in", burn_in)
        object.__setattr__(self, "thinning", int(self.thinning))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class ChainResult:
    """Retained samples plus diagnostics of one chain run."""

    samples: np.ndarray          # (n_retained, d)
    acceptance_rate: float
    proposals_total: int
    log_volume_trace: np.ndarray  # (chain_length,) log sqrt det G of each state
    seed: int
    retained_steps: np.ndarray   # (n_retained,) 1-based chain step of each sample
    retained_accepted: np.ndarray  # (n_retained,) 1 if that step's proposal was accepted


def wrapped_normal_sample(
    model: MetricModel,
    spec: WrappedNormalSpec,
    cfg: IntegratorConfig = IntegratorConfig(),
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """One draw from the wrapped normal at ``spec.base_point``.

    Draws v = chol(Sigma) eps with eps standard normal and returns the
    endpoint of the geodesic shot along v.
    """
    from .geodesics import exp_map

    if spec.covariance.dim != model.dim:
        raise ValueError(
            f"covariance dimension {spec.covariance.dim} does not match model dim {model.dim}"
        )
    rng = np.random.default_rng() if rng is None else rng
    v = spec.covariance.chol @ rng.standard_normal(model.dim)
    return exp_map(model, spec.base_point, v, cfg).endpoint


def acceptance_ratio(model: MetricModel, current, proposal) -> float:
    """min(1, sqrt(det Ginv(proposal) / det Ginv(current))), in log space."""
    log_ratio = 0.5 * (
        _log_det_metric_inverse(model, _check_point(model, proposal, "proposal"))
        - _log_det_metric_inverse(model, _check_point(model, current, "current"))
    )
    return float(np.exp(min(0.0, log_ratio)))


def _log_det_metric_inverse(model: MetricModel, z: np.ndarray) -> float:
    ginv = kernels.metric_inverse(
        model.centroids, model.factor_products, model.inv_t2, model.regularization, z
    )
    return 2.0 * float(np.sum(np.log(np.diag(np.linalg.cholesky(ginv)))))


def riemannian_random_walk(
    model: MetricModel,
    z0,
    cfg: ChainConfig,
    support=None,
) -> ChainResult:
    """Run the wrapped-normal random walk for ``cfg.chain_length`` steps.

    Each step draws a velocity from N(0, Sigma), shoots a geodesic from the
    current state, and accepts the endpoint with the volume-element ratio;
    on rejection the current state repeats. The RNG stream is consumed in
    a fixed order (velocity vector, then one uniform) so runs are
    reproducible and chains parallelize by seed.

    ``support`` optionally restricts the target to a compact box: proposals
    landing outside get zero target density and are always rejected. The
    plain walk (``support=None``) never references any compact set.
    """
    z0 = _check_point(model, z0, "z0")
    if cfg.covariance.dim != model.dim:
        raise ValueError(
            f"covariance dimension {cfg.covariance.dim} does not match model dim {model.dim}"
        )
    rng = np.random.default_rng(cfg.seed)
    sigma_chol = cfg.covariance.chol
    n_steps = cfg.integrator.n_steps
    centroids = model.centroids
    products = model.factor_products
    inv_t2 = model.inv_t2
    lam = model.regularization

    current = z0.copy()
    ginv = kernels.metric_inverse(centroids, products, inv_t2, lam, current)
    chol = np.linalg.cholesky(ginv)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))

    chain_length = cfg.chain_length
    log_volume_trace = np.empty(chain_length)
    n_retained = 1 + (chain_length - cfg.burn_in - 1) // cfg.thinning
    samples = np.empty((n_retained, model.dim))
    retained_steps = np.empty(n_retained, dtype=np.int64)
    retained_accepted = np.empty(n_retained, dtype=np.int64)
    accepted_total = 0

    for t in range(1, chain_length + 1):
        v = sigma_chol @ rng.standard_normal(model.dim)
        u = rng.random()
        # q0 = G(current) v through the cached Cholesky of Ginv(current)
        q0 = np.ascontiguousarray(cho_solve((chol, True), v))
        _, _, proposal, _, fail_step = kernels.exp_map(
            centroids, products, inv_t2, lam, current, q0, n_steps, False
        )
        if fail_step != -1:
            raise IntegrationError(
                fail_step, f"chain aborted at step {t}: non-finite state "
                f"at integration step {fail_step}"
            )
        inside = support is None or support.contains(proposal)
        if inside:
            ginv_prop = kernels.metric_inverse(centroids, products, inv_t2, lam, proposal)
            chol_prop = np.linalg.cholesky(ginv_prop)
            logdet_prop = 2.0 * float(np.sum(np.log(np.diag(chol_prop))))
            accept = u < np.exp(min(0.0, 0.5 * (logdet_prop - logdet)))
        else:
            accept = False
        if accept:
            current = proposal
            chol = chol_prop
            logdet = logdet_prop
            accepted_total += 1
        log_volume_trace[t - 1] = -0.5 * logdet
        offset = t - cfg.burn_in - 1
        if offset >= 0 and offset % cfg.thinning == 0:
            idx = offset // cfg.thinning
            samples[idx] = current
            retained_steps[idx] = t
            retained_accepted[idx] = 1 if accept else 0

    return ChainResult(
        samples=samples,
        acceptance_rate=accepted_total / chain_length,
        proposals_total=chain_length,
        log_volume_trace=log_volume_trace,
        seed=cfg.seed,
        retained_steps=retained_steps,
        retained_accepted=retained_accepted,
    )
