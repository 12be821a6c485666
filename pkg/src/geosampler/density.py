"""Quadrature oracle for the chain's target density.

The target is the inverse-volume-element density sqrt(det Ginv(z)),
restricted to a compact axis-aligned box and normalized there. The grid
oracle evaluates it with the midpoint rule; it is deliberately limited to
dimension <= 3 and exists to brute-force-check what the sampler converges
to, not to scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .metric import MetricModel, log_det_metric_inverse_at

MAX_ORACLE_DIM = 3
MIN_RESOLUTION = 8


@dataclass(frozen=True)
class CompactBox:
    """Axis-aligned box: the compact set the target density lives on."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError(
                f"lower and upper must be 1-d and equal length, got "
                f"{lower.shape} and {upper.shape}"
            )
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, z) -> bool:
        z = np.asarray(z, dtype=np.float64)
        return bool(np.all(z >= self.lower) and np.all(z <= self.upper))


def default_box(model: MetricModel, padding_temperatures: float = 5.0) -> CompactBox:
    """Bounding box of the centroids padded by a multiple of the bandwidth.

    With no centroids the box is centered on the origin with the same
    padding, so a degenerate model still gets a usable compact set.
    """
    pad = padding_temperatures * model.temperature
    if model.n_centroids:
        lo = model.centroids.min(axis=0) - pad
        hi = model.centroids.max(axis=0) + pad
    else:
        lo = np.full(model.dim, -pad)
        hi = np.full(model.dim, pad)
    return CompactBox(lower=lo, upper=hi)


@dataclass(frozen=True)
class DensityGrid:
    """Midpoint-rule discretization of the normalized target on a box."""

    box: CompactBox
    resolution: tuple[int, ...]
    log_unnorm: np.ndarray   # per-cell log sqrt det Ginv at cell centers, flat C-order
    log_normalizer: float

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def cell_widths(self) -> np.ndarray:
        return (self.box.upper - self.box.lower) / np.asarray(self.resolution)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.cell_widths))

    def cell_centers(self) -> np.ndarray:
        """Centers of all cells, shape (n_cells, dim), C-order over axes."""
        axes = [
            self.box.lower[k] + (np.arange(self.resolution[k]) + 0.5) * self.cell_widths[k]
            for k in range(self.box.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def masses(self) -> np.ndarray:
        """Normalized probability mass per cell; sums to 1."""
        return np.exp(self.log_unnorm - self.log_normalizer) * self.cell_volume

    def cell_index(self, z) -> int:
        """Flat index of the cell containing z, or -1 if z is outside the box."""
        z = np.asarray(z, dtype=np.float64)
        if not self.box.contains(z):
            return -1
        idx = np.floor((z - self.box.lower) / self.cell_widths).astype(np.int64)
        idx = np.minimum(idx, np.asarray(self.resolution) - 1)  # upper face is inclusive
        return int(np.ravel_multi_index(idx, self.resolution))


def target_log_density_unnorm(model: MetricModel, z, box: CompactBox) -> float:
    """log of the unnormalized target: log sqrt det Ginv(z) inside the box, -inf outside."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (model.dim,):
        raise ValueError(f"z: expected a point of dimension {model.dim}, got shape {z.shape}")
    if box.dim != model.dim:
        raise ValueError(f"box dimension {box.dim} does not match model dim {model.dim}")
    if not box.contains(z):
        return float("-inf")
    return 0.5 * float(log_det_metric_inverse_at(model, z[None, :])[0])


def build_density_grid(model: MetricModel, box: CompactBox, resolution) -> DensityGrid:
    """Evaluate and normalize the target on a midpoint grid over the box."""
    if model.dim > MAX_ORACLE_DIM:
        raise ValueError(
            f"the quadrature oracle supports dimension <= {MAX_ORACLE_DIM}, "
            f"got model dim {model.dim}"
        )
    if box.dim != model.dim:
        raise ValueError(f"box dimension {box.dim} does not match model dim {model.dim}")
    if np.isscalar(resolution):
        resolution = (int(resolution),) * model.dim
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != model.dim:
        raise ValueError(
            f"resolution needs one entry per axis ({model.dim}), got {len(resolution)}"
        )
    if any(r < MIN_RESOLUTION for r in resolution):
        raise ValueError(
            f"resolution too coarse for the oracle: need >= {MIN_RESOLUTION} "
            f"cells per axis, got {resolution}"
        )
    grid = DensityGrid(
        box=box, resolution=resolution, log_unnorm=np.empty(0), log_normalizer=0.0
    )
    centers = grid.cell_centers()
    log_unnorm = 0.5 * log_det_metric_inverse_at(model, centers)
    log_normalizer = float(logsumexp(log_unnorm)) + float(np.log(grid.cell_volume))
    return DensityGrid(
        box=box,
        resolution=resolution,
        log_unnorm=log_unnorm,
        log_normalizer=log_normalizer,
    )


def tv_distance(grid: DensityGrid, samples) -> float:
    """Total-variation distance between the sample histogram and the oracle.

    Samples outside the box land in a discard bucket whose whole mass
    counts toward the distance (the oracle has none there).
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError(f"samples must be a nonempty (n, d) array, got shape {samples.shape}")
    if samples.shape[1] != grid.box.dim:
        raise ValueError(
            f"samples have dimension {samples.shape[1]}, grid expects {grid.box.dim}"
        )
    res = np.asarray(grid.resolution)
    widths = grid.cell_widths
    inside = np.all((samples >= grid.box.lower) & (samples <= grid.box.upper), axis=1)
    n_total = samples.shape[0]
    counts = np.zeros(grid.n_cells, dtype=np.int64)
    if inside.any():
        idx = np.floor((samples[inside] - grid.box.lower) / widths).astype(np.int64)
        idx = np.minimum(idx, res - 1)
        flat = np.ravel_multi_index(idx.T, grid.resolution)
        counts = np.bincount(flat, minlength=grid.n_cells)
    empirical = counts / n_total
    discarded = 1.0 - inside.mean()
    return 0.5 * (float(np.abs(empirical - grid.masses()).sum()) + discarded)
