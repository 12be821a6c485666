"""Geometry-aware latent space sampling.

Samples the latent space of a geometry-aware VAE by shooting geodesics
under its learned Riemannian metric: wrapped-normal proposals fed into a
volume-element-weighted random walk, with a quadrature oracle to verify
what the chain targets, and a feed-forward decoder to map accepted
latents back to data space.
"""

from ._backend import BACKEND
from .decoder import DecoderLayer, DecoderModel, decode, decode_batch
from .density import (
    CompactBox,
    DensityGrid,
    build_density_grid,
    default_box,
    target_log_density_unnorm,
    tv_distance,
)
from .geodesics import (
    GeodesicPath,
    IntegrationError,
    IntegratorConfig,
    PhaseState,
    curve_length,
    exp_map,
    hamiltonian,
    hamiltonian_grads,
)
from .io import (
    BundleError,
    BundleParseError,
    BundleValidationError,
    BundleVersionError,
    ModelBundle,
    export_grid_csv,
    export_multi_chain_csv,
    export_samples_csv,
    load_bundle,
    read_grid_csv,
    save_bundle,
)
from .metric import (
    MetricModel,
    PositiveDefiniteError,
    SpdMatrix,
    grad_metric_inverse,
    log_volume_element,
    metric,
    metric_inverse,
)
from .sampling import (
    ChainConfig,
    ChainResult,
    WrappedNormalSpec,
    acceptance_ratio,
    riemannian_random_walk,
    wrapped_normal_sample,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BundleError",
    "BundleParseError",
    "BundleValidationError",
    "BundleVersionError",
    "ChainConfig",
    "ChainResult",
    "CompactBox",
    "DecoderLayer",
    "DecoderModel",
    "DensityGrid",
    "GeodesicPath",
    "IntegrationError",
    "IntegratorConfig",
    "MetricModel",
    "ModelBundle",
    "PhaseState",
    "PositiveDefiniteError",
    "SpdMatrix",
    "WrappedNormalSpec",
    "acceptance_ratio",
    "build_density_grid",
    "curve_length",
    "decode",
    "decode_batch",
    "default_box",
    "exp_map",
    "export_grid_csv",
    "export_multi_chain_csv",
    "export_samples_csv",
    "grad_metric_inverse",
    "hamiltonian",
    "hamiltonian_grads",
    "load_bundle",
    "log_volume_element",
    "metric",
    "metric_inverse",
    "read_grid_csv",
    "riemannian_random_walk",
    "save_bundle",
    "target_log_density_unnorm",
    "tv_distance",
    "wrapped_normal_sample",
]
