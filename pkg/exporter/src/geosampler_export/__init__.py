"""Checkpoint-to-bundle exporter.

Reads trained geometry-aware VAE checkpoints (torch files holding the
latent metric parameters and decoder weights) and writes version-1
geosampler bundle files plus decoder parity fixtures: reference
(z, decoded) pairs computed by the source framework, replayed by the
consumer's test suite. The exporter is a pure format shim; it never
evaluates the metric or integrates geodesics.
"""

from .export import CHECKPOINT_SPEC, ExportError, ExportManifest, export_bundle, load_checkpoint

__all__ = [
    "CHECKPOINT_SPEC",
    "ExportError",
    "ExportManifest",
    "export_bundle",
    "load_checkpoint",
]
