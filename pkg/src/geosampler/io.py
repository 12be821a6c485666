"""Portable file formats: model bundles and CSV exports.

A bundle is a single self-describing JSON document (format_version 1)
holding the metric, an optional decoder, and free-form metadata. All
matrices are nested row-major arrays; triangular factors are stored in
full with explicit zeros. Metric parameters are 64-bit; decoder weights
are 32-bit floats (values are rounded to float32 on save). Every invariant
is checked at load and violations are reported with the offending field's
path; a bad file is rejected, never repaired.

CSV exports render floats with ``repr``, so 64-bit values survive a
round-trip through text exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .decoder import ACTIVATIONS, DecoderLayer, DecoderModel
from .density import DensityGrid
from .metric import MetricModel
from .sampling import ChainResult

FORMAT_VERSION = 1


class BundleError(ValueError):
    """Base class for bundle file problems."""


class BundleParseError(BundleError):
    """The container itself is malformed (not valid JSON / not an object)."""


class BundleVersionError(BundleError):
    """The file declares an unsupported format_version."""


class BundleValidationError(BundleError):
    """A field violates its invariant; the message starts with the field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _wrap_validation(path_prefix: str, exc: ValueError) -> BundleValidationError:
    """Re-address a domain type's "field: problem" error under a bundle path."""
    msg = str(exc)
    if ": " in msg:
        fld, problem = msg.split(": ", 1)
        return BundleValidationError(f"{path_prefix}.{fld}", problem)
    return BundleValidationError(path_prefix, msg)


@dataclass(frozen=True)
class ModelBundle:
    metric: MetricModel
    decoder: DecoderModel | None = None
    metadata: dict[str, str] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.format_version != FORMAT_VERSION:
            raise BundleVersionError(
                f"format_version: expected {FORMAT_VERSION}, got {self.format_version!r}"
            )
        if self.decoder is not None and self.decoder.input_dim != self.metric.dim:
            raise BundleValidationError(
                "decoder", f"input dimension {self.decoder.input_dim} does not match "
                f"metric dim {self.metric.dim}"
            )
        if not all(
            isinstance(k, str) and isinstance(v, str) for k, v in self.metadata.items()
        ):
            raise BundleValidationError("metadata", "must map strings to strings")


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise BundleValidationError(f"{path}{key}" if path else key, "missing field")
    return obj[key]


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BundleValidationError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _as_array(value, path: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise BundleValidationError(path, "expected a nested numeric array") from None
    if arr.ndim != ndim:
        raise BundleValidationError(
            path, f"expected a {ndim}-dimensional array, got {arr.ndim} dimensions"
        )
    return arr


def _metric_from_dict(obj, path: str = "metric") -> MetricModel:
    if not isinstance(obj, dict):
        raise BundleValidationError(path, "expected an object")
    dim = _require(obj, "dim", f"{path}.")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise BundleValidationError(f"{path}.dim", f"expected a positive integer, got {dim!r}")
    n_raw = _require(obj, "centroids", f"{path}.")
    if not isinstance(n_raw, list):
        raise BundleValidationError(f"{path}.centroids", "expected a list of points")
    f_raw = _require(obj, "factors", f"{path}.")
    if not isinstance(f_raw, list):
        raise BundleValidationError(f"{path}.factors", "expected a list of matrices")
    if len(f_raw) != len(n_raw):
        raise BundleValidationError(
            f"{path}.factors", f"{len(f_raw)} factors for {len(n_raw)} centroids"
        )
    centroids = np.zeros((0, dim)) if not n_raw else _as_array(n_raw, f"{path}.centroids", 2)
    factors = np.zeros((0, dim, dim)) if not f_raw else _as_array(f_raw, f"{path}.factors", 3)
    temperature = _as_float(_require(obj, "temperature", f"{path}."), f"{path}.temperature")
    regularization = _as_float(
        _require(obj, "regularization", f"{path}."), f"{path}.regularization"
    )
    try:
        return MetricModel(
            dim=dim,
            centroids=centroids,
            factors=factors,
            temperature=temperature,
            regularization=regularization,
        )
    except ValueError as exc:
        # MetricModel reports "field: problem"; prefix the bundle path.
        raise _wrap_validation(path, exc) from exc


def _decoder_from_dict(obj, path: str = "decoder") -> DecoderModel:
    if not isinstance(obj, dict):
        raise BundleValidationError(path, "expected an object")
    layers_raw = _require(obj, "layers", f"{path}.")
    if not isinstance(layers_raw, list) or not layers_raw:
        raise BundleValidationError(f"{path}.layers", "expected a nonempty list of layers")
    layers = []
    for i, layer in enumerate(layers_raw):
        lp = f"{path}.layers[{i}]"
        if not isinstance(layer, dict):
            raise BundleValidationError(lp, "expected an object")
        weight = _as_array(_require(layer, "weight", f"{lp}."), f"{lp}.weight", 2)
        bias = _as_array(_require(layer, "bias", f"{lp}."), f"{lp}.bias", 1)
        activation = _require(layer, "activation", f"{lp}.")
        if activation not in ACTIVATIONS:
            raise BundleValidationError(f"{lp}.activation", f"unknown activation {activation!r}")
        layers.append(DecoderLayer(weight=weight, bias=bias, activation=activation))
    shape_raw = obj.get("output_shape")
    output_shape = None
    if shape_raw is not None:
        if (
            not isinstance(shape_raw, list)
            or len(shape_raw) != 2
            or not all(isinstance(s, int) and s > 0 for s in shape_raw)
        ):
            raise BundleValidationError(
                f"{path}.output_shape", "expected a pair of positive integers or null"
            )
        output_shape = (shape_raw[0], shape_raw[1])
    try:
        return DecoderModel(layers=tuple(layers), output_shape=output_shape)
    except ValueError as exc:
        raise _wrap_validation(path, exc) from exc


def load_bundle(path) -> ModelBundle:
    """Parse and fully validate a bundle file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise BundleParseError(f"malformed bundle container: {exc}") from exc
    if not isinstance(doc, dict):
        raise BundleParseError("bundle container must be a JSON object")
    version = _require(doc, "format_version", "")
    if version != FORMAT_VERSION:
        raise BundleVersionError(
            f"format_version: expected {FORMAT_VERSION}, got {version!r}"
        )
    metric = _metric_from_dict(_require(doc, "metric", ""))
    decoder_raw = doc.get("decoder")
    decoder = None if decoder_raw is None else _decoder_from_dict(decoder_raw)
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise BundleValidationError("metadata", "expected an object")
    try:
        return ModelBundle(metric=metric, decoder=decoder, metadata=dict(metadata))
    except BundleError:
        raise
    except ValueError as exc:
        raise _wrap_validation("bundle", exc) from exc


def save_bundle(bundle: ModelBundle, path) -> None:
    """Write a bundle as JSON; decoder parameters are rounded to float32."""
    doc = {
        "format_version": bundle.format_version,
        "metric": {
            "dim": bundle.metric.dim,
            "temperature": bundle.metric.temperature,
            "regularization": bundle.metric.regularization,
            "centroids": bundle.metric.centroids.tolist(),
            "factors": bundle.metric.factors.tolist(),
        },
        "decoder": None,
        "metadata": bundle.metadata,
    }
    if bundle.decoder is not None:
        doc["decoder"] = {
            "layers": [
                {
                    "weight": layer.weight.astype(np.float32).astype(float).tolist(),
                    "bias": layer.bias.astype(np.float32).astype(float).tolist(),
                    "activation": layer.activation,
                }
                for layer in bundle.decoder.layers
            ],
            "output_shape": (
                None if bundle.decoder.output_shape is None
                else list(bundle.decoder.output_shape)
            ),
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _fmt(x: float) -> str:
    return repr(float(x))


def export_samples_csv(result: ChainResult, decoded: np.ndarray | None, path) -> None:
    """Write retained samples as CSV.

    Columns: step_index, z_0..z_{d-1}, log_volume, accepted_flag, then
    x_0..x_{D-1} when decoded rows are given.
    """
    _write_samples_csv([result], None if decoded is None else [decoded], path, tag_chains=False)


def export_multi_chain_csv(results, decodeds, path) -> None:
    """Concatenate several chains into one CSV, tagged by a leading chain_id column."""
    _write_samples_csv(list(results), decodeds, path, tag_chains=True)


def _write_samples_csv(results, decodeds, path, tag_chains: bool) -> None:
    if decodeds is not None and len(decodeds) != len(results):
        raise ValueError("need one decoded block per chain result")
    first = results[0]
    d = first.samples.shape[1]
    header = [f"z_{k}" for k in range(d)]
    header = ["step_index"] + header + ["log_volume", "accepted_flag"]
    if decodeds is not None:
        n_out = np.asarray(decodeds[0]).shape[1]
        header += [f"x_{k}" for k in range(n_out)]
    if tag_chains:
        header = ["chain_id"] + header
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for chain_id, result in enumerate(results):
            decoded = None if decodeds is None else np.asarray(decodeds[chain_id])
            if decoded is not None and decoded.shape[0] != result.samples.shape[0]:
                raise ValueError(
                    f"decoded rows ({decoded.shape[0]}) do not match retained "
                    f"samples ({result.samples.shape[0]})"
                )
            for i in range(result.samples.shape[0]):
                step = int(result.retained_steps[i])
                row = [str(step)]
                row += [_fmt(x) for x in result.samples[i]]
                row.append(_fmt(result.log_volume_trace[step - 1]))
                row.append(str(int(result.retained_accepted[i])))
                if decoded is not None:
                    row += [_fmt(x) for x in decoded[i]]
                if tag_chains:
                    row = [str(chain_id)] + row
                writer.writerow(row)


def export_field_csv(centers: np.ndarray, values: np.ndarray, path) -> None:
    """Write a scalar field sampled at grid centers (columns z_*, log_volume)."""
    centers = np.asarray(centers, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"z_{k}" for k in range(centers.shape[1])] + ["log_volume"])
        for i in range(centers.shape[0]):
            writer.writerow([_fmt(x) for x in centers[i]] + [_fmt(values[i])])


def export_grid_csv(grid: DensityGrid, path) -> None:
    """Write cell centers and normalized density values as CSV."""
    centers = grid.cell_centers()
    density = np.exp(grid.log_unnorm - grid.log_normalizer)
    d = centers.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"z_{k}" for k in range(d)] + ["density"])
        for i in range(centers.shape[0]):
            writer.writerow([_fmt(x) for x in centers[i]] + [_fmt(density[i])])


def read_grid_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse a grid CSV back into (cell centers, density values)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "density":
            raise ValueError("not a grid CSV: missing density column")
        centers, density = [], []
        for row in reader:
            centers.append([float(x) for x in row[:-1]])
            density.append(float(row[-1]))
    return np.asarray(centers), np.asarray(density)
