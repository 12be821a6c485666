"""Bundle export and fixture generation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

BUNDLE_FORMAT_VERSION = 1
FIXTURE_SEED = 1234
ACTIVATIONS = ("relu", "sigmoid", "linear")

CHECKPOINT_SPEC = """\
A checkpoint is a torch-saved dict:

  metric:
    centroids        float tensor (N, d)
    factors          float tensor (N, d, d), lower triangular
    temperature      positive scalar
    regularization   positive scalar
  decoder:           optional
    layers           list of {weight (out, in), bias (out,), activation}
    output_shape     optional [height, width]
  metadata:          optional {str: str}
"""


class ExportError(ValueError):
    """Checkpoint is missing tensors or is dimensionally inconsistent."""


@dataclass(frozen=True)
class ExportManifest:
    """What to export and where to put it."""

    checkpoint_path: str | Path
    output_bundle_path: str | Path
    fixture_count: int = 8
    tolerance: float = 1e-5

    def __post_init__(self):
        if self.fixture_count < 1:
            raise ValueError(f"fixture_count must be >= 1, got {self.fixture_count}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")

    @property
    def output_fixture_path(self) -> Path:
        path = Path(self.output_bundle_path)
        return path.with_name(path.stem + ".fixtures.json")


def _require(mapping, key, where):
    if key not in mapping:
        raise ExportError(f"{where}.{key}: missing from checkpoint")
    return mapping[key]


def _tensor(value, where, ndim):
    if not torch.is_tensor(value):
        raise ExportError(f"{where}: expected a tensor, got {type(value).__name__}")
    if value.dim() != ndim:
        raise ExportError(f"{where}: expected {ndim} dimensions, got {value.dim()}")
    return value.detach().to(torch.float64).cpu()


def _scalar(value, where) -> float:
    if torch.is_tensor(value):
        if value.numel() != 1:
            raise ExportError(f"{where}: expected a scalar, got shape {tuple(value.shape)}")
        return float(value.item())
    if isinstance(value, (int, float)):
        return float(value)
    raise ExportError(f"{where}: expected a number, got {type(value).__name__}")


def load_checkpoint(path) -> dict:
    try:
        doc = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ExportError(f"cannot read checkpoint: {exc}") from exc
    if not isinstance(doc, dict) or "metric" not in doc:
        raise ExportError("checkpoint must be a dict with a 'metric' entry")
    return doc


def _metric_section(checkpoint) -> dict:
    raw = _require(checkpoint, "metric", "checkpoint")
    if not isinstance(raw, dict):
        raise ExportError("metric: expected a dict of tensors")
    centroids = _tensor(_require(raw, "centroids", "metric"), "metric.centroids", 2)
    factors = _tensor(_require(raw, "factors", "metric"), "metric.factors", 3)
    n, d = centroids.shape
    if factors.shape != (n, d, d):
        raise ExportError(
            f"metric.factors: shape {tuple(factors.shape)} inconsistent with "
            f"{n} centroids of dimension {d}"
        )
    temperature = _scalar(_require(raw, "temperature", "metric"), "metric.temperature")
    regularization = _scalar(
        _require(raw, "regularization", "metric"), "metric.regularization"
    )
    return {
        "dim": d,
        "temperature": temperature,
        "regularization": regularization,
        "centroids": centroids.numpy().tolist(),
        "factors": factors.numpy().tolist(),
    }


def _decoder_section(checkpoint) -> tuple[dict | None, list | None]:
    """Returns (bundle decoder section, torch float32 layers for replay)."""
    raw = checkpoint.get("decoder")
    if raw is None:
        return None, None
    if not isinstance(raw, dict) or not isinstance(raw.get("layers"), list) or not raw["layers"]:
        raise ExportError("decoder.layers: expected a nonempty list")
    layers_doc = []
    torch_layers = []
    prev_out = None
    for i, layer in enumerate(raw["layers"]):
        where = f"decoder.layers[{i}]"
        if not isinstance(layer, dict):
            raise ExportError(f"{where}: expected a dict")
        weight = _require(layer, "weight", where)
        bias = _require(layer, "bias", where)
        if not torch.is_tensor(weight) or weight.dim() != 2:
            raise ExportError(f"{where}.weight: expected a 2-d tensor")
        if not torch.is_tensor(bias) or bias.dim() != 1:
            raise ExportError(f"{where}.bias: expected a 1-d tensor")
        weight = weight.detach().to(torch.float32).cpu()
        bias = bias.detach().to(torch.float32).cpu()
        if bias.shape[0] != weight.shape[0]:
            raise ExportError(
                f"{where}: bias length {bias.shape[0]} does not match "
                f"weight rows {weight.shape[0]}"
            )
        if prev_out is not None and weight.shape[1] != prev_out:
            raise ExportError(
                f"{where}: input size {weight.shape[1]} does not chain with "
                f"previous output {prev_out}"
            )
        prev_out = weight.shape[0]
        activation = _require(layer, "activation", where)
        if activation not in ACTIVATIONS:
            raise ExportError(f"{where}.activation: unknown activation {activation!r}")
        layers_doc.append({
            "weight": [[float(v) for v in row] for row in weight.numpy()],
            "bias": [float(v) for v in bias.numpy()],
            "activation": activation,
        })
        torch_layers.append((weight, bias, activation))
    shape = raw.get("output_shape")
    if shape is not None:
        shape = [int(s) for s in shape]
        if len(shape) != 2 or shape[0] * shape[1] != prev_out:
            raise ExportError(
                f"decoder.output_shape: {shape} does not match output size {prev_out}"
            )
    return {"layers": layers_doc, "output_shape": shape}, torch_layers


def _replay(torch_layers, z: torch.Tensor) -> torch.Tensor:
    """Reference decode in the source framework's precision (float32)."""
    x = z
    for weight, bias, activation in torch_layers:
        x = weight @ x + bias
        if activation == "relu":
            x = torch.relu(x)
        elif activation == "sigmoid":
            x = torch.sigmoid(x)
    return x


def export_bundle(manifest: ExportManifest) -> tuple[Path, Path | None]:
    """Convert one checkpoint; returns (bundle path, fixture path or None).

    The fixture file is only produced when the checkpoint has a decoder:
    it records reference (z, decoded) pairs computed here in float32, the
    framework precision the weights were trained in.
    """
    checkpoint = load_checkpoint(manifest.checkpoint_path)
    metric_doc = _metric_section(checkpoint)
    decoder_doc, torch_layers = _decoder_section(checkpoint)
    if decoder_doc is not None and torch_layers[0][0].shape[1] != metric_doc["dim"]:
        raise ExportError(
            f"decoder.layers[0]: input size {torch_layers[0][0].shape[1]} does not "
            f"match latent dimension {metric_doc['dim']}"
        )
    metadata = checkpoint.get("metadata", {})
    if not (isinstance(metadata, dict)
            and all(isinstance(k, str) and isinstance(v, str) for k, v in metadata.items())):
        raise ExportError("metadata: expected a dict of strings")

    bundle_doc = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "metric": metric_doc,
        "decoder": decoder_doc,
        "metadata": metadata,
    }
    bundle_path = Path(manifest.output_bundle_path)
    with open(bundle_path, "w", encoding="utf-8") as fh:
        json.dump(bundle_doc, fh, indent=1)
        fh.write("\n")

    if decoder_doc is None:
        return bundle_path, None

    gen = torch.Generator().manual_seed(FIXTURE_SEED)
    zs = torch.randn(manifest.fixture_count, metric_doc["dim"], generator=gen).float()
    cases = []
    for i in range(zs.shape[0]):
        out = _replay(torch_layers, zs[i])
        cases.append({
            "z": [float(v) for v in zs[i].numpy().astype(np.float32)],
            "expected": [float(v) for v in out.numpy().astype(np.float32)],
        })
    fixture_path = manifest.output_fixture_path
    with open(fixture_path, "w", encoding="utf-8") as fh:
        json.dump({"tolerance": manifest.tolerance, "cases": cases}, fh, indent=1)
        fh.write("\n")
    return bundle_path, fixture_path
