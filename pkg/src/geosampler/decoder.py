"""Feed-forward decoder inference.

Maps accepted latent points back to data space through a small MLP
(affine layers with relu/sigmoid/linear activations). Weights come from
a model bundle where they are stored as 32-bit floats; inference runs in
64-bit. Only the decoder mean is produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

ACTIVATIONS = ("relu", "sigmoid", "linear")


@dataclass(frozen=True)
class DecoderLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray    # (out,)
    activation: str


@dataclass(frozen=True)
class DecoderModel:
    """Ordered affine + activation layers; immutable after construction."""

    layers: tuple[DecoderLayer, ...]
    output_shape: tuple[int, int] | None = None

    def __post_init__(self):
        if not self.layers:
            raise ValueError("layers: decoder needs at least one layer")
        checked = []
        prev_out = None
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            weight = np.ascontiguousarray(layer.weight, dtype=np.float64)
            bias = np.ascontiguousarray(layer.bias, dtype=np.float64)
            if weight.ndim != 2:
                raise ValueError(f"layers[{i}].weight: expected a matrix, got shape {weight.shape}")
            if bias.shape != (weight.shape[0],):
                raise ValueError(
                    f"layers[{i}].bias: expected shape ({weight.shape[0]},), got {bias.shape}"
                )
            if not (np.isfinite(weight).all() and np.isfinite(bias).all()):
                raise ValueError(f"layers[{i}]: non-finite parameter values")
            if prev_out is not None and weight.shape[1] != prev_out:
                raise ValueError(
                    f"layers[{i}].weight: input size {weight.shape[1]} does not chain "
                    f"with previous output size {prev_out}"
                )
            if layer.activation not in ACTIVATIONS:
                raise ValueError(
                    f"layers[{i}].activation: unknown activation {layer.activation!r}"
                )
            if layer.activation == "sigmoid" and i != last:
                raise ValueError(
                    f"layers[{i}].activation: sigmoid is only valid on the final layer"
                )
            prev_out = weight.shape[0]
            weight.setflags(write=False)
            bias.setflags(write=False)
            checked.append(DecoderLayer(weight=weight, bias=bias, activation=layer.activation))
        if self.output_shape is not None:
            shape = tuple(int(s) for s in self.output_shape)
            if len(shape) != 2 or shape[0] * shape[1] != prev_out:
                raise ValueError(
                    f"output_shape: {shape} does not match output dimension {prev_out}"
                )
            object.__setattr__(self, "output_shape", shape)
        object.__setattr__(self, "layers", tuple(checked))

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]


def decode_batch(model: DecoderModel, zs) -> np.ndarray:
    """Decode a batch of latent points, shape (n, input_dim) -> (n, output_dim)."""
    x = np.asarray(zs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(
            f"expected latent batch of shape (n, {model.input_dim}), got {x.shape}"
        )
    for layer in model.layers:
        x = x @ layer.weight.T + layer.bias
        if layer.activation == "relu":
            x = np.maximum(x, 0.0)
        elif layer.activation == "sigmoid":
            x = expit(x)
    if not np.isfinite(x).all():
        raise ValueError("decoder produced non-finite output (corrupt weights?)")
    return x


def decode(model: DecoderModel, z) -> np.ndarray:
    """Decode a single latent point to a data-space vector."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (model.input_dim,):
        raise ValueError(
            f"expected a latent point of dimension {model.input_dim}, got shape {z.shape}"
        )
    return decode_batch(model, z[None, :])[0]
