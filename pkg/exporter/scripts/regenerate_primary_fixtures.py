#!/usr/bin/env python3
"""Regenerate the decoder parity fixtures committed in the consumer's suite.

Builds the canonical demo checkpoint (a small relu/sigmoid decoder over a
2-centroid metric), exports it, and drops the bundle + fixture files into
../../tests/fixtures/. Run from anywhere:

    python exporter/scripts/regenerate_primary_fixtures.py
"""

import tempfile
from pathlib import Path

import torch

from geosampler_export import ExportManifest, export_bundle

FIXTURE_DIR = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def demo_checkpoint() -> dict:
    torch.manual_seed(90311)
    return {
        "metric": {
            "centroids": torch.tensor([[-1.0, 0.0], [1.0, 0.0]]),
            "factors": torch.stack([torch.eye(2), torch.eye(2)]),
            "temperature": 0.8,
            "regularization": 1e-3,
        },
        "decoder": {
            "layers": [
                {"weight": torch.randn(400, 2) * 0.5, "bias": torch.randn(400) * 0.1,
                 "activation": "relu"},
                {"weight": torch.randn(64, 400) * 0.05, "bias": torch.randn(64) * 0.1,
                 "activation": "sigmoid"},
            ],
            "output_shape": [8, 8],
        },
        "metadata": {"dataset": "parity-fixture", "source": "checkpoint export"},
    }


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        ckpt_path = Path(tmp) / "demo.pt"
        torch.save(demo_checkpoint(), ckpt_path)
        manifest = ExportManifest(
            checkpoint_path=ckpt_path,
            output_bundle_path=FIXTURE_DIR / "decoder_parity_bundle.json",
            fixture_count=8,
            tolerance=1e-5,
        )
        bundle_path, fixture_path = export_bundle(manifest)
    # the fixture file name follows the bundle stem; keep the historical name
    canonical = FIXTURE_DIR / "decoder_parity_fixture.json"
    fixture_path.replace(canonical)
    print(f"wrote {bundle_path}")
    print(f"wrote {canonical}")


if __name__ == "__main__":
    main()
