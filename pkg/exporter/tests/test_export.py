import json
import subprocess
import sys

import numpy as np
import pytest
import torch

from geosampler_export import ExportError, ExportManifest, export_bundle


def metric_section(n=2, d=2, temperature=0.8, regularization=1e-3, seed=0):
    gen = torch.Generator().manual_seed(seed)
    factors = torch.tril(torch.randn(n, d, d, generator=gen) * 0.3)
    idx = torch.arange(d)
    factors[:, idx, idx] = factors[:, idx, idx].abs() + 0.5
    return {
        "centroids": torch.randn(n, d, generator=gen),
        "factors": factors,
        "temperature": torch.tensor(temperature, dtype=torch.float64),
        "regularization": regularization,
    }


def decoder_section(d=2, hidden=16, out=12, seed=1):
    gen = torch.Generator().manual_seed(seed)
    return {
        "layers": [
            {"weight": torch.randn(hidden, d, generator=gen) * 0.4,
             "bias": torch.randn(hidden, generator=gen) * 0.1, "activation": "relu"},
            {"weight": torch.randn(out, hidden, generator=gen) * 0.2,
             "bias": torch.randn(out, generator=gen) * 0.1, "activation": "sigmoid"},
        ],
        "output_shape": [3, 4],
    }


def write_checkpoint(path, **sections):
    torch.save(dict(sections), path)
    return path


def primary_validate(bundle_path):
    """Run the consumer's validator through its CLI, the exchange contract."""
    return subprocess.run(
        [sys.executable, "-m", "geosampler.cli", "validate", str(bundle_path)],
        capture_output=True, text=True,
    )


def has_primary() -> bool:
    probe = subprocess.run(
        [sys.executable, "-c", "import geosampler.cli"], capture_output=True
    )
    return probe.returncode == 0


needs_primary = pytest.mark.skipif(not has_primary(), reason="geosampler not installed")


class TestExportBundle:
    def test_minimal_metric_only_checkpoint(self, tmp_path):
        ckpt = write_checkpoint(
            tmp_path / "min.pt",
            metric={
                "centroids": torch.zeros(0, 2),
                "factors": torch.zeros(0, 2, 2),
                "temperature": 0.8,
                "regularization": 0.5,
            },
        )
        manifest = ExportManifest(checkpoint_path=ckpt, output_bundle_path=tmp_path / "b.json")
        bundle_path, fixture_path = export_bundle(manifest)
        assert fixture_path is None
        doc = json.loads(bundle_path.read_text())
        assert doc["format_version"] == 1
        assert doc["metric"]["centroids"] == []
        assert doc["decoder"] is None

    def test_paper_configuration_echo(self, tmp_path):
        # T and the regularization floor must land in the bundle unchanged
        ckpt = write_checkpoint(
            tmp_path / "c.pt", metric=metric_section(temperature=0.8, regularization=1e-3)
        )
        bundle_path, _ = export_bundle(
            ExportManifest(checkpoint_path=ckpt, output_bundle_path=tmp_path / "b.json")
        )
        doc = json.loads(bundle_path.read_text())
        assert doc["metric"]["temperature"] == 0.8
        assert doc["metric"]["regularization"] == 1e-3

    def test_decoder_fixture_replay_is_float32_consistent(self, tmp_path):
        ckpt = write_checkpoint(
            tmp_path / "c.pt", metric=metric_section(), decoder=decoder_section()
        )
        manifest = ExportManifest(
            checkpoint_path=ckpt, output_bundle_path=tmp_path / "b.json", fixture_count=5
        )
        _, fixture_path = export_bundle(manifest)
        fixture = json.loads(fixture_path.read_text())
        assert len(fixture["cases"]) == 5
        assert fixture["tolerance"] == 1e-5
        dec = decoder_section()
        for case in fixture["cases"]:
            z = torch.tensor(case["z"], dtype=torch.float32)
            x = z
            for layer in dec["layers"]:
                x = layer["weight"].float() @ x + layer["bias"].float()
                x = torch.relu(x) if layer["activation"] == "relu" else torch.sigmoid(x)
            np.testing.assert_array_equal(
                np.asarray(case["expected"], dtype=np.float32), x.numpy()
            )

    def test_deterministic_byte_identical(self, tmp_path):
        ckpt = write_checkpoint(
            tmp_path / "c.pt", metric=metric_section(), decoder=decoder_section()
        )
        paths = []
        for name in ("a", "b"):
            manifest = ExportManifest(
                checkpoint_path=ckpt, output_bundle_path=tmp_path / f"{name}.json"
            )
            paths.append(export_bundle(manifest))
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()

    def test_metadata_passthrough(self, tmp_path):
        ckpt = write_checkpoint(
            tmp_path / "c.pt", metric=metric_section(),
            metadata={"dataset": "oasis", "split": "train"},
        )
        bundle_path, _ = export_bundle(
            ExportManifest(checkpoint_path=ckpt, output_bundle_path=tmp_path / "b.json")
        )
        doc = json.loads(bundle_path.read_text())
        assert doc["metadata"] == {"dataset": "oasis", "split": "train"}


class TestCheckpointErrors:
    def test_missing_metric_tensor(self, tmp_path):
        section = metric_section()
        del section["centroids"]
        ckpt = write_checkpoint(tmp_path / "c.pt", metric=section)
        with pytest.raises(ExportError, match="metric.centroids"):
            export_bundle(ExportManifest(checkpoint_path=ckpt,
                                         output_bundle_path=tmp_path / "b.json"))

    def test_factor_count_mismatch(self, tmp_path):
        section = metric_section()
        section["factors"] = section["factors"][:1]
        ckpt = write_checkpoint(tmp_path / "c.pt", metric=section)
        with pytest.raises(ExportError, match="inconsistent"):
            export_bundle(ExportManifest(checkpoint_path=ckpt,
                                         output_bundle_path=tmp_path / "b.json"))

    def test_decoder_latent_mismatch(self, tmp_path):
        ckpt = write_checkpoint(
            tmp_path / "c.pt", metric=metric_section(d=2), decoder=decoder_section(d=3)
        )
        with pytest.raises(ExportError, match="latent dimension"):
            export_bundle(ExportManifest(checkpoint_path=ckpt,
                                         output_bundle_path=tmp_path / "b.json"))

    def test_layers_must_chain(self, tmp_path):
        dec = decoder_section()
        dec["layers"][1]["weight"] = torch.randn(12, 99)
        ckpt = write_checkpoint(tmp_path / "c.pt", metric=metric_section(), decoder=dec)
        with pytest.raises(ExportError, match="chain"):
            export_bundle(ExportManifest(checkpoint_path=ckpt,
                                         output_bundle_path=tmp_path / "b.json"))

    def test_fixture_count_must_be_positive(self, tmp_path):
        with pytest.raises(ValueError, match="fixture_count"):
            ExportManifest(checkpoint_path=tmp_path / "c.pt",
                           output_bundle_path=tmp_path / "b.json", fixture_count=0)


@needs_primary
class TestPrimaryContract:
    def test_exported_bundle_passes_primary_validator(self, tmp_path):
        ckpt = write_checkpoint(
            tmp_path / "c.pt", metric=metric_section(), decoder=decoder_section()
        )
        bundle_path, _ = export_bundle(
            ExportManifest(checkpoint_path=ckpt, output_bundle_path=tmp_path / "b.json")
        )
        proc = primary_validate(bundle_path)
        assert proc.returncode == 0, proc.stderr

    def test_minimal_bundle_passes_primary_validator(self, tmp_path):
        ckpt = write_checkpoint(
            tmp_path / "min.pt",
            metric={
                "centroids": torch.zeros(0, 2),
                "factors": torch.zeros(0, 2, 2),
                "temperature": 1.0,
                "regularization": 1.0,
            },
        )
        bundle_path, _ = export_bundle(
            ExportManifest(checkpoint_path=ckpt, output_bundle_path=tmp_path / "b.json")
        )
        assert primary_validate(bundle_path).returncode == 0

    def test_end_to_end_sample_and_decode(self, tmp_path):
        ckpt = write_checkpoint(
            tmp_path / "c.pt", metric=metric_section(), decoder=decoder_section()
        )
        bundle_path, _ = export_bundle(
            ExportManifest(checkpoint_path=ckpt, output_bundle_path=tmp_path / "b.json")
        )
        out = tmp_path / "samples.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "geosampler.cli", "sample", str(bundle_path),
             "-o", str(out), "--seed", "1", "--chain-length", "20",
             "--sigma-scale", "0.01", "--n-steps", "8", "--decode"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        header = out.read_text().splitlines()[0]
        assert header.endswith("x_11")


class TestCli:
    def test_cli_exports(self, tmp_path):
        from geosampler_export.cli import main

        ckpt = write_checkpoint(
            tmp_path / "c.pt", metric=metric_section(), decoder=decoder_section()
        )
        rc = main([str(ckpt), "-o", str(tmp_path / "b.json"), "--fixture-count", "3"])
        assert rc == 0
        assert (tmp_path / "b.json").exists()
        assert (tmp_path / "b.fixtures.json").exists()

    def test_cli_reports_errors(self, tmp_path):
        from geosampler_export.cli import main

        (tmp_path / "junk.pt").write_bytes(b"not a checkpoint")
        rc = main([str(tmp_path / "junk.pt"), "-o", str(tmp_path / "b.json")])
        assert rc == 1
