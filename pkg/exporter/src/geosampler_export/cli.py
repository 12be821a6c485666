"""Command-line entry point for the exporter."""

from __future__ import annotations

import argparse
import sys

from .export import CHECKPOINT_SPEC, ExportError, ExportManifest, export_bundle


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="geosampler-export",
        description="Convert a trained checkpoint into a geosampler bundle file.",
        epilog=CHECKPOINT_SPEC,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("checkpoint", help="torch checkpoint file")
    parser.add_argument("-o", "--output", required=True, help="output bundle path (.json)")
    parser.add_argument(
        "--fixture-count", type=int, default=8,
        help="number of decoder parity cases to record (default 8)",
    )
    parser.add_argument(
        "--tolerance", type=float, default=1e-5,
        help="agreement tolerance recorded into the fixture file (default 1e-5)",
    )
    args = parser.parse_args(argv)
    try:
        manifest = ExportManifest(
            checkpoint_path=args.checkpoint,
            output_bundle_path=args.output,
            fixture_count=args.fixture_count,
            tolerance=args.tolerance,
        )
        bundle_path, fixture_path = export_bundle(manifest)
    except (ExportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"bundle: {bundle_path}")
    if fixture_path is not None:
        print(f"fixtures: {fixture_path}")
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
