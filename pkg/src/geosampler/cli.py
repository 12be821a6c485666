"""Command-line surface.

Subcommands wire bundle files to sampling runs and CSV exports:

  sample        run the random walk, optionally decode, write samples CSV
  shoot         export geodesic traces for given start points / velocities
  field         export the log volume element on a 2-d grid
  oracle-check  compare the chain against the quadrature oracle (TV test)
  validate      load and fully check a bundle file

Exit codes: 0 success, 1 oracle-check exceeded its threshold, 2 bad
flags/usage, 3 bad model file, 4 integration failure. Every subcommand is
deterministic given its flags (including --seed); timing goes to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .decoder import decode_batch
from .density import CompactBox, build_density_grid, default_box, tv_distance
from .geodesics import IntegrationError, IntegratorConfig, exp_map
from .io import (
    BundleError,
    ModelBundle,
    export_field_csv,
    export_multi_chain_csv,
    export_samples_csv,
    load_bundle,
)
from .metric import MetricModel, PositiveDefiniteError, SpdMatrix, log_det_metric_inverse_at
from .sampling import ChainConfig, riemannian_random_walk

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_USAGE = 2
EXIT_BAD_MODEL = 3
EXIT_INTEGRATION = 4


class UsageError(ValueError):
    """Flag combination or flag value the parser itself cannot catch."""


def _parse_point(text: str, dim: int, what: str) -> np.ndarray:
    try:
        values = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if len(values) != dim:
        raise UsageError(f"{what}: expected {dim} coordinates, got {len(values)}")
    return np.asarray(values)


def _parse_box(text: str | None, model: MetricModel) -> CompactBox:
    if text is None:
        return default_box(model)
    parts = text.split(",")
    if len(parts) != model.dim:
        raise UsageError(
            f"--box: expected {model.dim} comma-separated lo:hi ranges, got {len(parts)}"
        )
    lo, hi = [], []
    for part in parts:
        bounds = part.split(":")
        if len(bounds) != 2:
            raise UsageError(f"--box: malformed range {part!r}, expected lo:hi")
        try:
            lo.append(float(bounds[0]))
            hi.append(float(bounds[1]))
        except ValueError:
            raise UsageError(f"--box: non-numeric bound in {part!r}") from None
    try:
        return CompactBox(lower=lo, upper=hi)
    except ValueError as exc:
        raise UsageError(f"--box: {exc}") from None


def _parse_resolution(text: str, dim: int) -> tuple[int, ...]:
    try:
        values = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--resolution: expected integers, got {text!r}") from None
    if len(values) == 1:
        values = values * dim
    if len(values) != dim or any(v < 1 for v in values):
        raise UsageError(f"--resolution: need {dim} positive counts, got {text!r}")
    return tuple(values)


def _covariance(args, dim: int) -> SpdMatrix:
    if args.sigma_file is not None:
        try:
            with open(args.sigma_file, "r", encoding="utf-8") as fh:
                mat = np.asarray(json.load(fh), dtype=np.float64)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise UsageError(f"--sigma-file: cannot read matrix: {exc}") from None
        if mat.shape != (dim, dim):
            raise UsageError(f"--sigma-file: expected a {dim}x{dim} matrix, got {mat.shape}")
        try:
            return SpdMatrix.from_entries(mat)
        except (ValueError, PositiveDefiniteError) as exc:
            raise UsageError(f"--sigma-file: {exc}") from None
    if args.sigma_scale <= 0:
        raise UsageError(f"--sigma-scale: must be positive, got {args.sigma_scale}")
    return SpdMatrix.from_entries(args.sigma_scale * np.eye(dim))


def _start_point(args, model: MetricModel) -> np.ndarray:
    if args.start is not None:
        return _parse_point(args.start, model.dim, "--start")
    if model.n_centroids == 0:
        return np.zeros(model.dim)
    center = model.centroids.mean(axis=0)
    nearest = int(np.argmin(np.linalg.norm(model.centroids - center, axis=1)))
    return model.centroids[nearest].copy()


def _load(path) -> ModelBundle:
    try:
        return load_bundle(path)
    except BundleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_MODEL) from None
    except OSError as exc:
        print(f"error: cannot read model file: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_MODEL) from None


def _max_threads(requested: int) -> int:
    cap = os.environ.get("GEOSAMPLER_THREADS")
    if cap is not None:
        try:
            cap_val = max(1, int(cap))
        except ValueError:
            raise UsageError(f"GEOSAMPLER_THREADS: not an integer: {cap!r}") from None
        return min(requested, cap_val)
    return min(requested, os.cpu_count() or 1)


def cmd_sample(args) -> int:
    bundle = _load(args.model)
    model = bundle.metric
    cov = _covariance(args, model.dim)
    z0 = _start_point(args, model)
    if args.decode and bundle.decoder is None:
        raise UsageError("--decode: bundle has no decoder")
    if args.chains < 1:
        raise UsageError(f"--chains: must be >= 1, got {args.chains}")
    integrator = IntegratorConfig(n_steps=args.n_steps)

    def one_chain(chain_id: int):
        cfg = ChainConfig(
            chain_length=args.chain_length,
            covariance=cov,
            seed=args.seed + chain_id,
            burn_in=args.burn_in,
            thinning=args.thinning,
            integrator=integrator,
        )
        return riemannian_random_walk(model, z0, cfg)

    t0 = time.perf_counter()
    try:
        if args.chains == 1:
            results = [one_chain(0)]
        else:
            with ThreadPoolExecutor(max_workers=_max_threads(args.chains)) as pool:
                results = list(pool.map(one_chain, range(args.chains)))
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    decodeds = None
    if args.decode:
        decodeds = [decode_batch(bundle.decoder, r.samples) for r in results]
    if args.chains == 1:
        export_samples_csv(results[0], None if decodeds is None else decodeds[0], args.output)
    else:
        export_multi_chain_csv(results, decodeds, args.output)
    elapsed = time.perf_counter() - t0
    rate = float(np.mean([r.acceptance_rate for r in results]))
    print(f"acceptance_rate: {rate:.6f}", file=sys.stderr)
    print(f"wall_time_s: {elapsed:.3f}", file=sys.stderr)
    return EXIT_OK


def _parse_shot(text: str, dim: int) -> tuple[np.ndarray, np.ndarray]:
    parts = text.split("@")
    if len(parts) != 2:
        raise UsageError(f"--shot: expected 'z0,..@v0,..', got {text!r}")
    return (
        _parse_point(parts[0], dim, "--shot start"),
        _parse_point(parts[1], dim, "--shot velocity"),
    )


def cmd_shoot(args) -> int:
    bundle = _load(args.model)
    model = bundle.metric
    shots = []
    if args.shot:
        shots += [_parse_shot(s, model.dim) for s in args.shot]
    if args.shots_file is not None:
        try:
            with open(args.shots_file, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise UsageError(f"--shots-file: {exc}") from None
        for line in lines:
            line = line.strip()
            if line and not line.startswith("#"):
                shots.append(_parse_shot(line, model.dim))
    if not shots:
        raise UsageError("shoot: provide at least one --shot or a --shots-file")
    cfg = IntegratorConfig(n_steps=args.n_steps, record_path=True)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["shot", "step"] + [f"z_{k}" for k in range(model.dim)])
        for shot_id, (z0, v) in enumerate(shots):
            try:
                path = exp_map(model, z0, v, cfg)
            except IntegrationError as exc:
                print(f"error: shot {shot_id}: {exc}", file=sys.stderr)
                return EXIT_INTEGRATION
            for step, point in enumerate(path.points):
                writer.writerow([str(shot_id), str(step)] + [repr(float(x)) for x in point])
    return EXIT_OK


def cmd_field(args) -> int:
    bundle = _load(args.model)
    model = bundle.metric
    if model.dim != 2:
        raise UsageError(
            f"field: requires a 2-d latent space, this model has dim {model.dim}"
        )
    box = _parse_box(args.box, model)
    resolution = _parse_resolution(args.resolution, model.dim)
    widths = (box.upper - box.lower) / np.asarray(resolution)
    axes = [
        box.lower[k] + (np.arange(resolution[k]) + 0.5) * widths[k]
        for k in range(model.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    log_volume = -0.5 * log_det_metric_inverse_at(model, centers)
    export_field_csv(centers, log_volume, args.output)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    bundle = _load(args.model)
    model = bundle.metric
    if model.dim > 3:
        raise UsageError(
            f"oracle-check: the quadrature oracle needs dim <= 3, model has {model.dim}"
        )
    cov = _covariance(args, model.dim)
    box = _parse_box(args.box, model)
    resolution = _parse_resolution(args.resolution, model.dim)
    grid = build_density_grid(model, box, resolution)
    z0 = _start_point(args, model)
    cfg = ChainConfig(
        chain_length=args.chain_length,
        covariance=cov,
        seed=args.seed,
        burn_in=args.burn_in,
        thinning=args.thinning,
        integrator=IntegratorConfig(n_steps=args.n_steps),
    )
    try:
        # Proposals outside the compact set get zero target density here, so
        # the chain matches the box-restricted density the oracle integrates.
        result = riemannian_random_walk(model, z0, cfg, support=box)
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    tv = tv_distance(grid, result.samples)
    print(f"tv_distance: {tv:.6f}")
    print(f"acceptance_rate: {result.acceptance_rate:.6f}")
    print(f"log_normalizer: {grid.log_normalizer!r}")
    return EXIT_OK if tv <= args.threshold else EXIT_THRESHOLD


def cmd_validate(args) -> int:
    bundle = _load(args.model)
    n = bundle.metric.n_centroids
    has_dec = "yes" if bundle.decoder is not None else "no"
    print(f"ok: dim={bundle.metric.dim} centroids={n} decoder={has_dec}")
    return EXIT_OK


def _add_chain_flags(sub, default_length: int, default_sigma: float):
    sub.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    sub.add_argument(
        "--chain-length", type=int, default=default_length,
        help=f"number of walk steps (default {default_length})",
    )
    sub.add_argument(
        "--burn-in", type=int, default=None,
        help="steps discarded before retention (default: 10%% of length)",
    )
    sub.add_argument("--thinning", type=int, default=1, help="keep every k-th sample")
    sub.add_argument(
        "--n-steps", type=int, default=100,
        help="integrator steps per geodesic (default 100)",
    )
    sub.add_argument(
        "--sigma-scale", type=float, default=default_sigma,
        help=f"isotropic proposal covariance scale s, Sigma = s*I (default {default_sigma})",
    )
    sub.add_argument(
        "--sigma-file", default=None,
        help="JSON file with a full proposal covariance matrix (overrides --sigma-scale)",
    )
    sub.add_argument(
        "--start", default=None,
        help="starting point, comma-separated (default: centroid nearest the centroid mean)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geosampler",
        description="Sample a geometry-aware VAE latent space along geodesics.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("sample", help="run the random walk and export samples")
    p.add_argument("model", help="bundle file")
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    _add_chain_flags(p, default_length=200, default_sigma=1.0)
    p.add_argument("--decode", action="store_true", help="decode retained samples")
    p.add_argument("--chains", type=int, default=1, help="run k seed-offset chains")
    p.set_defaults(func=cmd_sample)

    p = subs.add_parser("shoot", help="export geodesic traces")
    p.add_argument("model", help="bundle file")
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    p.add_argument(
        "--shot", action="append", default=[],
        help="one geodesic as 'z0,..@v0,..' (repeatable)",
    )
    p.add_argument("--shots-file", default=None, help="file with one shot per line")
    p.add_argument("--n-steps", type=int, default=100, help="integrator steps")
    p.set_defaults(func=cmd_shoot)

    p = subs.add_parser("field", help="export the log volume element grid (2-d models)")
    p.add_argument("model", help="bundle file")
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    p.add_argument("--box", default=None, help="per-axis ranges 'lo:hi,lo:hi'")
    p.add_argument("--resolution", default="100", help="cells per axis, e.g. '100' or '80,120'")
    p.set_defaults(func=cmd_field)

    p = subs.add_parser("oracle-check", help="total-variation test against the density oracle")
    p.add_argument("model", help="bundle file")
    _add_chain_flags(p, default_length=50_000, default_sigma=0.01)
    p.add_argument("--box", default=None, help="per-axis ranges 'lo:hi,lo:hi'")
    p.add_argument("--resolution", default="50", help="oracle cells per axis")
    p.add_argument(
        "--threshold", type=float, default=0.15,
        help="maximum allowed TV distance (default 0.15)",
    )
    p.set_defaults(func=cmd_oracle_check)

    p = subs.add_parser("validate", help="check a bundle file")
    p.add_argument("model", help="bundle file")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
