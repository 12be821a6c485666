#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

The geodesic integrator inside the random walk is the hot loop, so the
comparison times the three kernel entry points it exercises plus a full
chain run through each backend.

Usage: python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

from geosampler import _kernels
from geosampler.metric import MetricModel

try:
    from geosampler import _ckernels
except ImportError:
    _ckernels = None


def fixture_model() -> MetricModel:
    return MetricModel(
        dim=2,
        centroids=[[-1.0, 0.0], [1.0, 0.0]],
        factors=[np.eye(2) * 2.0, np.eye(2) * 2.0],
        temperature=0.8,
        regularization=1e-5,
    )


def time_call(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def chain_steps(kernels, model, n_chain: int, n_steps: int) -> None:
    """Minimal replica of the walk's per-step kernel usage."""
    rng = np.random.default_rng(0)
    args = (model.centroids, model.factor_products, model.inv_t2, model.regularization)
    current = np.array([-1.0, 0.0])
    chol = np.linalg.cholesky(kernels.metric_inverse(*args, current))
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    for _ in range(n_chain):
        v = 0.1 * rng.standard_normal(2)
        u = rng.random()
        q0 = np.linalg.solve(chol.T, np.linalg.solve(chol, v))
        _, _, prop, _, fail = kernels.exp_map(*args, current, np.ascontiguousarray(q0),
                                              n_steps, False)
        ginv = kernels.metric_inverse(*args, prop)
        chol_prop = np.linalg.cholesky(ginv)
        logdet_prop = 2.0 * np.sum(np.log(np.diag(chol_prop)))
        if u < np.exp(min(0.0, 0.5 * (logdet_prop - logdet))):
            current, chol, logdet = prop, chol_prop, logdet_prop


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--chain", type=int, default=5_000, help="chain steps for the walk bench")
    parser.add_argument("--n-steps", type=int, default=32, help="integrator steps per geodesic")
    args = parser.parse_args()

    model = fixture_model()
    kargs = (model.centroids, model.factor_products, model.inv_t2, model.regularization)
    z = np.array([0.3, -0.4])
    q = np.array([0.5, 0.2])

    backends = [("python", _kernels)]
    if _ckernels is not None:
        backends.append(("compiled", _ckernels))
    else:
        print("note: compiled extension not built; showing fallback only")

    cases = [
        ("metric_inverse (1 eval)",
         lambda k: (lambda: [k.metric_inverse(*kargs, z) for _ in range(1000)])),
        ("hamiltonian_grads (1 eval)",
         lambda k: (lambda: [k.hamiltonian_grads(*kargs, z, q) for _ in range(1000)])),
        (f"exp_map ({args.n_steps} steps)",
         lambda k: (lambda: [k.exp_map(*kargs, z, q, args.n_steps, False) for _ in range(100)])),
        (f"random walk ({args.chain} steps)",
         lambda k: (lambda: chain_steps(k, model, args.chain, args.n_steps))),
    ]
    scales = [1000, 1000, 100, 1]

    print(f"{'kernel':<28}" + "".join(f"{name:>14}" for name, _ in backends) + f"{'speedup':>10}")
    for (label, make), scale in zip(cases, scales):
        times = [time_call(make(k), args.repeats) / scale for _, k in backends]
        row = f"{label:<28}" + "".join(f"{t * 1e6:>12.2f}us" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
