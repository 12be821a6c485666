"""Equivalence of the compiled kernels and the pure-numpy fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from geosampler import _kernels
from geosampler._backend import BACKEND

try:
    from geosampler import _ckernels
except ImportError:
    _ckernels = None

needs_compiled = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def unpack(model):
    return model.centroids, model.factor_products, model.inv_t2, model.regularization


@needs_compiled
class TestKernelEquivalence:
    def _cases(self, rng, n_cases=30):
        from conftest import random_model

        for _ in range(n_cases):
            model = random_model(rng, dim=int(rng.integers(1, 4)))
            z = rng.uniform(-3, 3, size=model.dim)
            yield model, z

    def test_metric_inverse(self, rng):
        for model, z in self._cases(rng):
            a = _kernels.metric_inverse(*unpack(model), z)
            b = _ckernels.metric_inverse(*unpack(model), z)
            np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)

    def test_grad_metric_inverse(self, rng):
        for model, z in self._cases(rng):
            a = _kernels.grad_metric_inverse(*unpack(model), z)
            b = _ckernels.grad_metric_inverse(*unpack(model), z)
            np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)

    def test_hamiltonian_grads(self, rng):
        for model, z in self._cases(rng):
            q = rng.normal(size=model.dim)
            ap, aq = _kernels.hamiltonian_grads(*unpack(model), z, q)
            bp, bq = _ckernels.hamiltonian_grads(*unpack(model), z, q)
            np.testing.assert_allclose(ap, bp, rtol=1e-12, atol=1e-14)
            np.testing.assert_allclose(aq, bq, rtol=1e-12, atol=1e-14)

    def test_exp_map_paths(self, rng):
        from conftest import random_model

        for _ in range(10):
            model = random_model(rng)
            z0 = rng.uniform(-1, 1, size=2)
            q0 = rng.normal(size=2) * 0.3
            pa, ma, enda, qa, fa = _kernels.exp_map(*unpack(model), z0, q0, 64, True)
            pb, mb, endb, qb, fb = _ckernels.exp_map(*unpack(model), z0, q0, 64, True)
            assert fa == fb == -1
            np.testing.assert_allclose(pa, pb, rtol=1e-11, atol=1e-13)
            np.testing.assert_allclose(ma, mb, rtol=1e-10, atol=1e-12)
            np.testing.assert_allclose(enda, endb, rtol=1e-11, atol=1e-13)

    def test_exp_map_failure_step_agrees(self):
        centroids = np.array([[0.0, 0.0]])
        products = np.eye(2)[None, :, :]
        p0 = np.array([0.5, 0.0])
        q0 = np.array([1e170, 0.0])
        *_, fa = _kernels.exp_map(centroids, products, 1.0 / 0.64, 1e-3, p0, q0, 8, False)
        *_, fb = _ckernels.exp_map(centroids, products, 1.0 / 0.64, 1e-3, p0, q0, 8, False)
        assert fa == fb != -1


class TestBackendSelection:
    def test_default_prefers_compiled_when_built(self):
        if _ckernels is not None and "GEOSAMPLER_BACKEND" not in os.environ:
            assert BACKEND == "compiled"

    def test_env_var_forces_python(self):
        code = (
            "import geosampler; "
            "print(geosampler.BACKEND)"
        )
        env = dict(os.environ, GEOSAMPLER_BACKEND="python")
        out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                             text=True, env=env)
        assert out.stdout.strip() == "python"
