"""Pure-numpy evaluation kernels.

Fallback backend used when the compiled extension (``_ckernels``) is not
available. Both modules expose the same functions over raw arrays; the
typed front-ends in :mod:`geosampler.metric` and :mod:`geosampler.geodesics`
dispatch through :mod:`geosampler._backend`.

All kernels take the metric in unpacked form: ``centroids`` (N, d),
``products`` (N, d, d) with ``products[i] = L_i @ L_i.T``, the inverse
squared bandwidth ``inv_t2 = 1 / T**2`` and the isotropic floor ``lam``.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def rbf_weights(centroids, inv_t2, z):
    """Radial weights exp(-||z - c_i||^2 / T^2) for every centroid."""
    if centroids.shape[0] == 0:
        return np.zeros(0)
    diff = z[None, :] - centroids
    return np.exp(-np.einsum("ij,ij->i", diff, diff) * inv_t2)


def metric_inverse(centroids, products, inv_t2, lam, z):
    """Inverse metric tensor: sum_i w_i(z) L_i L_i^T + lam * I."""
    d = z.shape[0]
    w = rbf_weights(centroids, inv_t2, z)
    out = lam * np.eye(d)
    if w.shape[0]:
        out += np.tensordot(w, products, axes=1)
    return out


def grad_metric_inverse(centroids, products, inv_t2, lam, z):
    """Per-coordinate derivatives of the inverse metric, shape (d, d, d).

    Entry [k] holds the derivative with respect to z_k.
    """
    d = z.shape[0]
    w = rbf_weights(centroids, inv_t2, z)
    if not w.shape[0]:
        return np.zeros((d, d, d))
    # d/dz_k of w_i is w_i * (-2 (z_k - c_ik) * inv_t2)
    coeff = w[:, None] * (-2.0 * inv_t2) * (z[None, :] - centroids)  # (N, d)
    return np.einsum("ik,ilm->klm", coeff, products)


def hamiltonian_grads(centroids, products, inv_t2, lam, p, q):
    """Gradients of H(p, q) = q^T Ginv(p) q / 2 with respect to p and q."""
    d = p.shape[0]
    w = rbf_weights(centroids, inv_t2, p)
    gq = lam * q
    gp = np.zeros(d)
    if w.shape[0]:
        mq = products @ q                       # (N, d)
        gq = gq + w @ mq
        s = mq @ q                              # q^T L_i L_i^T q per centroid
        gp = -inv_t2 * ((s * w) @ (p[None, :] - centroids))
    return gp, gq


def exp_map(centroids, products, inv_t2, lam, p0, q0, n_steps, record_path):
    """Integrate the geodesic equations with the explicit midpoint rule.

    Returns ``(path, momenta, p, q, fail_step)``. ``path`` and ``momenta``
    are (n_steps + 1, d) arrays when ``record_path`` is true, else None.
    ``fail_step`` is -1 on success, or the 1-based step at which a
    non-finite state appeared (integration stops there).
    """
    d = p0.shape[0]
    dt = 1.0 / n_steps
    p = p0.copy()
    q = q0.copy()
    path = momenta = None
    if record_path:
        path = np.empty((n_steps + 1, d))
        momenta = np.empty((n_steps + 1, d))
        path[0] = p
        momenta[0] = q
    # overflow is deliberately allowed to propagate; the finiteness check
    # below turns it into a reported failure step
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for t in range(1, n_steps + 1):
            gp, gq = hamiltonian_grads(centroids, products, inv_t2, lam, p, q)
            ph = p + (0.5 * dt) * gq
            qh = q - (0.5 * dt) * gp
            gp, gq = hamiltonian_grads(centroids, products, inv_t2, lam, ph, qh)
            p = p + dt * gq
            q = q - dt * gp
            if not (np.isfinite(p).all() and np.isfinite(q).all()):
                return path, momenta, p, q, t
            if record_path:
                path[t] = p
                momenta[t] = q
    return path, momenta, p, q, -1
