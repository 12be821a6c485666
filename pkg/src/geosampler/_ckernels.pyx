# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels.

C twin of :mod:`geosampler._kernels` (same functions, same signatures).
The geodesic integrator is the hot loop of the sampler: every chain step
runs ``n_steps`` midpoint updates, each needing the inverse metric and its
gradient, so these run as plain C loops over the centroid arrays.
"""

import numpy as np

from libc.math cimport exp, isfinite

NAME = "compiled"


cdef void _grads(const double[:, ::1] centroids, const double[:, :, ::1] products,
                 double inv_t2, double lam,
                 const double[::1] p, const double[::1] q,
                 double[::1] gp, double[::1] gq) noexcept nogil:
    cdef Py_ssize_t n = centroids.shape[0]
    cdef Py_ssize_t d = p.shape[0]
    cdef Py_ssize_t i, k, l
    cdef double dist2, diff, w, s, mq, sw
    for k in range(d):
        gp[k] = 0.0
        gq[k] = lam * q[k]
    for i in range(n):
        dist2 = 0.0
        for k in range(d):
            diff = p[k] - centroids[i, k]
            dist2 += diff * diff
        w = exp(-dist2 * inv_t2)
        s = 0.0
        for k in range(d):
            mq = 0.0
            for l in range(d):
                mq += products[i, k, l] * q[l]
            gq[k] += w * mq
            s += q[k] * mq
        sw = s * w * inv_t2
        for k in range(d):
            gp[k] -= sw * (p[k] - centroids[i, k])


def rbf_weights(const double[:, ::1] centroids, double inv_t2, const double[::1] z):
    """Radial weights exp(-||z - c_i||^2 / T^2) for every centroid."""
    cdef Py_ssize_t n = centroids.shape[0]
    cdef Py_ssize_t d = z.shape[0]
    out = np.zeros(n)
    cdef double[::1] w = out
    cdef Py_ssize_t i, k
    cdef double dist2, diff
    for i in range(n):
        dist2 = 0.0
        for k in range(d):
            diff = z[k] - centroids[i, k]
            dist2 += diff * diff
        w[i] = exp(-dist2 * inv_t2)
    return out


def metric_inverse(const double[:, ::1] centroids, const double[:, :, ::1] products,
                   double inv_t2, double lam, const double[::1] z):
    """Inverse metric tensor: sum_i w_i(z) L_i L_i^T + lam * I."""
    cdef Py_ssize_t n = centroids.shape[0]
    cdef Py_ssize_t d = z.shape[0]
    out = np.zeros((d, d))
    cdef double[:, ::1] g = out
    cdef Py_ssize_t i, k, l
    cdef double dist2, diff, w
    for k in range(d):
        g[k, k] = lam
    for i in range(n):
        dist2 = 0.0
        for k in range(d):
            diff = z[k] - centroids[i, k]
            dist2 += diff * diff
        w = exp(-dist2 * inv_t2)
        for k in range(d):
            for l in range(d):
                g[k, l] += w * products[i, k, l]
    return out


def grad_metric_inverse(const double[:, ::1] centroids, const double[:, :, ::1] products,
                        double inv_t2, double lam, const double[::1] z):
    """Per-coordinate derivatives of the inverse metric, shape (d, d, d)."""
    cdef Py_ssize_t n = centroids.shape[0]
    cdef Py_ssize_t d = z.shape[0]
    out = np.zeros((d, d, d))
    cdef double[:, :, ::1] g = out
    cdef Py_ssize_t i, k, l, m
    cdef double dist2, diff, w, ck
    for i in range(n):
        dist2 = 0.0
        for k in range(d):
            diff = z[k] - centroids[i, k]
            dist2 += diff * diff
        w = exp(-dist2 * inv_t2)
        for k in range(d):
            ck = w * (-2.0 * inv_t2) * (z[k] - centroids[i, k])
            for l in range(d):
                for m in range(d):
                    g[k, l, m] += ck * products[i, l, m]
    return out


def hamiltonian_grads(const double[:, ::1] centroids, const double[:, :, ::1] products,
                      double inv_t2, double lam, const double[::1] p, const double[::1] q):
    """Gradients of H(p, q) = q^T Ginv(p) q / 2 with respect to p and q."""
    cdef Py_ssize_t d = p.shape[0]
    gp_arr = np.empty(d)
    gq_arr = np.empty(d)
    cdef double[::1] gp = gp_arr
    cdef double[::1] gq = gq_arr
    _grads(centroids, products, inv_t2, lam, p, q, gp, gq)
    return gp_arr, gq_arr


def exp_map(const double[:, ::1] centroids, const double[:, :, ::1] products,
            double inv_t2, double lam,
            const double[::1] p0, const double[::1] q0, int n_steps, bint record_path):
    """Integrate the geodesic equations with the explicit midpoint rule.

    Returns ``(path, momenta, p, q, fail_step)`` exactly like the numpy
    backend: arrays of recorded positions/momenta (or None), the final
    phase point, and -1 on success or the 1-based failing step.
    """
    cdef Py_ssize_t d = p0.shape[0]
    cdef double dt = 1.0 / n_steps
    p_arr = np.array(p0)
    q_arr = np.array(q0)
    cdef double[::1] p = p_arr
    cdef double[::1] q = q_arr
    work = np.empty((4, d))
    cdef double[::1] ph = work[0]
    cdef double[::1] qh = work[1]
    cdef double[::1] gp = work[2]
    cdef double[::1] gq = work[3]
    path_arr = momenta_arr = None
    cdef double[:, ::1] path = None
    cdef double[:, ::1] momenta = None
    cdef Py_ssize_t k
    if record_path:
        path_arr = np.empty((n_steps + 1, d))
        momenta_arr = np.empty((n_steps + 1, d))
        path = path_arr
        momenta = momenta_arr
        for k in range(d):
            path[0, k] = p[k]
            momenta[0, k] = q[k]
    cdef int t
    cdef bint ok
    for t in range(1, n_steps + 1):
        _grads(centroids, products, inv_t2, lam, p, q, gp, gq)
        for k in range(d):
            ph[k] = p[k] + (0.5 * dt) * gq[k]
            qh[k] = q[k] - (0.5 * dt) * gp[k]
        _grads(centroids, products, inv_t2, lam, ph, qh, gp, gq)
        ok = True
        for k in range(d):
            p[k] = p[k] + dt * gq[k]
            q[k] = q[k] - dt * gp[k]
            if not (isfinite(p[k]) and isfinite(q[k])):
                ok = False
        if not ok:
            return path_arr, momenta_arr, p_arr, q_arr, t
        if record_path:
            for k in range(d):
                path[t, k] = p[k]
                momenta[t, k] = q[k]
    return path_arr, momenta_arr, p_arr, q_arr, -1
