# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled double-sum core for spatially correlated noise matrices.

Computes S_ij = sum_{l,k} w_l w_k f(|r_l - r_k|) G_i(l) G_j(k) as a
symmetric pair loop (k >= l, off-diagonal doubled).  The outer index is
split into fixed-size chunks accumulated independently and combined in
chunk order afterwards, so results are bitwise independent of the thread
count.
"""
import numpy as np

from cython.parallel cimport prange
from libc.math cimport cos, exp, log, sin, sqrt, M_PI

cdef double EULER_GAMMA = 0.5772156649015328606

KIND_EXP = 0
KIND_SINC = 1
KIND_KER0 = 2


cdef double _ker0_series(double x) nogil:
    cdef double t2 = (0.25 * x * x) * (0.25 * x * x)
    cdef double ber = 0.0, bei = 0.0, psum = 0.0
    cdef double term_b = 1.0
    cdef double term_e = 0.25 * x * x
    cdef double psi = -EULER_GAMMA
    cdef double sign = 1.0
    cdef int k, n
    for k in range(40):
        ber += sign * term_b
        psum += sign * psi * term_b
        bei += sign * term_e
        sign = -sign
        n = 2 * k
        psi += 1.0 / (n + 1) + 1.0 / (n + 2)
        term_b = term_b * t2 / ((n + 1.0) * (n + 2.0) * (n + 1.0) * (n + 2.0))
        term_e = term_e * t2 / ((n + 2.0) * (n + 3.0) * (n + 2.0) * (n + 3.0))
    return -log(0.5 * x) * ber + 0.25 * M_PI * bei + psum


cdef double _ker0_asym(double x) nogil:
    # Re K0(x e^{i pi/4}) by the large-argument expansion in real arithmetic;
    # 16 terms sit at the optimal truncation near x = 8 and are ample above.
    cdef double inv8x = 1.0 / (8.0 * x)
    cdef double c = 0.7071067811865475244  # cos(pi/4) = sin(pi/4)
    cdef double tr = 1.0, ti = 0.0, sr = 1.0, si = 0.0
    cdef double coef, nr, ni
    cdef int k
    for k in range(1, 17):
        coef = -((2 * k - 1) * (2 * k - 1)) * inv8x / k
        nr = coef * (tr * c + ti * c)
        ni = coef * (ti * c - tr * c)
        tr = nr
        ti = ni
        sr += tr
        si += ti
    cdef double a = x * c
    cdef double mag = sqrt(M_PI / (2.0 * x))
    cdef double pr = mag * 0.92387953251128675613   # cos(pi/8)
    cdef double pim = -mag * 0.38268343236508977173  # -sin(pi/8)
    cdef double er = exp(-a) * cos(a)
    cdef double ei = -exp(-a) * sin(a)
    cdef double fr = pr * er - pim * ei
    cdef double fi = pr * ei + pim * er
    return fr * sr - fi * si


cdef inline double _ker0(double x) nogil:
    if x <= 8.0:
        return _ker0_series(x)
    return _ker0_asym(x)


def kelvin_ker0(double x):
    """Scalar Ker0, exposed for cross-checking against the Python version."""
    if x <= 0:
        raise ValueError("kelvin_ker0 requires x > 0")
    return _ker0(x)


cdef inline double _f_eval(int kind, double r, double inv_xi, double rmin,
                           double inv_norm) nogil:
    cdef double t
    if kind == 0:
        return exp(-r * inv_xi)
    if kind == 1:
        t = r * inv_xi
        if t < 1e-8:
            return 1.0 - t * t / 6.0
        return sin(t) / t
    if r < rmin:
        r = rmin
    return _ker0(r * inv_xi) * inv_norm


cdef void _chunk_accumulate(Py_ssize_t c, Py_ssize_t chunk, Py_ssize_t M,
                            Py_ssize_t N, double[::1] x, double[::1] z,
                            double[::1] w, double[:, ::1] G, int kind,
                            double inv_xi, double rmin, double inv_norm,
                            double[:, :, ::1] partial) nogil:
    cdef Py_ssize_t lo = c * chunk
    cdef Py_ssize_t hi = lo + chunk
    cdef Py_ssize_t l, k, i, j
    cdef double dx, dz, r, wf
    if hi > M:
        hi = M
    for l in range(lo, hi):
        # same-node term; f(0) = 1 for every kernel kind (Ker0 is clamped)
        wf = w[l] * w[l]
        for i in range(N):
            for j in range(i, N):
                partial[c, i, j] += wf * G[i, l] * G[j, l]
        for k in range(l + 1, M):
            dx = x[l] - x[k]
            dz = z[l] - z[k]
            r = sqrt(dx * dx + dz * dz)
            wf = w[l] * w[k] * _f_eval(kind, r, inv_xi, rmin, inv_norm)
            for i in range(N):
                for j in range(i, N):
                    partial[c, i, j] += wf * (G[i, l] * G[j, k] + G[i, k] * G[j, l])


def correlated_pair_sum(double[::1] x, double[::1] z, double[::1] w,
                        double[:, ::1] G, int kind, double xi,
                        double rmin=0.0, double norm=1.0,
                        int num_threads=0, int chunk=64):
    """Symmetric pair sum over all node pairs; returns the (N, N) matrix."""
    cdef Py_ssize_t M = x.shape[0]
    cdef Py_ssize_t N = G.shape[0]
    if z.shape[0] != M or w.shape[0] != M or G.shape[1] != M:
        raise ValueError("shape mismatch between nodes, weights and G")
    if xi <= 0:
        raise ValueError("xi must be positive")
    cdef double inv_xi = 1.0 / xi
    cdef double inv_norm = 1.0 / norm
    cdef Py_ssize_t n_chunks = (M + chunk - 1) // chunk
    partial_np = np.zeros((n_chunks, N, N))
    cdef double[:, :, ::1] partial = partial_np
    cdef Py_ssize_t c

    if num_threads > 0:
        for c in prange(n_chunks, nogil=True, schedule="dynamic",
                        num_threads=num_threads):
            _chunk_accumulate(c, chunk, M, N, x, z, w, G, kind, inv_xi, rmin,
                              inv_norm, partial)
    else:
        for c in prange(n_chunks, nogil=True, schedule="dynamic"):
            _chunk_accumulate(c, chunk, M, N, x, z, w, G, kind, inv_xi, rmin,
                              inv_norm, partial)

    upper = partial_np.sum(axis=0)
    return np.triu(upper) + np.triu(upper, 1).T
