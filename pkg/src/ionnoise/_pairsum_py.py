"""Pure-Python double-sum core, used when the compiled extension is absent.

Same contract as the compiled version: S_ij = sum_{l,k} w_l w_k
f(|r_l - r_k|) G_i(l) G_j(k), accumulated over fixed-size blocks of the
left index in a fixed order, so results do not depend on how the work
would have been threaded.
"""
import numpy as np

from .kernels import kelvin_ker0

KIND_EXP = 0
KIND_SINC = 1
KIND_KER0 = 2


def _f_eval(kind, r, xi, rmin, norm):
    if kind == KIND_EXP:
        return np.exp(-r / xi)
    if kind == KIND_SINC:
        return np.sinc(r / (np.pi * xi))
    if kind == KIND_KER0:
        rc = np.maximum(r, rmin)
        return kelvin_ker0(rc / xi) / norm
    raise ValueError("unknown kernel kind %r" % (kind,))


def correlated_pair_sum(x, z, w, G, kind, xi, rmin=0.0, norm=1.0,
                        num_threads=0, block=1024):
    """Symmetric pair sum over all node pairs; returns the (N, N) matrix.

    Parameters mirror the compiled core; num_threads is accepted for
    interface compatibility and ignored (the work runs in one process,
    with numpy handling each block).
    """
    x = np.ascontiguousarray(x, dtype=float)
    z = np.ascontiguousarray(z, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    G = np.ascontiguousarray(G, dtype=float)
    M = x.shape[0]
    N = G.shape[0]
    if z.shape[0] != M or w.shape[0] != M or G.shape != (N, M):
        raise ValueError("shape mismatch between nodes, weights and G")
    if xi <= 0:
        raise ValueError("xi must be positive")

    Gw = G * w
    S = np.zeros((N, N))
    for lo in range(0, M, block):
        hi = min(lo + block, M)
        dx = x[lo:hi, None] - x[None, :]
        dz = z[lo:hi, None] - z[None, :]
        r = np.sqrt(dx * dx + dz * dz)
        f = _f_eval(kind, r, xi, rmin, norm)
        # same-node distance is exactly zero only on the diagonal of the
        # full matrix; force f(0) = 1 there (Ker0 rows were clamped above)
        f[:, lo:hi][np.diag_indices(hi - lo)] = 1.0
        S += Gw[:, lo:hi] @ f @ Gw.T
    return 0.5 * (S + S.T)
