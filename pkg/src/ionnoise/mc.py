"""Monte-Carlo cross-check of the deterministic noise matrices.

Draws explicit Gaussian source-amplitude fields with the prescribed
spatial covariance, projects them to fields at the ions and averages
E_i E_j over the ensemble.  The estimator is unbiased for the discretized
pair sum on the same grid, so any disagreement with noise_matrix beyond
statistics points at a real defect.

Weighting convention (so expectations match noise_matrix exactly):

  uncorrelated   amplitude sqrt(w_l) * z_l per node (one weight per node
                 in the collapsed single sum);
  patch          one standard normal per patch, scaled per node by the
                 full weight w_l (the factored sum carries w inside both
                 factors);
  r-dependent    correlated Gaussian with node covariance
                 C = diag(w) f(|r_l - r_k|) diag(w), factorized by
                 eigendecomposition with a small diagonal jitter.

Sampling is split into fixed-size batches whose RNG streams are spawned
from the master seed by batch index, so the result is bit-for-bit
reproducible and independent of how batches would be scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import QuadratureGrid
from .kernels import CorrelationKernel, DipoleOrientation, corr_kernel
from .noise import IonConfiguration, _resolved_kernel, field_matrix

BATCH_SIZE = 1024
JITTER_FRACTION = 1e-10
CLIP_FAIL_FRACTION = 0.01


@dataclass(frozen=True)
class EnsembleEstimate:
    """Ensemble mean of E_i E_j with per-entry standard errors."""

    s_hat: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False)
    n_samples: int
    seed: int
    clipped_mass: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.s_hat, dtype=float)
        e = np.asarray(self.stderr, dtype=float)
        object.__setattr__(self, "s_hat", s)
        object.__setattr__(self, "stderr", e)
        if s.shape != e.shape or s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("s_hat and stderr must be matching square matrices")
        if np.max(np.abs(s - s.T)) > 1e-9 * max(np.max(np.abs(s)), 1e-300):
            raise ValueError("s_hat must be symmetric")
        if self.n_samples >= 2 and not np.all(e > 0):
            raise ValueError("standard errors must be positive for n_samples >= 2")


def _covariance_factor(grid: QuadratureGrid, kernel: CorrelationKernel):
    """Square root L with L L^T = diag(w) f diag(w), plus the clipped mass."""
    r = np.sqrt(
        (grid.x[:, None] - grid.x[None, :]) ** 2
        + (grid.z[:, None] - grid.z[None, :]) ** 2
    )
    F = np.asarray(corr_kernel(kernel, r), dtype=float)
    np.fill_diagonal(F, 1.0)
    C = F * np.outer(grid.weights, grid.weights)
    trace = float(np.trace(C))
    C[np.diag_indices_from(C)] += JITTER_FRACTION * trace / len(C)
    lam, V = np.linalg.eigh(C)
    clipped = float(np.sum(np.abs(lam[lam < 0])))
    frac = clipped / trace if trace > 0 else 0.0
    if frac > CLIP_FAIL_FRACTION:
        raise ValueError(
            f"covariance not positive definite: clipped eigenvalue mass "
            f"{frac:.3e} of trace exceeds {CLIP_FAIL_FRACTION}"
        )
    lam = np.clip(lam, 0.0, None)
    return V * np.sqrt(lam), frac


def mc_ensemble_noise(
    ions: IonConfiguration,
    grid: QuadratureGrid,
    orientation: DipoleOrientation | None,
    kernel: CorrelationKernel,
    n_samples: int,
    seed: int,
    source_kind: str = "dipole",
) -> EnsembleEstimate:
    """Estimate the noise matrix by direct ensemble averaging.

    Requires n_samples >= 2 (the standard error is undefined for a single
    sample).  For the r-dependent kernels the full M x M node covariance
    is factorized, so grids should stay below a few thousand nodes.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2 for a standard error")
    kernel = _resolved_kernel(kernel, grid)
    if kernel.kind == "patch" and grid.patch_id is None:
        raise ValueError("patch kernel needs a grid with a patch map")
    G = field_matrix(ions, grid, orientation, source_kind)
    w = grid.weights
    clipped = 0.0

    # A maps i.i.d. standard normals z to ion fields: E = A z
    if kernel.kind == "uncorrelated":
        A = G * np.sqrt(w)
    elif kernel.kind == "patch":
        n_patches = int(grid.patch_id.max()) + 1
        A = np.empty((ions.n_ions, n_patches))
        for i in range(ions.n_ions):
            A[i] = np.bincount(grid.patch_id, weights=w * G[i], minlength=n_patches)
    else:
        L, clipped = _covariance_factor(grid, kernel)
        A = G @ L

    N = ions.n_ions
    sum1 = np.zeros((N, N))
    sum2 = np.zeros((N, N))
    master = np.random.SeedSequence(seed)
    n_batches = (n_samples + BATCH_SIZE - 1) // BATCH_SIZE
    streams = master.spawn(n_batches)
    done = 0
    for b in range(n_batches):
        nb = min(BATCH_SIZE, n_samples - done)
        rng = np.random.default_rng(streams[b])
        Z = rng.standard_normal((nb, A.shape[1]))
        E = Z @ A.T
        P = E[:, :, None] * E[:, None, :]
        sum1 += P.sum(axis=0)
        sum2 += (P * P).sum(axis=0)
        done += nb

    mean = sum1 / n_samples
    var = (sum2 / n_samples - mean**2) * n_samples / (n_samples - 1)
    stderr = np.sqrt(np.maximum(var, 0.0) / n_samples)
    return EnsembleEstimate(
        s_hat=0.5 * (mean + mean.T),
        stderr=0.5 * (stderr + stderr.T),
        n_samples=int(n_samples),
        seed=int(seed),
        clipped_mass=clipped,
    )
