"""Noise matrices for ion crystals over fluctuating-source electrodes.

Every surface node carries a fluctuating source (dipole of fixed
orientation, or monopole) with unit strength variance and unit surface
density, so an entry of the noise matrix is the quadrature sum

    s_ij = sum_{l,k} w_l w_k f(|r_l - r_k|) g_i(l) g_j(k)

with f the spatial correlation kernel and g_i the field function of ion i
along the configured motion axis.  Absolute values carry geometry units
only; ratios, crossover positions and scaling exponents are the physical
observables.

The O(M^2) correlated pair sum runs through a compiled extension when the
build produced one, and through a blocked numpy fallback otherwise; both
accumulate in a fixed order, so results do not depend on thread count.
Set IONNOISE_PURE_PY=1 to force the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import QuadratureGrid
from .kernels import CorrelationKernel, DipoleOrientation, dipole_g, kelvin_ker0, monopole_g
from .modes import ModeBasis

if os.environ.get("IONNOISE_PURE_PY", "") not in ("", "0"):
    from . import _pairsum_py as _pairsum
    PAIR_BACKEND = "python"
else:
    try:
        from . import _pairsum  # type: ignore[attr-defined]
        PAIR_BACKEND = "compiled"
    except ImportError:
        from . import _pairsum_py as _pairsum
        PAIR_BACKEND = "python"

_KIND_CODE = {"exponential": 0, "sinc": 1, "kelvin_ker0": 2}
_SOURCE_KINDS = ("dipole", "monopole")


@dataclass(frozen=True)
class IonConfiguration:
    """Ion positions (x, d, z) at a common height d > 0, plus a motion axis.

    Coincident positions are allowed; they are the exact common-mode limit
    (identical fields, ratio 1).
    """

    positions: np.ndarray = field(repr=False)
    motion_axis: str = "x"

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "positions", pos)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("positions must be an (N, 3) array of (x, d, z)")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        d = pos[:, 1]
        if not np.all(d > 0):
            raise ValueError("every ion must sit strictly above the surface")
        if np.ptp(d) > 1e-12 * d[0]:
            raise ValueError("ions must share a common height d")
        if self.motion_axis not in ("x", "y", "z"):
            raise ValueError(f"unknown motion axis {self.motion_axis!r}")

    @property
    def n_ions(self) -> int:
        return len(self.positions)

    @property
    def height(self) -> float:
        return float(self.positions[0, 1])

    @classmethod
    def two_ions(cls, separation: float, height: float, motion_axis: str = "x"):
        """Pair at (+-separation/2, height, 0); separation 0 means coincident."""
        if separation < 0 or not height > 0:
            raise ValueError("separation must be >= 0 and height > 0")
        half = 0.5 * separation
        pos = np.array([[-half, height, 0.0], [half, height, 0.0]])
        return cls(positions=pos, motion_axis=motion_axis)

    @classmethod
    def chain(cls, n_ions: int, spacing: float, height: float, motion_axis: str = "x"):
        """Equally spaced n-ion line along x, centered on the origin."""
        if n_ions < 1 or not (spacing > 0 and height > 0):
            raise ValueError("need n_ions >= 1 and positive spacing and height")
        xs = (np.arange(n_ions) - 0.5 * (n_ions - 1)) * spacing
        pos = np.column_stack([xs, np.full(n_ions, height), np.zeros(n_ions)])
        return cls(positions=pos, motion_axis=motion_axis)


@dataclass(frozen=True)
class NoiseMatrix:
    """Symmetric per-ion-pair field correlator matrix for one motion axis."""

    s: np.ndarray = field(repr=False)
    axis: str
    kernel: CorrelationKernel
    source_kind: str

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        object.__setattr__(self, "s", s)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("noise matrix must be square")
        scale = np.max(np.abs(s))
        if not np.isfinite(scale):
            raise ValueError("noise matrix has non-finite entries")
        if np.max(np.abs(s - s.T)) > 1e-9 * max(scale, 1e-300):
            raise ValueError("noise matrix must be symmetric")
        diag = np.diag(s)
        if np.any(diag <= 0):
            raise ValueError("noise matrix diagonal must be positive")
        bound = np.sqrt(np.outer(diag, diag))
        if np.any(np.abs(s) > bound * (1.0 + 1e-9) + 1e-300):
            raise ValueError("off-diagonal entries violate |s_ij| <= sqrt(s_ii s_jj)")

    @property
    def n_ions(self) -> int:
        return len(self.s)


def field_matrix(
    ions: IonConfiguration,
    grid: QuadratureGrid,
    orientation: DipoleOrientation | None,
    source_kind: str = "dipole",
) -> np.ndarray:
    """(N, M) matrix of field values g_i(node) along the motion axis."""
    if source_kind not in _SOURCE_KINDS:
        raise ValueError(f"unknown source kind {source_kind!r}")
    if source_kind == "dipole" and orientation is None:
        raise ValueError("dipole sources need an orientation")
    G = np.empty((ions.n_ions, grid.n_nodes))
    for i, pos in enumerate(ions.positions):
        if source_kind == "dipole":
            G[i] = dipole_g(ions.motion_axis, orientation, pos, grid.x, grid.z)
        else:
            G[i] = monopole_g(ions.motion_axis, pos, grid.x, grid.z)
    return G


def _resolved_kernel(kernel: CorrelationKernel, grid: QuadratureGrid) -> CorrelationKernel:
    if kernel.kind == "kelvin_ker0" and kernel.r_min is None:
        return replace(kernel, r_min=grid.cell_diagonal())
    return kernel


def noise_matrix(
    ions: IonConfiguration,
    grid: QuadratureGrid,
    orientation: DipoleOrientation | None,
    kernel: CorrelationKernel,
    source_kind: str = "dipole",
    num_threads: int = 0,
) -> NoiseMatrix:
    """Quadrature evaluation of the noise matrix for one ion configuration.

    The uncorrelated kernel collapses to the single sum
    sum_l w_l g_i(l) g_j(l); the patch kernel factorizes over patches; the
    r-dependent kernels run the full O(M^2) pair sum through the selected
    backend.  An unset Ker0 clamp radius defaults to the grid cell
    diagonal.
    """
    kernel = _resolved_kernel(kernel, grid)
    if kernel.kind == "patch" and grid.patch_id is None:
        raise ValueError("patch kernel needs a grid with a patch map")
    G = field_matrix(ions, grid, orientation, source_kind)
    w = grid.weights

    if kernel.kind == "uncorrelated":
        s = (G * w) @ G.T
        s = 0.5 * (s + s.T)
    elif kernel.kind == "patch":
        n_patches = int(grid.patch_id.max()) + 1
        A = np.empty((ions.n_ions, n_patches))
        for i in range(ions.n_ions):
            A[i] = np.bincount(grid.patch_id, weights=w * G[i], minlength=n_patches)
        s = A @ A.T
        s = 0.5 * (s + s.T)
    else:
        if kernel.kind == "kelvin_ker0":
            norm = float(kelvin_ker0(kernel.r_min / kernel.xi))
            if not norm > 0:
                raise ValueError(
                    f"Ker0 normalizer not positive at r_min/xi = {kernel.r_min / kernel.xi}"
                )
            rmin = kernel.r_min
        else:
            norm, rmin = 1.0, 0.0
        s = _pairsum.correlated_pair_sum(
            np.ascontiguousarray(grid.x),
            np.ascontiguousarray(grid.z),
            np.ascontiguousarray(w),
            np.ascontiguousarray(G),
            _KIND_CODE[kernel.kind],
            float(kernel.xi),
            rmin=float(rmin),
            norm=norm,
            num_threads=int(num_threads),
        )
    return NoiseMatrix(s=s, axis=ions.motion_axis, kernel=kernel, source_kind=source_kind)


def self_cross(noise: NoiseMatrix) -> tuple[float, float, float]:
    """(S_self, S_cross, ratio) for a two-ion matrix.

    S_self averages the diagonal, S_cross is the off-diagonal entry and
    ratio = S_cross / S_self lies in [-1, 1].
    """
    if noise.n_ions != 2:
        raise ValueError("self_cross needs a two-ion noise matrix")
    s = noise.s
    s_self = 0.5 * (s[0, 0] + s[1, 1])
    s_crs = s[0, 1]
    return float(s_self), float(s_crs), float(s_crs / s_self)


def mode_noise(noise: NoiseMatrix, basis: ModeBasis) -> np.ndarray:
    """Per-mode spectral weights S_j = f_j . s . f_j (quadratic forms)."""
    if basis.n != noise.n_ions:
        raise ValueError("mode basis dimension does not match the noise matrix")
    F = basis.vectors
    return np.einsum("jk,kl,jl->j", F, noise.s, F)


def cross_mode_term(noise: NoiseMatrix, basis: ModeBasis, j: int, k: int) -> float:
    """Bath-mediated coupling f_j . s . f_k between two distinct modes."""
    if basis.n != noise.n_ions:
        raise ValueError("mode basis dimension does not match the noise matrix")
    if j == k:
        raise ValueError("j and k must differ; use mode_noise for diagonal weights")
    F = basis.vectors
    return float(F[j] @ noise.s @ F[k])
