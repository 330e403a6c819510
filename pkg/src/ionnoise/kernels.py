"""Per-source geometric field functions and spatial correlation kernels.

The field functions g give the electric-field component along a chosen
motion axis at the ion position, per unit source strength, for a point
dipole or monopole sitting on the electrode plane y = 0.  The overall
prefactor 1/(4*pi*eps0) is dropped everywhere: only products of g enter
the noise sums, so ratios, crossover locations and scaling exponents are
unaffected.

Sign convention: the source potential is written in terms of the source
position relative to the ion, phi = mu . (r_src - r_ion) / |r_src - r_ion|^3,
and g_n = -d(phi)/d(r_ion_n).  The global sign cancels in every noise
product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_KERNEL_KINDS = ("uncorrelated", "exponential", "sinc", "kelvin_ker0", "patch")
_EULER_GAMMA = 0.5772156649015328606


@dataclass(frozen=True)
class DipoleOrientation:
    """Unit vector (u_x, u_y, u_z) along which every surface dipole points."""

    ux: float
    uy: float
    uz: float

    def __post_init__(self):
        norm = math.sqrt(self.ux**2 + self.uy**2 + self.uz**2)
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise ValueError(f"orientation must be a unit vector, |u| = {norm}")

    @classmethod
    def along(cls, axis: str) -> "DipoleOrientation":
        if axis not in ("x", "y", "z"):
            raise ValueError(f"unknown axis {axis!r}")
        return cls(*(1.0 if a == axis else 0.0 for a in "xyz"))

    def as_array(self) -> np.ndarray:
        return np.array([self.ux, self.uy, self.uz])


@dataclass(frozen=True)
class CorrelationKernel:
    """Spatial correlation f(r) between source amplitudes a distance r apart.

    kind       one of uncorrelated | exponential | sinc | kelvin_ker0 | patch
    xi         correlation length (required for the three r-dependent kinds)
    r_min      clamp radius for kelvin_ker0: f(r) = Ker0(max(r, r_min)/xi)
               normalized by Ker0(r_min/xi) so f <= 1 on the grid.  Filled in
               from the grid cell diagonal by noise_matrix when left None.
    """

    kind: str
    xi: float | None = None
    r_min: float | None = None

    def __post_init__(self):
        if self.kind not in _KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind in ("exponential", "sinc", "kelvin_ker0"):
            if self.xi is None or not self.xi > 0:
                raise ValueError(f"kernel {self.kind!r} needs xi > 0, got {self.xi}")
        if self.r_min is not None and not self.r_min > 0:
            raise ValueError("r_min must be positive")


def _relative_coords(ion_pos, src_x, src_z):
    x0, d, z0 = ion_pos
    if not d > 0:
        raise ValueError(f"ion height must be positive, got {d}")
    X = np.asarray(src_x, dtype=float) - x0
    Z = np.asarray(src_z, dtype=float) - z0
    return X, Z, d


def _maybe_scalar(val, *inputs):
    if all(np.ndim(a) == 0 for a in inputs):
        return float(val)
    return val


def dipole_g(motion_axis: str, orientation, ion_pos, src_x, src_z=None):
    """Field component per unit dipole moment along `motion_axis`.

    ion_pos is (x, d, z) with d > 0 the height above the plane; the source
    sits at (src_x, 0, src_z).  src_x/src_z may be arrays.  The nine closed
    forms (three motion axes times three dipole components) share the common
    denominator rho^5 with rho^2 = d^2 + X^2 + Z^2 in ion-relative
    coordinates X, Z.
    """
    if src_z is None:
        src_x, src_z = src_x  # accept a (x_d, z_d) pair
    X, Z, d = _relative_coords(ion_pos, src_x, src_z)
    if isinstance(orientation, DipoleOrientation):
        u = (orientation.ux, orientation.uy, orientation.uz)
    else:
        u = tuple(float(c) for c in orientation)
    rho5 = (d * d + X * X + Z * Z) ** 2.5

    if motion_axis == "x":
        comps = ((d * d - 2 * X * X + Z * Z), 3 * d * X, -3 * X * Z)
    elif motion_axis == "y":
        comps = (3 * d * X, -(2 * d * d - X * X - Z * Z), 3 * d * Z)
    elif motion_axis == "z":
        comps = (-3 * X * Z, 3 * d * Z, (d * d + X * X - 2 * Z * Z))
    else:
        raise ValueError(f"unknown motion axis {motion_axis!r}")

    num = 0.0
    for uc, comp in zip(u, comps):
        if uc != 0.0:
            num = num + uc * comp
    return _maybe_scalar(num / rho5, src_x, src_z)


def monopole_g(motion_axis: str, ion_pos, src_x, src_z=None):
    """Field component per unit monopole strength: (r_src - r_ion)_n / R^3."""
    if src_z is None:
        src_x, src_z = src_x
    X, Z, d = _relative_coords(ion_pos, src_x, src_z)
    rho3 = (d * d + X * X + Z * Z) ** 1.5
    if motion_axis == "x":
        num = X
    elif motion_axis == "y":
        num = -d + 0.0 * X
    elif motion_axis == "z":
        num = Z
    else:
        raise ValueError(f"unknown motion axis {motion_axis!r}")
    return _maybe_scalar(num / rho3, src_x, src_z)


# ---------------------------------------------------------------------------
# Kelvin function Ker0

def _ker0_series(x):
    """Ascending series, accurate for x <= 8.

    ker(x) = -ln(x/2) ber(x) + (pi/4) bei(x)
             + sum_k (-1)^k psi(2k+1) (x/2)^{4k} / ((2k)!)^2
    with ber/bei the order-0 Kelvin series and psi the digamma function.
    """
    x = np.asarray(x, dtype=float)
    t2 = (0.25 * x * x) ** 2            # (x/2)^4
    ber = np.zeros_like(x)
    bei = np.zeros_like(x)
    psi_sum = np.zeros_like(x)
    term_b = np.ones_like(x)            # (x/2)^{4k} / ((2k)!)^2
    term_e = 0.25 * x * x               # (x/2)^{4k+2} / ((2k+1)!)^2
    psi = -_EULER_GAMMA
    sign = 1.0
    for k in range(40):
        ber += sign * term_b
        psi_sum += sign * psi * term_b
        bei += sign * term_e
        sign = -sign
        n = 2 * k
        psi += 1.0 / (n + 1) + 1.0 / (n + 2)
        term_b = term_b * t2 / ((n + 1) * (n + 2)) ** 2
        term_e = term_e * t2 / ((n + 2) * (n + 3)) ** 2
    return -np.log(0.5 * x) * ber + 0.25 * np.pi * bei + psi_sum


def _ker0_asymptotic(x):
    """Large-x expansion via Ker0(x) = Re K0(x e^{i pi/4}), usable for x > 8."""
    x = np.asarray(x, dtype=float)
    z = x * complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    total = np.ones_like(z)
    term = np.ones_like(z)
    # K0(z) ~ sqrt(pi/2z) e^{-z} sum_k prod_{j<=k} -(2j-1)^2 / (8 z j);
    # 16 terms sit at the optimal truncation near x = 8 and are ample above
    for k in range(1, 17):
        term = term * (-((2 * k - 1) ** 2) / (8.0 * k)) / z
        total = total + term
    val = np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) * total
    return val.real


def kelvin_ker0(x):
    """Kelvin function Ker0 for real x > 0.

    Series branch for x <= 8, asymptotic branch above; the two agree to
    better than 1e-8 across the switchover band [6, 10].
    """
    arr = np.asarray(x, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0)):
        raise ValueError("kelvin_ker0 requires finite x > 0")
    flat = np.atleast_1d(arr)
    out = np.empty_like(flat)
    lo = flat <= 8.0
    if np.any(lo):
        out[lo] = _ker0_series(flat[lo])
    if np.any(~lo):
        out[~lo] = _ker0_asymptotic(flat[~lo])
    return _maybe_scalar(out.reshape(arr.shape), x)


def corr_kernel(kernel: CorrelationKernel, r, patch_ids=None):
    """Evaluate the kernel at separations r (patch kind needs the id pair).

    For `patch`, r is ignored and patch_ids must be a pair of equally shaped
    integer arrays; the kernel is the same-patch indicator.
    """
    if kernel.kind == "patch":
        if patch_ids is None:
            raise ValueError("patch kernel needs patch ids")
        a, b = patch_ids
        return np.asarray(a) == np.asarray(b)
    r_arr = np.asarray(r, dtype=float)
    if r_arr.size and np.any(r_arr < 0):
        raise ValueError("separations must be non-negative")
    if kernel.kind == "uncorrelated":
        out = np.where(r_arr == 0.0, 1.0, 0.0)
    elif kernel.kind == "exponential":
        out = np.exp(-r_arr / kernel.xi)
    elif kernel.kind == "sinc":
        out = np.sinc(r_arr / (np.pi * kernel.xi))
    else:  # kelvin_ker0
        if kernel.r_min is None:
            raise ValueError("kelvin_ker0 kernel needs r_min (set by noise_matrix)")
        norm = kelvin_ker0(kernel.r_min / kernel.xi)
        if not norm > 0:
            raise ValueError(
                f"Ker0 normalizer not positive at r_min/xi = {kernel.r_min / kernel.xi}"
            )
        out = kelvin_ker0(np.maximum(r_arr, kernel.r_min) / kernel.xi) / norm
    return _maybe_scalar(out, r)
