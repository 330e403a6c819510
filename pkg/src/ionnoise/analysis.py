"""Parameter sweeps, crossover searches, scaling fits and unit conversions.

The sweep drivers own grid construction: each evaluation builds a fresh
midpoint grid over the chosen electrode geometry, oversampling a disk of
radius 4d under every ion (the region that decides the sign of the cross
term), and hands the result to the noise core.  Distance-scaling sweeps
regenerate the plane surrogate with side 20 d at every height, so the
finite electrode never contaminates the fitted exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ElectrodeGeometry, RefineSpec, build_grid, make_patch_map, preset_geometry
from .kernels import CorrelationKernel, DipoleOrientation
from .modes import HBAR, ModeBasis
from .noise import IonConfiguration, mode_noise, noise_matrix, self_cross

_R_DEPENDENT = ("exponential", "sinc", "kelvin_ker0")


@dataclass(frozen=True)
class StudySpec:
    """A fully configured two-ion (or one-ion) noise study.

    height is the ion height d; separation is only needed when a sweep
    varies the height at fixed separation.  resolution is in nodes per
    unit length of the base grid; a disk of radius refine_radius (default
    4 * height) under each ion is subdivided refine_factor-fold per axis.
    For the patch kernel, kernel.xi is the patch scale and patch_seed
    fixes the tessellation.
    """

    geometry: ElectrodeGeometry
    motion_axis: str
    orientation: DipoleOrientation | None
    kernel: CorrelationKernel
    height: float
    separation: float | None = None
    source_kind: str = "dipole"
    resolution: float = 4.0
    refine_radius: float | None = None
    refine_factor: int = 2
    patch_seed: int = 0
    num_threads: int = 0

    def __post_init__(self):
        if self.motion_axis not in ("x", "y", "z"):
            raise ValueError("motion_axis must be one of x, y, z")
        if self.source_kind not in ("dipole", "monopole"):
            raise ValueError("source_kind must be dipole or monopole")
        if not self.height > 0:
            raise ValueError("height must be positive")
        if self.separation is not None and self.separation < 0:
            raise ValueError("separation must be non-negative")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if self.kernel.kind == "patch" and not (self.kernel.xi or 0) > 0:
            raise ValueError("patch kernel needs xi (the patch scale) > 0")


@dataclass(frozen=True)
class SweepResult:
    """Rows of a sweep: per-point S_self, S_cross, ratio, optional modes."""

    variable: str
    values: np.ndarray = field(repr=False)
    s_self: np.ndarray = field(repr=False)
    s_cross: np.ndarray | None = field(default=None, repr=False)
    ratio: np.ndarray | None = field(default=None, repr=False)
    mode_s: np.ndarray | None = field(default=None, repr=False)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "s_self", np.asarray(self.s_self, dtype=float))
        if not np.all(np.isfinite(v)) or np.any(np.diff(v) <= 0):
            raise ValueError("sweep variable must be finite and strictly increasing")
        if len(self.s_self) != len(v):
            raise ValueError("column lengths must match the variable")
        if self.ratio is not None:
            r = np.asarray(self.ratio, dtype=float)
            object.__setattr__(self, "ratio", r)
            if np.any(np.abs(r) > 1.0 + 1e-9):
                raise ValueError("ratio outside [-1, 1]")

    @property
    def n_points(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CrossoverReport:
    """Outcome of a sign-change search in S_cross over a separation bracket."""

    found: bool
    bracket: tuple[float, float]
    n_sign_changes: int = 0
    location: float | None = None
    residual: float | None = None


@dataclass(frozen=True)
class ScalingFit:
    """Sliding-window log-log slopes and the detected scaling break."""

    centers: np.ndarray = field(repr=False)
    slopes: np.ndarray = field(repr=False)
    window: int = 0
    break_point: float | None = None


def _study_grid(spec: StudySpec, feet, refine_radius):
    refine = RefineSpec(
        centers=tuple((float(x), float(z)) for x, z in feet),
        radius=refine_radius,
        factor=spec.refine_factor,
    )
    grid = build_grid(spec.geometry, spec.resolution, refine=refine)
    if spec.kernel.kind == "patch":
        pm = make_patch_map(grid, spec.kernel.xi, spec.patch_seed)
        grid = grid.with_patch_map(pm)
    return grid


def _pair_matrix(spec: StudySpec, separation: float, height: float):
    ions = IonConfiguration.two_ions(separation, height, spec.motion_axis)
    radius = spec.refine_radius if spec.refine_radius is not None else 4.0 * height
    feet = [(p[0], p[2]) for p in ions.positions]
    grid = _study_grid(spec, feet, radius)
    return noise_matrix(
        ions, grid, spec.orientation, spec.kernel,
        source_kind=spec.source_kind, num_threads=spec.num_threads,
    )


def _metadata(spec: StudySpec, extra=None) -> dict:
    md = {
        "geometry": spec.geometry.name,
        "motion_axis": spec.motion_axis,
        "orientation": None if spec.orientation is None
        else [spec.orientation.ux, spec.orientation.uy, spec.orientation.uz],
        "kernel": spec.kernel.kind,
        "xi": spec.kernel.xi,
        "source_kind": spec.source_kind,
        "resolution": spec.resolution,
        "patch_seed": spec.patch_seed if spec.kernel.kind == "patch" else None,
    }
    if extra:
        md.update(extra)
    return md


def ratio_sweep(
    spec: StudySpec,
    variable: str,
    value_range: tuple[float, float],
    points: int,
    basis: ModeBasis | None = None,
) -> SweepResult:
    """Two-ion sweep of S_self, S_cross and their ratio.

    variable is 'ion_separation' (height fixed at spec.height) or
    'ion_height' (separation fixed at spec.separation); samples are
    logarithmically spaced over value_range.  With a basis, per-mode
    weights are included per row.
    """
    lo, hi = value_range
    if not (0 < lo < hi):
        raise ValueError("value_range must be positive and ordered")
    if points < 2:
        raise ValueError("need at least two sweep points")
    if variable not in ("ion_separation", "ion_height"):
        raise ValueError(f"unknown sweep variable {variable!r}")
    if variable == "ion_height" and spec.separation is None:
        raise ValueError("height sweep needs spec.separation")
    values = np.geomspace(lo, hi, points)
    s_self = np.empty(points)
    s_cross = np.empty(points)
    ratio = np.empty(points)
    mode_rows = [] if basis is not None else None
    for i, v in enumerate(values):
        if variable == "ion_separation":
            nm = _pair_matrix(spec, v, spec.height)
        else:
            nm = _pair_matrix(spec, spec.separation, v)
        s_self[i], s_cross[i], ratio[i] = self_cross(nm)
        if basis is not None:
            mode_rows.append(mode_noise(nm, basis))
    return SweepResult(
        variable=variable,
        values=values,
        s_self=s_self,
        s_cross=s_cross,
        ratio=ratio,
        mode_s=np.array(mode_rows) if basis is not None else None,
        metadata=_metadata(spec, {"variable": variable, "height": spec.height,
                                  "separation": spec.separation}),
    )


def find_crossover(
    spec: StudySpec,
    bracket: tuple[float, float] | None = None,
    scan_points: int = 33,
) -> CrossoverReport:
    """Locate where S_cross changes sign as the separation grows.

    The bracket defaults to l in [0.3, 10] * height.  A log-spaced scan
    counts sign changes; the smallest-separation crossing is refined by
    bisection until the bracket is narrower than 1e-3 * height.
    """
    if bracket is None:
        bracket = (0.3 * spec.height, 10.0 * spec.height)
    lo, hi = bracket
    if not (0 < lo < hi):
        raise ValueError("bracket must be positive and ordered")
    ls = np.geomspace(lo, hi, scan_points)
    crs = np.empty(scan_points)
    for i, l in enumerate(ls):
        crs[i] = self_cross(_pair_matrix(spec, l, spec.height))[1]
        if not np.isfinite(crs[i]):
            raise ValueError(f"non-finite S_cross at separation {l}")
    sign_idx = np.flatnonzero(np.sign(crs[:-1]) * np.sign(crs[1:]) < 0)
    if sign_idx.size == 0:
        return CrossoverReport(found=False, bracket=(float(lo), float(hi)))
    a, b = ls[sign_idx[0]], ls[sign_idx[0] + 1]
    fa = crs[sign_idx[0]]
    while (b - a) >= 1e-3 * spec.height:
        mid = 0.5 * (a + b)
        fm = self_cross(_pair_matrix(spec, mid, spec.height))[1]
        if not np.isfinite(fm):
            raise ValueError(f"non-finite S_cross at separation {mid}")
        if fm == 0.0:
            a = b = mid
            break
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    loc = 0.5 * (a + b)
    residual = abs(self_cross(_pair_matrix(spec, loc, spec.height))[1])
    return CrossoverReport(
        found=True,
        bracket=(float(lo), float(hi)),
        n_sign_changes=int(sign_idx.size),
        location=float(loc),
        residual=float(residual),
    )


def classify_orientation(y_crossover: bool, z_crossover: bool) -> str:
    """Map (y-motion, z-motion) crossover flags to the dipole orientation.

    Crossovers in both radial directions indicate mu_x; only the vertical
    one indicates mu_y; neither indicates mu_z.  A z-crossover without a
    y-crossover matches no orientation and is reported as inconsistent.
    """
    if y_crossover and z_crossover:
        return "mu_x"
    if y_crossover:
        return "mu_y"
    if z_crossover:
        return "inconsistent"
    return "mu_z"


def scaling_sweep(
    motion_axis: str,
    orientation: DipoleOrientation | None,
    kernel: CorrelationKernel,
    height_range: tuple[float, float],
    points: int,
    nodes_per_height: float = 4.0,
    source_kind: str = "dipole",
    refine_factor: int = 2,
    num_threads: int = 0,
) -> SweepResult:
    """One-ion noise S(d) over the scale-adaptive plane surrogate.

    The surrogate square (side 20 d) is regenerated at every height, with
    a fixed number of nodes per height unit, so the uncorrelated sum is
    exactly scale-invariant.  For r-dependent kernels the resolution is
    raised to at least 3 nodes per correlation length, keeping cells
    smaller than the kernel support at every height.
    """
    lo, hi = height_range
    if not (0 < lo < hi):
        raise ValueError("height_range must be positive and ordered")
    if points < 2:
        raise ValueError("need at least two sweep points")
    heights = np.geomspace(lo, hi, points)
    s = np.empty(points)
    for i, d in enumerate(heights):
        geo = preset_geometry("plane_surrogate", d)
        res = nodes_per_height / d
        if kernel.kind in _R_DEPENDENT:
            res = max(res, 3.0 / kernel.xi)
        grid = build_grid(
            geo, res,
            refine=RefineSpec(centers=((0.0, 0.0),), radius=4.0 * d,
                              factor=refine_factor),
        )
        ions = IonConfiguration(np.array([[0.0, d, 0.0]]), motion_axis)
        nm = noise_matrix(ions, grid, orientation, kernel,
                          source_kind=source_kind, num_threads=num_threads)
        s[i] = nm.s[0, 0]
    return SweepResult(
        variable="ion_height",
        values=heights,
        s_self=s,
        metadata={
            "geometry": "plane_surrogate(20d)",
            "motion_axis": motion_axis,
            "orientation": None if orientation is None
            else [orientation.ux, orientation.uy, orientation.uz],
            "kernel": kernel.kind,
            "xi": kernel.xi,
            "source_kind": source_kind,
            "nodes_per_height": nodes_per_height,
        },
    )


def scaling_exponent(sweep: SweepResult, window: int | None = None) -> ScalingFit:
    """Sliding-window least-squares slopes of ln S versus ln d.

    The default window is 5 points, one decade at the default sweep
    density.  For r-dependent kernels the two-regime break point is the
    window center where the local-slope curve has maximum curvature
    (largest absolute second difference).
    """
    d = sweep.values
    s = sweep.s_self
    if np.any(s <= 0):
        raise ValueError("scaling fit needs S > 0 everywhere")
    if window is None:
        window = 5
    window = min(window, len(d))
    if window < 3:
        raise ValueError("need at least three points per window")
    t = np.log(d)
    y = np.log(s)
    n_win = len(d) - window + 1
    centers = np.empty(n_win)
    slopes = np.empty(n_win)
    for i in range(n_win):
        ts, ys = t[i:i + window], y[i:i + window]
        slopes[i] = np.polyfit(ts, ys, 1)[0]
        centers[i] = math.exp(0.5 * (ts[0] + ts[-1]))
    break_point = None
    if sweep.metadata.get("kernel") in _R_DEPENDENT and n_win >= 3:
        curv = np.abs(np.diff(slopes, 2))
        k = int(np.argmax(curv))
        tc = np.log(centers[1:-1])
        # The discrete argmax is quantized to the sweep grid; the vertex of
        # the parabola through the three samples around it removes that
        # quantization when the maximum is interior.
        shift = 0.0
        if 0 < k < len(curv) - 1:
            denom = curv[k - 1] - 2.0 * curv[k] + curv[k + 1]
            if denom < 0.0:
                shift = float(np.clip(
                    0.5 * (curv[k - 1] - curv[k + 1]) / denom, -0.5, 0.5))
        step = tc[1] - tc[0] if len(tc) > 1 else 0.0
        break_point = float(math.exp(tc[k] + shift * step))
    return ScalingFit(centers=centers, slopes=slopes, window=window,
                      break_point=break_point)


def chain_noise_sweep(
    spec: StudySpec,
    basis: ModeBasis,
    spacing_range: tuple[float, float],
    points: int,
) -> SweepResult:
    """Per-mode noise weights for an equally spaced chain versus spacing.

    The chain lies along x at spec.height above spec.geometry; every row
    projects the full N-ion noise matrix onto the given mode basis.
    Parity labels ride along in the metadata.
    """
    lo, hi = spacing_range
    if not (0 < lo < hi):
        raise ValueError("spacing_range must be positive and ordered")
    if points < 2:
        raise ValueError("need at least two sweep points")
    n = basis.n
    spacings = np.geomspace(lo, hi, points)
    s_self = np.empty(points)
    mode_rows = np.empty((points, n))
    for i, l in enumerate(spacings):
        ions = IonConfiguration.chain(n, l, spec.height, spec.motion_axis)
        radius = spec.refine_radius if spec.refine_radius is not None else 4.0 * spec.height
        feet = [(p[0], p[2]) for p in ions.positions]
        grid = _study_grid(spec, feet, radius)
        nm = noise_matrix(ions, grid, spec.orientation, spec.kernel,
                          source_kind=spec.source_kind,
                          num_threads=spec.num_threads)
        s_self[i] = float(np.mean(np.diag(nm.s)))
        mode_rows[i] = mode_noise(nm, basis)
    return SweepResult(
        variable="ion_spacing",
        values=spacings,
        s_self=s_self,
        mode_s=mode_rows,
        metadata=_metadata(spec, {"n_ions": n, "parity": list(basis.parity),
                                  "height": spec.height}),
    )


def heating_rate(S: float, mass: float, charge: float, omega: float) -> float:
    """Motional heating rate in quanta per second, q^2 S / (4 m hbar Omega)."""
    if S < 0:
        raise ValueError("spectral density must be non-negative")
    if not (mass > 0 and charge > 0 and omega > 0):
        raise ValueError("mass, charge and frequency must be positive")
    return charge**2 * S / (4.0 * mass * HBAR * omega)


def ratio_uncertainty(gamma_plus: float, gamma_minus: float, eps: float) -> float:
    """Absolute uncertainty of the noise ratio from two heating rates.

    With equal mode frequencies the ratio reduces to
    (Gamma+ - Gamma-) / (Gamma+ + Gamma-), and a common relative
    heating-rate uncertainty eps propagates to
    eps * sqrt(1 + ratio^2) * sqrt(Gamma+^2 + Gamma-^2) / (Gamma+ + Gamma-),
    bounded by eps * sqrt(2).
    """
    if gamma_plus < 0 or gamma_minus < 0 or (gamma_plus + gamma_minus) == 0:
        raise ValueError("heating rates must be non-negative and not both zero")
    if eps < 0:
        raise ValueError("relative uncertainty must be non-negative")
    total = gamma_plus + gamma_minus
    s_ratio = (gamma_plus - gamma_minus) / total
    return eps * math.sqrt(1.0 + s_ratio**2) * math.hypot(gamma_plus, gamma_minus) / total


def xi_from_diffusion(D: float, omega: float) -> float:
    """Correlation length sqrt(D / Omega) from a surface diffusion constant."""
    if not (D > 0 and omega > 0):
        raise ValueError("diffusion constant and frequency must be positive")
    return math.sqrt(D / omega)
