"""Electrode geometry, midpoint quadrature grids and patch tessellation.

All electrodes are planar regions in the y = 0 plane described by (x, z)
coordinates.  Grids use the midpoint rule on per-region tensor meshes;
cells of curved regions are kept iff their center lies inside.  A grid can
be refined around chosen disks (cells split in half per axis, repeatedly),
which the analysis layer uses to oversample the surface under each ion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Rectangle:
    x_min: float
    x_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.z_max > self.z_min):
            raise GeometryError(f"degenerate rectangle {self}")

    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.z_max - self.z_min)

    def bbox(self):
        return self.x_min, self.x_max, self.z_min, self.z_max

    def contains(self, x, z):
        return (
            (x >= self.x_min) & (x <= self.x_max)
            & (z >= self.z_min) & (z <= self.z_max)
        )

    curved = False


@dataclass(frozen=True)
class Disk:
    cx: float
    cz: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError(f"disk needs radius > 0, got {self.radius}")

    def area(self) -> float:
        return math.pi * self.radius**2

    def bbox(self):
        r = self.radius
        return self.cx - r, self.cx + r, self.cz - r, self.cz + r

    def contains(self, x, z):
        return (x - self.cx) ** 2 + (z - self.cz) ** 2 <= self.radius**2

    curved = True


@dataclass(frozen=True)
class Annulus:
    cx: float
    cz: float
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_outer:
            raise GeometryError(f"annulus needs 0 < r_inner < r_outer, got {self}")

    def area(self) -> float:
        return math.pi * (self.r_outer**2 - self.r_inner**2)

    def bbox(self):
        r = self.r_outer
        return self.cx - r, self.cx + r, self.cz - r, self.cz + r

    def contains(self, x, z):
        rr = (x - self.cx) ** 2 + (z - self.cz) ** 2
        return (rr >= self.r_inner**2) & (rr <= self.r_outer**2)

    curved = True


Region = Rectangle | Disk | Annulus


@dataclass(frozen=True)
class ElectrodeGeometry:
    """A set of non-overlapping planar regions acting as noise-bearing surfaces."""

    regions: tuple[Region, ...]
    name: str = "custom"

    def __post_init__(self):
        if not self.regions:
            raise GeometryError("geometry needs at least one region")
        for r in self.regions:
            if not np.all(np.isfinite(r.bbox())):
                raise GeometryError(f"region with non-finite extent: {r}")

    def total_area(self) -> float:
        return sum(r.area() for r in self.regions)

    def bbox(self):
        boxes = [r.bbox() for r in self.regions]
        return (
            min(b[0] for b in boxes), max(b[1] for b in boxes),
            min(b[2] for b in boxes), max(b[3] for b in boxes),
        )

    def diameter(self) -> float:
        x0, x1, z0, z1 = self.bbox()
        return math.hypot(x1 - x0, z1 - z0)


def preset_geometry(name: str, scale: float) -> ElectrodeGeometry:
    """Named electrode layouts.

    plane_surrogate   square of side 20*scale centered at the origin, a
                      finite stand-in for the infinite plane (scale = ion
                      height).
    segmented_trap    two parallel strips of length 10*scale along x: one
                      of width scale at z in [0, scale], one of width
                      2*scale at z in [-3*scale, -scale]; the ion line runs
                      along z = 0.
    square            single square of side scale centered at the origin.
    stylus            disk of radius scale plus a concentric annulus from
                      3*scale to 5*scale; the gap is bare.
    """
    if not scale > 0:
        raise GeometryError(f"scale must be positive, got {scale}")
    s = float(scale)
    if name == "plane_surrogate":
        regions = (Rectangle(-10 * s, 10 * s, -10 * s, 10 * s),)
    elif name == "segmented_trap":
        regions = (
            Rectangle(-5 * s, 5 * s, 0.0, s),
            Rectangle(-5 * s, 5 * s, -3 * s, -s),
        )
    elif name == "square":
        regions = (Rectangle(-0.5 * s, 0.5 * s, -0.5 * s, 0.5 * s),)
    elif name == "stylus":
        regions = (Disk(0.0, 0.0, s), Annulus(0.0, 0.0, 3 * s, 5 * s))
    else:
        raise GeometryError(f"unknown preset {name!r}")
    return ElectrodeGeometry(regions, name=name)


@dataclass(frozen=True)
class RefineSpec:
    """Disks inside which grid cells are subdivided by `factor` per axis."""

    centers: tuple[tuple[float, float], ...]
    radius: float
    factor: int = 2

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("refine radius must be positive")
        if self.factor < 2:
            raise GeometryError("refine factor must be >= 2")


@dataclass(frozen=True)
class PatchMap:
    """Node-to-patch assignment from a Poisson-point Voronoi tessellation."""

    patch_scale: float
    seed: int
    labels: np.ndarray = field(repr=False)
    n_patches: int = 0

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_patches", int(labels.max()) + 1 if labels.size else 0)
        if labels.size and sorted(set(labels.tolist())) != list(range(self.n_patches)):
            raise GeometryError("patch ids must be contiguous 0..P-1")


@dataclass(frozen=True)
class QuadratureGrid:
    """Midpoint-rule nodes and weights over an electrode geometry.

    nodes       (M, 2) array of (x, z) cell centers
    weights     (M,) positive cell areas
    region      (M,) index of the owning region
    resolution  nodes per unit length of the base (unrefined) mesh
    patch_id    optional (M,) patch labels for the patch kernel
    """

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    region: np.ndarray = field(repr=False)
    resolution: float
    patch_id: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise GeometryError("nodes must be an (M, 2) array")
        if self.weights.shape != (len(self.nodes),):
            raise GeometryError("weights length must match nodes")
        if self.weights.size == 0:
            raise GeometryError("empty grid; raise the resolution")
        if np.any(self.weights <= 0):
            raise GeometryError("weights must be positive")

    @property
    def x(self) -> np.ndarray:
        return self.nodes[:, 0]

    @property
    def z(self) -> np.ndarray:
        return self.nodes[:, 1]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def cell_diagonal(self) -> float:
        return math.sqrt(2.0) / self.resolution

    def with_patch_map(self, pm: PatchMap) -> "QuadratureGrid":
        if len(pm.labels) != self.n_nodes:
            raise GeometryError("patch map length does not match grid")
        return replace(self, patch_id=pm.labels)


def _region_cells(region: Region, resolution: float):
    x0, x1, z0, z1 = region.bbox()
    nx = max(1, round((x1 - x0) * resolution))
    nz = max(1, round((z1 - z0) * resolution))
    hx = (x1 - x0) / nx
    hz = (z1 - z0) / nz
    cx = x0 + (np.arange(nx) + 0.5) * hx
    cz = z0 + (np.arange(nz) + 0.5) * hz
    X, Z = np.meshgrid(cx, cz, indexing="ij")
    X, Z = X.ravel(), Z.ravel()
    if region.curved:
        keep = region.contains(X, Z)
        X, Z = X[keep], Z[keep]
    return X, Z, hx, hz


def _subdivide(region, X, Z, hx, hz, factor):
    off = (np.arange(factor) + 0.5) / factor - 0.5
    ox, oz = np.meshgrid(off * hx, off * hz, indexing="ij")
    SX = (X[:, None] + ox.ravel()[None, :]).ravel()
    SZ = (Z[:, None] + oz.ravel()[None, :]).ravel()
    if region.curved:
        keep = region.contains(SX, SZ)
        SX, SZ = SX[keep], SZ[keep]
    return SX, SZ


def build_grid(
    geometry: ElectrodeGeometry,
    resolution: float,
    refine: RefineSpec | None = None,
) -> QuadratureGrid:
    """Midpoint quadrature grid at `resolution` nodes per unit length.

    With a RefineSpec, cells whose centers fall inside any refine disk are
    subdivided factor x factor (weights divided accordingly); subdivision
    is area-exact for rectangles and re-applies the center-inside rule for
    curved regions.
    """
    if not resolution > 0:
        raise GeometryError(f"resolution must be positive, got {resolution}")
    xs, zs, ws, ridx = [], [], [], []
    for ir, region in enumerate(geometry.regions):
        X, Z, hx, hz = _region_cells(region, resolution)
        w_cell = hx * hz
        if refine is not None:
            sel = np.zeros(X.shape, dtype=bool)
            for (rx, rz) in refine.centers:
                sel |= (X - rx) ** 2 + (Z - rz) ** 2 <= refine.radius**2
            if np.any(sel):
                SX, SZ = _subdivide(region, X[sel], Z[sel], hx, hz, refine.factor)
                X, Z = np.concatenate([X[~sel], SX]), np.concatenate([Z[~sel], SZ])
                w = np.concatenate([
                    np.full((~sel).sum(), w_cell),
                    np.full(SX.size, w_cell / refine.factor**2),
                ])
            else:
                w = np.full(X.size, w_cell)
        else:
            w = np.full(X.size, w_cell)
        # overlap guard: a node generated for one region must not sit in another
        for jr, other in enumerate(geometry.regions):
            if jr != ir and np.any(other.contains(X, Z)):
                raise GeometryError(f"regions {ir} and {jr} overlap")
        xs.append(X)
        zs.append(Z)
        ws.append(w)
        ridx.append(np.full(X.size, ir, dtype=np.int64))
    nodes = np.column_stack([np.concatenate(xs), np.concatenate(zs)])
    return QuadratureGrid(
        nodes=nodes,
        weights=np.concatenate(ws),
        region=np.concatenate(ridx),
        resolution=float(resolution),
    )


def make_patch_map(grid: QuadratureGrid, patch_scale: float, seed: int) -> PatchMap:
    """Poisson-point Voronoi patches with point density 1/patch_scale^2.

    Seed points are drawn uniformly over the node bounding box with a
    Poisson-distributed count (at least one); each node takes the id of
    the nearest seed point.  Deterministic per (grid, patch_scale, seed).
    A patch_scale at or above the bounding-box diagonal forces one patch.
    """
    if not patch_scale > 0:
        raise GeometryError(f"patch_scale must be positive, got {patch_scale}")
    x0, x1 = grid.x.min(), grid.x.max()
    z0, z1 = grid.z.min(), grid.z.max()
    diag = math.hypot(x1 - x0, z1 - z0)
    rng = np.random.default_rng(seed)
    if patch_scale >= diag:
        n_pts = 1
    else:
        lam = (x1 - x0) * (z1 - z0) / patch_scale**2
        if lam > 5e6:
            raise GeometryError(
                f"patch_scale {patch_scale} implies ~{lam:.2e} seed points"
            )
        n_pts = max(1, int(rng.poisson(lam)))
    pts = np.column_stack([
        rng.uniform(x0, x1, size=n_pts),
        rng.uniform(z0, z1, size=n_pts),
    ])
    _, nearest = cKDTree(pts).query(grid.nodes)
    # relabel to drop seeds that own no node
    _, labels = np.unique(nearest, return_inverse=True)
    return PatchMap(patch_scale=float(patch_scale), seed=int(seed), labels=labels)
