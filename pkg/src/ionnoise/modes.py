"""Normal modes of equally spaced ion chains and their mirror parity.

The chain model keeps every ion in an identical local well of frequency
omega0 and adds the Coulomb curvature couplings kappa_ij = 2 q^2 /
(4 pi eps0 |x_i - x_j|^3) at the enforced equal spacing.  Because the
local wells are identical, the stiffness matrix is omega0^2-shifted, so
the mode vectors depend only on the |i - j|^-3 coupling pattern; the
coupling strength moves the frequencies alone.

Mode ordering is by ascending frequency, which for this stiffness puts
the center-of-mass (even) mode first and the two-ion stretch second.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# CODATA values, 10 digits
E_CHARGE = 1.602176634e-19
HBAR = 1.054571817e-34
EPS0 = 8.854187813e-12
AMU = 1.660539066e-27
M_CA40 = 39.96259086 * AMU

PARITY_TOL = 1e-6


@dataclass(frozen=True)
class ModeBasis:
    """Orthonormal mode vectors (rows), optional frequencies, parity labels."""

    vectors: np.ndarray = field(repr=False)
    frequencies: np.ndarray | None = field(default=None, repr=False)
    parity: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        object.__setattr__(self, "vectors", v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("mode matrix must be square")
        dev = np.max(np.abs(v @ v.T - np.eye(len(v))))
        if dev > 1e-10:
            raise ValueError(f"mode rows not orthonormal (deviation {dev:.2e})")
        if self.parity and len(self.parity) != len(v):
            raise ValueError("parity labels must match mode count")

    @property
    def n(self) -> int:
        return len(self.vectors)


def two_ion_basis() -> ModeBasis:
    """Center-of-mass and stretch rows, (1, +-1)/sqrt(2)."""
    f = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    return ModeBasis(vectors=f, parity=("even", "odd"))


def mode_parity(vector) -> str:
    """Mirror parity of one mode vector: 'even', 'odd' or 'none'."""
    v = np.asarray(vector, dtype=float)
    mirrored = v[::-1]
    if np.max(np.abs(mirrored - v)) <= PARITY_TOL:
        return "even"
    if np.max(np.abs(mirrored + v)) <= PARITY_TOL:
        return "odd"
    return "none"


def _symmetrize_cluster(block: np.ndarray) -> np.ndarray:
    """Recombine degenerate eigenvectors into parity eigenstates.

    Projects the cluster onto its mirror-even and mirror-odd components and
    orthonormalizes each; even modes are listed before odd within the
    cluster.
    """
    out = []
    for sign in (+1.0, -1.0):
        proj = 0.5 * (block + sign * block[:, ::-1])
        # SVD-based orthonormal span, rank-filtered
        u, s, vt = np.linalg.svd(proj, full_matrices=False)
        keep = s > 1e-8 * max(1.0, s[0] if s.size else 0.0)
        out.append(vt[keep])
    return np.vstack(out)


def chain_modes(
    n_ions: int,
    spacing: float,
    omega0: float,
    charge: float = E_CHARGE,
    mass: float = M_CA40,
) -> ModeBasis:
    """Axial modes of an equally spaced n-ion chain.

    Returns rows sorted by ascending frequency with parity labels; clusters
    of (near-)degenerate frequencies are recombined so every row has a
    definite mirror parity.
    """
    if n_ions < 2:
        raise ValueError("need at least two ions")
    if not (spacing > 0 and omega0 > 0 and charge > 0 and mass > 0):
        raise ValueError("spacing, omega0, charge and mass must be positive")
    idx = np.arange(n_ions)
    sep = np.abs(idx[:, None] - idx[None, :]) * spacing
    with np.errstate(divide="ignore"):
        kappa = np.where(sep > 0, 2.0 * charge**2 / (4.0 * np.pi * EPS0 * sep**3), 0.0)
    K = -kappa
    np.fill_diagonal(K, mass * omega0**2 + kappa.sum(axis=1))
    lam, vec = np.linalg.eigh(K)
    order = np.argsort(lam)
    lam, vec = lam[order], vec[:, order]
    modes = vec.T.copy()

    # group near-degenerate frequencies and enforce parity within each group
    groups = []
    start = 0
    for j in range(1, n_ions + 1):
        if j == n_ions or (lam[j] - lam[start]) > 1e-9 * max(lam[j], 1e-300):
            groups.append((start, j))
            start = j
    rows = []
    for a, b in groups:
        block = modes[a:b]
        if all(mode_parity(v) != "none" for v in block):
            rows.extend(block)
        else:
            rows.extend(_symmetrize_cluster(block))
    modes = np.array(rows)
    # fix an overall sign: first nonzero component positive
    for v in modes:
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if nz.size and v[nz[0]] < 0:
            v *= -1.0
    parity = tuple(mode_parity(v) for v in modes)
    freqs = np.sqrt(lam / mass)
    return ModeBasis(vectors=modes, frequencies=freqs, parity=parity)
