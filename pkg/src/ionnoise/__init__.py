"""Spatially correlated electric-field noise above surface-trap electrodes."""

from .analysis import (
    CrossoverReport,
    ScalingFit,
    StudySpec,
    SweepResult,
    chain_noise_sweep,
    classify_orientation,
    find_crossover,
    heating_rate,
    ratio_sweep,
    ratio_uncertainty,
    scaling_exponent,
    scaling_sweep,
    xi_from_diffusion,
)
from .geometry import (
    Annulus,
    Disk,
    ElectrodeGeometry,
    GeometryError,
    PatchMap,
    QuadratureGrid,
    Rectangle,
    RefineSpec,
    build_grid,
    make_patch_map,
    preset_geometry,
)
from .kernels import (
    CorrelationKernel,
    DipoleOrientation,
    corr_kernel,
    dipole_g,
    kelvin_ker0,
    monopole_g,
)
from .mc import EnsembleEstimate, mc_ensemble_noise
from .modes import ModeBasis, chain_modes, mode_parity, two_ion_basis
from .noise import (
    PAIR_BACKEND,
    IonConfiguration,
    NoiseMatrix,
    cross_mode_term,
    field_matrix,
    mode_noise,
    noise_matrix,
    self_cross,
)

__version__ = "0.1.0"

__all__ = [
    "Annulus",
    "CorrelationKernel",
    "CrossoverReport",
    "Disk",
    "DipoleOrientation",
    "ElectrodeGeometry",
    "EnsembleEstimate",
    "GeometryError",
    "IonConfiguration",
    "ModeBasis",
    "NoiseMatrix",
    "PatchMap",
    "PAIR_BACKEND",
    "QuadratureGrid",
    "Rectangle",
    "RefineSpec",
    "ScalingFit",
    "StudySpec",
    "SweepResult",
    "build_grid",
    "chain_modes",
    "chain_noise_sweep",
    "classify_orientation",
    "corr_kernel",
    "cross_mode_term",
    "dipole_g",
    "field_matrix",
    "find_crossover",
    "heating_rate",
    "kelvin_ker0",
    "make_patch_map",
    "mc_ensemble_noise",
    "mode_noise",
    "mode_parity",
    "monopole_g",
    "noise_matrix",
    "preset_geometry",
    "ratio_sweep",
    "ratio_uncertainty",
    "scaling_exponent",
    "scaling_sweep",
    "self_cross",
    "two_ion_basis",
    "xi_from_diffusion",
]
