"""Sweeps, crossover search, scaling fits, and the small closed forms."""

import math

import numpy as np
import pytest

import ionnoise.analysis as analysis
from ionnoise.analysis import (
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
from ionnoise.geometry import preset_geometry
from ionnoise.kernels import CorrelationKernel, DipoleOrientation
from ionnoise.modes import M_CA40, chain_modes
from ionnoise.noise import NoiseMatrix

UNCORR = CorrelationKernel("uncorrelated")
ORI_Y = DipoleOrientation.along("y")


def _plane_spec(**kw):
    defaults = dict(geometry=preset_geometry("plane_surrogate", 1.0),
                    motion_axis="x", orientation=ORI_Y, kernel=UNCORR,
                    height=1.0)
    defaults.update(kw)
    return StudySpec(**defaults)


def test_study_spec_validation():
    _plane_spec()
    with pytest.raises(ValueError):
        _plane_spec(height=-1.0)
    with pytest.raises(ValueError):
        _plane_spec(motion_axis="w")
    with pytest.raises(ValueError):
        _plane_spec(kernel=CorrelationKernel("patch", xi=None))


def test_ratio_sweep_shape_and_bounds():
    spec = _plane_spec()
    sw = ratio_sweep(spec, "ion_separation", (0.1, 10.0), 13)
    assert sw.variable == "ion_separation"
    assert len(sw.values) == 13
    assert np.all(np.diff(sw.values) > 0)
    assert np.all(sw.s_self > 0)
    assert np.all(np.abs(sw.ratio) <= 1.0 + 1e-9)
    assert sw.s_cross.shape == sw.values.shape


def test_ratio_sweep_height_variable_needs_separation():
    spec = _plane_spec()
    with pytest.raises(ValueError):
        ratio_sweep(spec, "ion_height", (0.5, 2.0), 5)
    spec2 = _plane_spec(separation=1.0)
    sw = ratio_sweep(spec2, "ion_height", (0.5, 2.0), 5)
    assert len(sw.values) == 5
    with pytest.raises(ValueError):
        ratio_sweep(spec, "voltage", (0.5, 2.0), 5)


def test_sweep_result_validation():
    with pytest.raises(ValueError):
        SweepResult("ion_separation", np.array([1.0, 1.0, 2.0]),
                    np.ones(3))
    with pytest.raises(ValueError):
        SweepResult("ion_separation", np.array([1.0, 2.0]),
                    np.ones(2), ratio=np.array([0.5, 1.5]))


def test_find_crossover_bisects_to_tolerance():
    spec = _plane_spec()
    rep = find_crossover(spec)
    assert rep.found
    assert rep.n_sign_changes == 1
    assert 0.3 <= rep.location <= 10.0
    # bisection narrows the bracket below 1e-3 of the ion height
    ref = find_crossover(spec, bracket=(0.8, 1.3))
    assert abs(ref.location - rep.location) < 2e-3


def test_find_crossover_absent_in_tight_bracket():
    spec = _plane_spec()
    rep = find_crossover(spec, bracket=(0.1, 0.3))
    assert not rep.found
    assert rep.location is None
    assert rep.n_sign_changes == 0


def test_find_crossover_counts_multiple_sign_changes(monkeypatch):
    # synthetic cross term with three zeros in the bracket
    def fake_pair_matrix(spec, separation, height):
        c = 0.5 * math.sin(math.pi * separation)
        return NoiseMatrix(np.array([[1.0, c], [c, 1.0]]), spec.motion_axis,
                           spec.kernel, spec.source_kind)

    monkeypatch.setattr(analysis, "_pair_matrix", fake_pair_matrix)
    spec = _plane_spec()
    rep = find_crossover(spec, bracket=(0.5, 3.4), scan_points=61)
    assert rep.found
    assert rep.n_sign_changes == 3
    assert rep.location == pytest.approx(1.0, abs=1e-3)
    assert rep.residual < 2e-3


def test_find_crossover_rejects_bad_bracket():
    spec = _plane_spec()
    with pytest.raises(ValueError):
        find_crossover(spec, bracket=(2.0, 1.0))
    with pytest.raises(ValueError):
        find_crossover(spec, bracket=(-1.0, 1.0))


def test_classify_orientation_mapping():
    assert classify_orientation(True, True) == "mu_x"
    assert classify_orientation(True, False) == "mu_y"
    assert classify_orientation(False, False) == "mu_z"
    assert classify_orientation(False, True) == "inconsistent"


def test_scaling_sweep_uncorrelated_slope_is_minus_four():
    sw = scaling_sweep("x", ORI_Y, UNCORR, (0.5, 50.0), 11)
    fit = scaling_exponent(sw, window=5)
    assert np.allclose(fit.slopes, -4.0, atol=1e-6)
    assert fit.break_point is None


def test_scaling_exponent_invariant_under_amplitude_rescale():
    sw = scaling_sweep("x", ORI_Y, UNCORR, (0.5, 50.0), 11)
    scaled = SweepResult(sw.variable, sw.values, 7.3 * sw.s_self,
                         metadata=sw.metadata)
    a = scaling_exponent(sw, window=5)
    b = scaling_exponent(scaled, window=5)
    assert np.allclose(a.slopes, b.slopes, atol=1e-12)


def test_scaling_exponent_validation():
    sw = scaling_sweep("x", ORI_Y, UNCORR, (0.5, 5.0), 6)
    with pytest.raises(ValueError):
        scaling_exponent(sw, window=2)
    bad = SweepResult(sw.variable, sw.values, np.ones(6) * -1.0,
                      metadata=sw.metadata)
    with pytest.raises(ValueError):
        scaling_exponent(bad)


def test_chain_noise_sweep_shapes_and_parity():
    spec = _plane_spec(geometry=preset_geometry("segmented_trap", 1.0),
                       resolution=3.0)
    basis = chain_modes(4, spacing=1.0, omega0=1.0)
    sw = chain_noise_sweep(spec, basis, (0.1, 1.0), 4)
    assert sw.mode_s.shape == (4, 4)
    assert np.all(sw.s_self > 0)
    assert sw.metadata["parity"] == ["even", "odd", "even", "odd"]
    assert np.all(sw.mode_s >= -1e-12)


def test_heating_rate_closed_form():
    omega = 2 * np.pi * 1e6
    rate = heating_rate(1e-12, M_CA40, 1.602176634e-19, omega)
    assert rate == pytest.approx(145.9493055757693, rel=1e-12)
    # quanta/s scales linearly in S and inversely in mass and frequency
    assert heating_rate(2e-12, M_CA40, 1.602176634e-19, omega) \
        == pytest.approx(2 * rate, rel=1e-12)


def test_ratio_uncertainty_closed_forms():
    eps = 0.03
    assert ratio_uncertainty(2.0, 2.0, eps) == pytest.approx(
        eps / np.sqrt(2.0), rel=1e-12)
    # one-sided rate: ratio is +-1 and the error saturates the bound
    assert ratio_uncertainty(5.0, 0.0, eps) == pytest.approx(
        eps * np.sqrt(2.0), rel=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(2000):
        gp, gm = rng.uniform(0.01, 10.0, size=2)
        e = rng.uniform(0.001, 0.2)
        assert ratio_uncertainty(gp, gm, e) <= e * np.sqrt(2.0) + 1e-15


def test_xi_from_diffusion_dimensional_form():
    assert xi_from_diffusion(4.0, 1.0) == pytest.approx(2.0)
    assert xi_from_diffusion(1e-12, 2 * np.pi * 1e6) == pytest.approx(
        np.sqrt(1e-12 / (2 * np.pi * 1e6)), rel=1e-12)
    with pytest.raises(ValueError):
        xi_from_diffusion(-1.0, 1.0)
    with pytest.raises(ValueError):
        xi_from_diffusion(1.0, 0.0)
