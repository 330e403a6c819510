"""Kelvin ker0 implementations against high-precision references."""

import numpy as np
import pytest

from ionnoise.kernels import kelvin_ker0

mpmath = pytest.importorskip("mpmath")

try:
    from ionnoise import _pairsum
except ImportError:
    _pairsum = None


def _reference_ker0(x):
    # Re K0(x exp(i pi/4)) evaluated at 40 significant digits
    with mpmath.workdps(40):
        val = mpmath.besselk(0, mpmath.mpf(x) * mpmath.exp(mpmath.mpc(0, mpmath.pi / 4)))
        return float(val.real)


def _sample_points():
    pts = np.geomspace(1e-6, 50.0, 120)
    # pin the series/asymptotic handover region explicitly
    return np.concatenate([pts, np.linspace(6.0, 10.0, 17), [8.0]])


def test_python_ker0_against_mpmath():
    for x in _sample_points():
        ref = _reference_ker0(x)
        assert abs(kelvin_ker0(float(x)) - ref) <= 1e-9


@pytest.mark.skipif(_pairsum is None, reason="compiled extension not built")
def test_compiled_ker0_against_mpmath():
    for x in _sample_points():
        ref = _reference_ker0(x)
        assert abs(_pairsum.kelvin_ker0(float(x)) - ref) <= 1e-9


def test_series_and_asymptotic_agree_across_handover():
    # Both branches must agree where either could be used; any stitch
    # discontinuity at the branch point would spoil kernel smoothness.
    xs = np.linspace(6.0, 10.0, 81)
    vals = np.array([kelvin_ker0(float(x)) for x in xs])
    diffs = np.abs(np.diff(vals))
    # ker0 is smooth and slowly varying here, so successive samples stay close
    assert np.all(diffs < 2e-3)
    for x in (7.999999, 8.0, 8.000001):
        assert abs(kelvin_ker0(x) - _reference_ker0(x)) <= 1e-9


def test_against_scipy_special():
    from scipy.special import ker

    xs = np.geomspace(0.01, 20.0, 40)
    for x in xs:
        assert kelvin_ker0(float(x)) == pytest.approx(float(ker(x)), abs=1e-9)


def test_ker0_vectorizes():
    xs = np.geomspace(0.1, 5.0, 7)
    vec = kelvin_ker0(xs)
    assert vec.shape == xs.shape
    for i, x in enumerate(xs):
        assert vec[i] == kelvin_ker0(float(x))


def test_ker0_domain_errors():
    with pytest.raises(ValueError):
        kelvin_ker0(0.0)
    with pytest.raises(ValueError):
        kelvin_ker0(-1.0)


def test_ker0_oscillates_and_decays():
    # sign changes within the first zeros region, then exponential decay
    xs = np.linspace(0.5, 30.0, 600)
    vals = np.array([kelvin_ker0(float(x)) for x in xs])
    signs = np.sign(vals)
    assert np.sum(signs[:-1] != signs[1:]) >= 3
    assert abs(vals[-1]) < 1e-8
