"""Moment kernels against independent quadrature and closed forms."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sbqcp.bath import (BathParams, DEFAULT_QUAD, DiscreteBath,
                        QuadratureConfig, bath_moment, discretize_bath,
                        moment_table, overlap_exponent_divergent,
                        spectral_density)
from sbqcp.errors import DomainError


def _p(s, alpha=0.3, delta=0.1):
    return BathParams(s, alpha, delta)


# ---------------------------------------------------------------------------
# independent oracle: tanh-sinh quadrature at 30 digits

def _mp_kernel(kind, s, w, a):
    s, w, a = mp.mpf(s), mp.mpf(w), mp.mpf(a)
    f = {
        "I1": lambda t: t ** s / (t + w) ** 2,
        "I2": lambda t: t ** s / ((t + w) ** 2 * (t + a)),
        "I3": lambda t: t ** (s + 1) / ((t + w) ** 2 * (t + a) ** 2),
        "I4": lambda t: t ** s / ((t + w) ** 2 * (t + a) ** 2),
        "Jd": lambda t: t ** (s - 1) / (t + w) ** 2,
        "Kbar": lambda t: t ** s * (t + 2 * w) / (2 * (t + w) ** 2),
    }[kind]
    return float(mp.quad(f, [0, mp.mpf("1e-4"), mp.mpf("1e-2"), 1]))


@pytest.mark.parametrize("s", [0.3, 0.5, 1.0, 1.5])
@pytest.mark.parametrize("w", [0.01, 0.1, 1.0])
def test_base_kernels_match_reference_quadrature(s, w):
    mp.mp.dps = 30
    tab = moment_table(s, w)
    for kind in ("I1", "Jd", "Kbar"):
        ref = _mp_kernel(kind, s, w, 0.0)
        assert tab[kind] == pytest.approx(ref, rel=1e-9), kind


@pytest.mark.parametrize("s", [0.5, 1.0])
@pytest.mark.parametrize("w,a", [(0.05, 0.005), (0.1, 0.1), (0.4, 0.02)])
def test_shifted_kernels_match_reference_quadrature(s, w, a):
    mp.mp.dps = 30
    tab = moment_table(s, w, a)
    for kind in ("I2", "I3", "I4"):
        ref = _mp_kernel(kind, s, w, a)
        assert tab[kind] == pytest.approx(ref, rel=1e-9), kind


def test_ohmic_closed_forms():
    # at s = 1 every base kernel integrates in closed form
    for w in (0.02, 0.1, 0.7):
        tab = moment_table(1.0, w)
        i1 = math.log((1 + w) / w) + w / (1 + w) - 1
        jd = 1 / w - 1 / (1 + w)
        kbar = 0.5 * (1 - w + w * w / (1 + w))
        assert tab["I1"] == pytest.approx(i1, rel=1e-10)
        assert tab["Jd"] == pytest.approx(jd, rel=1e-10)
        assert tab["Kbar"] == pytest.approx(kbar, rel=1e-10)


def test_subohmic_closed_form():
    # s = 1/2: substitute omega = t^2, integrate the rational remainder
    for w in (0.05, 0.3):
        jd = 1 / (w * (1 + w)) + math.atan(1 / math.sqrt(w)) / w ** 1.5
        assert bath_moment(_p(0.5), "Jd", w) == pytest.approx(jd, rel=1e-10)


def test_shift_limits_reduce_to_unshifted_kernels():
    for s in (0.5, 1.0):
        for w in (0.05, 0.2):
            jd = bath_moment(_p(s), "Jd", w)
            assert bath_moment(_p(s), "I2", w, a=0.0) == \
                pytest.approx(jd, rel=1e-9)
            assert bath_moment(_p(s), "I3", w, a=0.0) == \
                pytest.approx(jd, rel=1e-9)
    # and the doubly shifted kernel at a = 0 is the infrared diagnostic
    p = _p(1.5)
    assert bath_moment(p, "I4", 0.08, a=0.0) == \
        pytest.approx(bath_moment(p, "D", 0.08), rel=1e-8)


def test_binding_kernel_zero_coupling_limit():
    # K(W -> 0) = alpha / (2 s); the limit is approached as O(W^s)
    for s in (0.25, 0.5, 1.0):
        p = _p(s, alpha=0.4)
        w = 1e-12
        assert bath_moment(p, "K", w) == \
            pytest.approx(p.alpha / (2 * s), rel=max(4 * w ** s, 1e-9))


def test_overlap_diagnostic_divergence():
    for s in (0.25, 0.5, 0.75, 1.0):
        assert overlap_exponent_divergent(s)
        assert bath_moment(_p(s), "D", 0.1) == math.inf
    for s in (1.0001, 1.5, 2.0):
        assert not overlap_exponent_divergent(s)
        assert np.isfinite(bath_moment(_p(s), "D", 0.1))


@settings(max_examples=40, deadline=None)
@given(s=st.floats(0.2, 1.8), w1=st.floats(0.01, 0.5),
       scale=st.floats(1.1, 5.0))
def test_kernels_decrease_with_scale(s, w1, scale):
    w2 = w1 * scale
    t1 = moment_table(s, w1)
    t2 = moment_table(s, w2)
    for kind in ("I1", "Jd", "Kbar"):
        assert t1[kind] > t2[kind]


def test_spectral_density_shape():
    p = _p(0.5, alpha=0.2)
    om = np.array([0.04, 0.25, 1.0])
    np.testing.assert_allclose(spectral_density(p, om),
                               2 * p.alpha * om ** p.s, rtol=1e-12)
    assert spectral_density(p, np.array([1.2]))[0] == 0.0


def test_quadrature_refinement_is_converged():
    base = moment_table(0.4, 0.03, 0.004)
    fine = moment_table(0.4, 0.03, 0.004,
                        QuadratureConfig(panels=128, nodes_per_panel=24))
    for kind, val in base.items():
        assert val == pytest.approx(fine[kind], rel=1e-9)


def test_moment_table_self_check_passes():
    tab = moment_table(0.5, 0.1, 0.01, check=True)
    assert set(tab) >= {"I1", "Jd", "Kbar", "I2", "I3", "I4"}


# ---------------------------------------------------------------------------
# discretization

@pytest.mark.parametrize("scheme", ["linear", "logarithmic"])
def test_discretization_sum_rule(scheme):
    for s in (0.25, 1.0, 1.5):
        p = _p(s, alpha=0.37)
        bath = discretize_bath(p, scheme=scheme, n_modes=24)
        total = 2 * p.alpha / (s + 1)
        assert np.sum(bath.g2) == pytest.approx(total, rel=1e-12)
        assert bath.n_modes == 24
        assert np.all(np.diff(bath.frequencies) > 0)
        assert np.all(bath.frequencies > 0)
        assert np.all(bath.frequencies <= 1.0)


def test_discretization_refines_toward_continuum():
    p = _p(0.5, alpha=0.2)
    w = 0.08
    exact = bath_moment(p, "I1", w)
    errs = []
    for n in (16, 64, 256):
        bath = discretize_bath(p, n_modes=n)
        approx = float(np.sum(bath.g2 / (bath.frequencies + w) ** 2))
        errs.append(abs(approx - 2 * p.alpha * exact))
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 0.05 * errs[0]
    assert errs[2] < 1e-3


def test_weighted_sum_matches_manual_loop():
    bath = discretize_bath(_p(1.0), n_modes=6)
    vals = 1.0 / (bath.frequencies + 0.3)
    assert bath.weighted_sum(vals) == \
        pytest.approx(float(np.sum(bath.g2 * vals)), rel=1e-14)


def test_invalid_inputs_are_rejected():
    with pytest.raises(DomainError):
        BathParams(0.0, 0.1, 0.1)
    with pytest.raises(DomainError):
        BathParams(-0.5, 0.1, 0.1)
    with pytest.raises(DomainError):
        BathParams(0.5, -0.1, 0.1)
    with pytest.raises(DomainError):
        BathParams(0.5, 0.1, 1.5)
    with pytest.raises(DomainError):
        BathParams(0.5, 0.1, 0.1, omega_c=2.0)
    with pytest.raises(DomainError):
        bath_moment(_p(0.5), "bogus", 0.1)
    with pytest.raises(DomainError):
        moment_table(0.5, -0.1)
    with pytest.raises(DomainError):
        moment_table(0.5, 0.1, a=-0.01)
    with pytest.raises(DomainError):
        DiscreteBath(frequencies=np.array([0.5, 1.4]),
                     couplings=np.array([0.1, 0.1]))
    with pytest.raises(DomainError):
        discretize_bath(_p(0.5), scheme="bogus")
