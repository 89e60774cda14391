"""Superposed relaxing-profile ansatz: self-consistency, limits, bounds."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sbqcp.bath import BathParams, bath_moment, discretize_bath
from sbqcp.degenerate import solve_degenerate
from sbqcp.errors import DomainError, NoSolutionError
from sbqcp.sh import solve_sh
from sbqcp.superposed import (_bracket_term, compute_delta, compute_E0,
                              compute_U, discrete_inner,
                              discrete_profile_energy, ground_state,
                              minimize_tau, rho_asymptotic_s1,
                              sigma_z_moments, solve_inner,
                              stationarity_residual, tau_upper_bound)

# one fully pinned inner solution (s = 1, alpha = 0.6, delta = 0.1, tau = 0.8)
ANCHOR = {"M": 0.7438164, "W": 3.5027020e-2, "delta_shift": 5.9084406e-3,
          "rho": 0.7063442, "energy": -0.3039772748}


def _anchor():
    p = BathParams(1.0, 0.6, 0.1)
    return p, solve_inner(p, 0.8)


def test_pinned_inner_solution():
    _, st_ = _anchor()
    assert st_.converged
    for name, want in ANCHOR.items():
        assert getattr(st_, name) == pytest.approx(want, rel=1e-6), name


def test_inner_solution_replays_its_defining_relations():
    """Each self-consistency relation, re-evaluated from independent
    quadrature at the converged point, reproduces the stored value."""
    p, st_ = _anchor()
    a = st_.rho * st_.delta_shift
    eta = math.exp(-p.alpha * bath_moment(p, "I1", st_.W))
    assert st_.eta == pytest.approx(eta, rel=1e-8)
    m = 2 * p.alpha * st_.tau * st_.W * bath_moment(p, "I2", st_.W, a)
    assert st_.M == pytest.approx(m, rel=1e-8)
    w = st_.eta * p.delta / math.sqrt(1 - st_.M ** 2)
    assert st_.W == pytest.approx(w, rel=1e-8)
    rho = math.exp(-p.alpha * st_.tau ** 2 * st_.W ** 2
                   * bath_moment(p, "I4", st_.W, a))
    assert st_.rho == pytest.approx(rho, rel=1e-8)
    y = 0.5 * p.alpha * st_.tau ** 2 * st_.W ** 2 \
        * bath_moment(p, "I3", st_.W, a)
    assert st_.Y == pytest.approx(y, rel=1e-8)
    assert compute_delta(p, st_) == pytest.approx(st_.delta_shift, rel=1e-8)
    e0 = compute_E0(p, st_)
    u = compute_U(p, st_)
    assert st_.E0 == pytest.approx(e0, rel=1e-8)
    assert st_.U == pytest.approx(u, rel=1e-8)
    c = math.sqrt(1 - st_.M ** 2)
    assert st_.energy == pytest.approx((e0 + st_.rho * u) /
                                       (1 + st_.rho * c), rel=1e-10)


def test_shift_scale_fixed_by_the_energy_partials():
    """delta = 2(E0 c - U) / ((1 - rho c)(1 + rho c)); the denominator is
    forced by the chain rule because the energy carries the profile second
    moment with coefficient (1 - rho c)/(1 + rho c)."""
    p, st_ = _anchor()
    c = math.sqrt(1 - st_.M ** 2)
    want = 2 * (st_.E0 * c - st_.U) / ((1 - st_.rho * c) * (1 + st_.rho * c))
    assert st_.delta_shift == pytest.approx(want, rel=1e-10)


def test_closed_form_matches_exact_coherent_state_algebra():
    """The assembled energy equals the raw expectation value in the
    four-component coherent-state superposition, to rounding."""
    p = BathParams(0.5, 0.12, 0.1)
    bath = discretize_bath(p, n_modes=8)
    om, g2 = bath.frequencies, bath.g2
    for tau in (0.4, 0.9, 1.3):
        disc = discrete_inner(om, g2, p.delta, tau)
        phi = tau * om / (om + disc["a"])
        exact = discrete_profile_energy(om, g2, p.delta, disc["M"],
                                        disc["W"], phi)
        assert disc["energy"] == pytest.approx(exact, rel=5e-13)


def test_vanishing_amplitude_recovers_the_single_polaron():
    p = BathParams(1.0, 0.6, 0.1)
    sh = solve_sh(p)
    st_ = solve_inner(p, 1e-6)
    assert st_.energy == pytest.approx(sh.energy, rel=1e-12)


def test_collapsed_family_is_the_degenerate_solution():
    p = BathParams(0.5, 0.12, 0.1)
    gs = ground_state(p)
    deg = solve_degenerate(p, "broken")
    assert gs.rho == 0.0
    assert "degenerate-limit" in gs.note
    assert gs.energy == pytest.approx(deg.energy, rel=1e-12)
    assert gs.W == pytest.approx(deg.W, rel=1e-10)


def test_finite_difference_stationarity():
    """Re-deriving the profile shift from numerical partial derivatives of
    the closed-form energy reproduces the iterated one on every mode set."""
    cases = [(BathParams(0.5, 0.12, 0.1), (4, 8, 16)),
             (BathParams(1.0, 0.3, 0.1), (8,))]
    for p, mode_counts in cases:
        state = ground_state(p)
        for n in mode_counts:
            bath = discretize_bath(p, n_modes=n)
            resid = stationarity_residual(p, state, bath)
            assert float(np.max(np.abs(resid))) < 1e-6, (p.s, n)


def test_penalty_bracket_series_matches_closed_form():
    # B(M) = cosh M - 1 - M (sinh M - M)
    assert _bracket_term(0.3) == pytest.approx(0.0439824261, rel=1e-8)
    for m in (1e-4, 5e-4, 2e-3, 0.05):
        direct = math.cosh(m) - 1 - m * (math.sinh(m) - m)
        assert _bracket_term(m) == pytest.approx(direct, rel=1e-10)


def test_decoupled_and_static_limits():
    gs0 = ground_state(BathParams(0.7, 0.0, 0.1))
    assert gs0.energy == pytest.approx(-0.05, abs=1e-15)
    assert gs0.rho == 1.0 and gs0.M == 0.0
    gss = ground_state(BathParams(0.5, 0.3, 0.0))
    assert gss.energy == pytest.approx(-0.3, abs=1e-12)


def test_weak_coupling_energy_matches_second_order_theory():
    """At alpha = 0.002 the ground energy agrees with
    -delta/2 - (alpha/2) * int_0^1 w^s/(w+delta) dw to a few 1e-6 relative
    (the ansatz keeps a variational sliver beyond second order)."""
    mp.mp.dps = 25
    for s in (0.5, 1.0):
        p = BathParams(s, 0.002, 0.1)
        integral = float(mp.quad(
            lambda t: t ** mp.mpf(s) / (t + mp.mpf("0.1")), [0, 1]))
        e_pt2 = -p.delta / 2 - 0.5 * p.alpha * integral
        gs = ground_state(p)
        assert abs(gs.energy - e_pt2) < 5e-6


def test_tracked_branch_with_capped_amplitude():
    p = BathParams(1.0, 0.3, 0.1)
    sol = minimize_tau(p)
    assert sol.tau == pytest.approx(1.0, abs=1e-9)
    assert sol.rho == pytest.approx(0.9274318, rel=1e-4)
    assert sol.energy == pytest.approx(-0.1701320055, rel=1e-7)
    assert tau_upper_bound(p) == pytest.approx(1.0)
    assert tau_upper_bound(BathParams(1.0, 4.0, 0.1)) == \
        pytest.approx(0.5, rel=1e-5)


def test_free_amplitude_ground_states():
    cases = [
        (0.25, 0.02, 1.067813, 0.8294006, -0.0668173358),
        (0.75, 0.25, 1.112554, 0.5164789, -0.1776949024),
        (1.0, 0.8, 0.993693, 2.157234e-2, -0.4024244301),
    ]
    for s, alpha, tau, rho, energy in cases:
        gs = ground_state(BathParams(s, alpha, 0.1))
        assert gs.tau == pytest.approx(tau, abs=2e-3), s
        assert gs.rho == pytest.approx(rho, rel=2e-3), s
        assert gs.energy == pytest.approx(energy, rel=1e-6), s
        assert "branch" in gs.note


def test_overlap_stays_open_above_ohmic():
    gs = ground_state(BathParams(1.5, 2.0, 0.1))
    assert gs.rho == pytest.approx(0.928914, rel=1e-3)
    assert gs.tau == pytest.approx(2.134211, abs=5e-3)
    assert gs.energy == pytest.approx(-0.6679717270, rel=1e-6)


def test_ohmic_overlap_asymptote():
    p = BathParams(1.0, 0.9, 0.1)
    sol = minimize_tau(p)
    assert sol.rho == pytest.approx(6.805368e-5, rel=1e-2)
    assert sol.energy == pytest.approx(-0.4519735116, rel=1e-7)
    ratio = sol.rho / rho_asymptotic_s1(p, sol)
    assert 0.8 < ratio < 1.2
    with pytest.raises(DomainError):
        rho_asymptotic_s1(BathParams(0.5, 0.1, 0.1), sol)


def test_spin_moments():
    _, st_ = _anchor()
    avg, staggered = sigma_z_moments(st_)
    assert avg == 0.0
    assert staggered == st_.M
    assert st_.u_plus == pytest.approx(math.sqrt((1 + st_.M) / 2), rel=1e-12)
    assert st_.v_minus == st_.u_plus


@settings(max_examples=12, deadline=None)
@given(s=st.floats(0.15, 1.0), alpha=st.floats(0.005, 0.6),
       delta=st.floats(0.01, 0.5))
def test_superposed_never_loses_to_its_members(s, alpha, delta):
    p = BathParams(s, alpha, delta)
    e_sh = solve_sh(p).energy
    try:
        e_deg = solve_degenerate(p, "broken").energy
    except NoSolutionError:
        e_deg = e_sh
    e_sup = ground_state(p).energy
    assert e_sup <= min(e_sh, e_deg) + 1e-10
