"""Constant-profile degenerate pair: branch structure, onset, overlap."""

import math

import pytest

from sbqcp.bath import BathParams, bath_moment
from sbqcp.degenerate import (constant_phi_overlap, degenerate_alpha_c,
                              degenerate_energy, solve_degenerate)
from sbqcp.errors import NoSolutionError
from sbqcp.sh import solve_sh

# onset couplings pinned by earlier runs of this solver at delta = 0.1
FROZEN_ONSET = {0.25: 0.024128479, 0.5: 0.085544944,
                0.75: 0.217601351, 1.0: 0.512118998}
# the same quantity as quoted by the reference table
QUOTED_ONSET = {0.25: 0.02413, 0.5: 0.08555, 0.75: 0.2176, 1.0: 0.5121}

# one fully pinned broken solution (s = 0.5, alpha = 0.12, delta = 0.1)
PINNED = {"eta": 0.7490827698750441, "M": 0.8371047166244188,
          "W": 0.13693314940181872, "energy": -0.13024450614359814}


def _broken(s=0.5, alpha=0.12, delta=0.1):
    p = BathParams(s, alpha, delta)
    return p, solve_degenerate(p, "broken")


def test_pinned_broken_solution():
    _, sol = _broken()
    assert sol.branch == "broken"
    for name, want in PINNED.items():
        assert getattr(sol, name) == pytest.approx(want, rel=1e-9), name


def test_broken_solution_satisfies_its_defining_relations():
    p, sol = _broken()
    jd = bath_moment(p, "Jd", sol.W)
    assert 2 * p.alpha * sol.W * jd == pytest.approx(1.0, abs=1e-9)
    eta = math.exp(-p.alpha * bath_moment(p, "I1", sol.W))
    assert sol.eta == pytest.approx(eta, rel=1e-10)
    m2 = 1.0 - (sol.eta * p.delta / sol.W) ** 2
    assert sol.M == pytest.approx(math.sqrt(m2), rel=1e-10)


def test_energy_identity():
    p, sol = _broken()
    jd = bath_moment(p, "Jd", sol.W)
    expected = (-sol.W / 2 - bath_moment(p, "K", sol.W)
                + 0.5 * p.alpha * sol.M ** 2 * sol.W ** 2 * jd)
    assert sol.energy == pytest.approx(expected, rel=1e-11)
    assert degenerate_energy(sol, p) == pytest.approx(sol.energy, rel=1e-11)
    # at the root the profile term simplifies to M^2 W / 4
    assert 0.5 * p.alpha * sol.M ** 2 * sol.W ** 2 * jd == \
        pytest.approx(sol.M ** 2 * sol.W / 4, rel=1e-9)


def test_no_broken_branch_below_onset():
    with pytest.raises(NoSolutionError):
        solve_degenerate(BathParams(0.5, 0.05, 0.1), "broken")


def test_symmetric_branch_reduces_to_single_polaron():
    p = BathParams(0.5, 0.12, 0.1)
    sym = solve_degenerate(p, "symmetric")
    sh = solve_sh(p)
    assert sym.M == 0.0
    assert sym.eta == pytest.approx(sh.eta0, rel=1e-12)
    assert sym.energy == pytest.approx(sh.energy, rel=1e-12)


def test_broken_branch_wins_where_it_exists():
    p, sol = _broken()
    sym = solve_degenerate(p, "symmetric")
    assert sol.energy < sym.energy


def test_order_parameter_grows_from_the_onset():
    onset = FROZEN_ONSET[0.5]
    ms, ws = [], []
    for alpha in (1.005 * onset, 1.2 * onset, 1.6 * onset, 2.2 * onset):
        _, sol = _broken(0.5, alpha)
        ms.append(sol.M)
        ws.append(sol.W)
    assert ms[0] < 0.25
    assert all(b > a for a, b in zip(ms, ms[1:]))
    assert all(b > a for a, b in zip(ws, ws[1:]))


def test_onset_couplings_are_reproduced():
    for s, frozen in FROZEN_ONSET.items():
        res = degenerate_alpha_c(BathParams(s, 0.0, 0.1))
        assert res.alpha_c == pytest.approx(frozen, rel=1e-5)
        assert res.alpha_c == pytest.approx(QUOTED_ONSET[s], rel=0.05)
        assert res.method == "Degenerate"
        assert res.bracket[0] <= res.alpha_c <= res.bracket[1]
    # existence flips across the located onset
    onset = FROZEN_ONSET[0.5]
    with pytest.raises(NoSolutionError):
        solve_degenerate(BathParams(0.5, 0.995 * onset, 0.1), "broken")
    solve_degenerate(BathParams(0.5, 1.005 * onset, 0.1), "broken")


def test_overlap_divergence_classification():
    # the mirror-state overlap vanishes through an infrared divergence for
    # s <= 1 and stays finite above
    for s, alpha in ((0.25, 0.03), (0.5, 0.12), (0.75, 0.3), (1.0, 0.6)):
        p, sol = _broken(s, alpha)
        ov = constant_phi_overlap(sol, p)
        assert ov.divergent
        assert ov.value == 0.0
    p15 = BathParams(1.5, 2.0, 0.1)
    sol15 = solve_degenerate(p15, "broken")
    ov15 = constant_phi_overlap(sol15, p15)
    assert not ov15.divergent
    assert 0.0 < ov15.value < 1.0
    assert ov15.value == pytest.approx(6.0948e-2, rel=1e-3)


def test_static_limit_energy():
    sol = solve_degenerate(BathParams(0.5, 0.3, 0.0), "symmetric")
    assert sol.energy == pytest.approx(-0.3, rel=1e-9)
