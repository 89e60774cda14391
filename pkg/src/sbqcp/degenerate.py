"""Doubly degenerate ansatz with a constant antisymmetric displacement weight.

Each of the two mirror states displaces mode k by an extra amount proportional
to a single number M (the same for every mode).  The self-consistency then
splits cleanly: the broken-branch condition 1 = 2*alpha*W*Jd(W) involves W
alone, after which eta = exp(-alpha*I1(W)) and M follows from
W = eta*delta/sqrt(1-M^2).  A real M requires W > eta*delta, which first
happens at a finite coupling; below it only the symmetric branch (M = 0,
identical to the single-polaron solution) exists.

The two mirror states are exactly degenerate but their bath overlap carries an
infrared exponent integral of omega**(s-2), divergent for s <= 1: the pair is
orthogonal in the Ohmic and sub-Ohmic regimes no matter how small M is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bath import BathParams, QuadratureConfig, DEFAULT_QUAD, bath_moment, \
    moment_table, overlap_exponent_divergent
from .errors import NoSolutionError, NoTransitionError
from .sh import solve_sh


@dataclass(frozen=True)
class DegenerateSolution:
    eta: float
    M: float
    W: float
    energy: float
    branch: str  # "symmetric" or "broken"


@dataclass(frozen=True)
class OverlapResult:
    """Mirror-state overlap; value 0 with divergent=True marks the s<=1 case."""
    value: float
    divergent: bool


def _m_condition_root(s: float, alpha: float, w_max: float,
                      cfg: QuadratureConfig) -> float | None:
    """Root of 1 = 2*alpha*W*Jd(W), unique because W*Jd(W) is decreasing.

    Returns None when no root lies in (0, w_max] at double precision; any root
    that far down is below eta*delta for every usable delta, so the caller's
    M**2 > 0 check would reject it anyway.
    """
    if alpha == 0.0:
        return None

    def excess(w):
        return 2.0 * alpha * w * moment_table(s, w, cfg=cfg, which=("Jd",))["Jd"] - 1.0

    hi = w_max
    if excess(hi) > 0:
        return None  # root beyond the physical window
    lo = min(1.0, hi)
    while excess(lo) < 0:
        lo /= 8.0
        if lo < 1e-140:
            return None
    # absolute xtol well below any usable root; a root driven to ~0 at a
    # marginal coupling otherwise needs hundreds of bisections to terminate
    return brentq(excess, lo, hi, xtol=1e-18, rtol=1e-15, maxiter=200)


def solve_degenerate(p: BathParams, branch: str = "broken",
                     cfg: QuadratureConfig = DEFAULT_QUAD) -> DegenerateSolution:
    """Solve the requested branch.

    The symmetric branch is the single-polaron solution with M = 0.  The
    broken branch solves the W-only condition and back-fills eta and M; it
    raises NoSolutionError when the root is absent or gives M**2 <= 0.
    """
    if branch == "symmetric":
        sh = solve_sh(p, cfg)
        return DegenerateSolution(sh.eta0, 0.0, sh.eta0 * p.delta, sh.energy,
                                  "symmetric")
    if branch != "broken":
        raise NoSolutionError(f"unknown branch {branch!r}")
    w_max = 10.0 * p.delta + 1.0
    w0 = _m_condition_root(p.s, p.alpha, w_max, cfg)
    if w0 is None:
        raise NoSolutionError(
            f"no broken-branch W in (0, {w_max:g}] at s={p.s}, alpha={p.alpha}")
    tab = moment_table(p.s, w0, cfg=cfg)
    eta = float(np.exp(-p.alpha * tab["I1"]))
    m2 = 1.0 - (eta * p.delta / w0) ** 2
    if m2 <= 0.0:
        raise NoSolutionError(
            f"broken branch needs W > eta*delta; got W={w0:g}, "
            f"eta*delta={eta * p.delta:g}")
    m = float(np.sqrt(m2))
    energy = -w0 / 2.0 - p.alpha * tab["Kbar"] \
        + 0.5 * p.alpha * m2 * w0**2 * tab["Jd"]
    return DegenerateSolution(eta, m, w0, energy, "broken")


def degenerate_energy(sol: DegenerateSolution, p: BathParams,
                      cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """-W/2 - K(W) + (alpha*M^2*W^2/2)*Jd(W), valid on either branch."""
    if sol.W == 0.0:
        return -p.alpha / (2.0 * p.s)
    tab = moment_table(p.s, sol.W, cfg=cfg)
    return -sol.W / 2.0 - p.alpha * tab["Kbar"] \
        + 0.5 * p.alpha * sol.M**2 * sol.W**2 * tab["Jd"]


def constant_phi_overlap(sol: DegenerateSolution, p: BathParams,
                         cfg: QuadratureConfig = DEFAULT_QUAD) -> OverlapResult:
    """Overlap of the two mirror states, exp(-alpha*M^2*W^2*D(W)).

    The exponent integral diverges for s <= 1 (decided by power counting, not
    numerically), so any nonzero M gives strictly orthogonal partners there.
    """
    if sol.M == 0.0:
        return OverlapResult(1.0, False)
    if overlap_exponent_divergent(p.s):
        return OverlapResult(0.0, True)
    d_val = bath_moment(p, "D", sol.W, cfg=cfg)
    return OverlapResult(float(np.exp(-p.alpha * sol.M**2 * sol.W**2 * d_val)),
                         False)


def _broken_exists(p: BathParams, alpha: float, cfg: QuadratureConfig) -> bool:
    try:
        solve_degenerate(BathParams(p.s, alpha, p.delta), "broken", cfg)
        return True
    except NoSolutionError:
        return False


def degenerate_alpha_c(p: BathParams, cfg: QuadratureConfig = DEFAULT_QUAD,
                       tol: float = 1e-6):
    """Onset coupling of the broken branch, by bisection on its existence.

    Cross-checked against the reduced condition obtained by sending M to zero:
    2*alpha*W*Jd(W) = 1 evaluated at the symmetric-branch W.  The transition
    is continuous in M, so existence onset, energy crossing, and the reduced
    condition coincide; all three are verified and reported.
    """
    from .qcp import QcpResult

    if p.s > 1.0:
        raise NoTransitionError(f"no broken branch for s={p.s} > 1")
    lo = 1e-4
    if _broken_exists(p, lo, cfg):
        raise NoTransitionError(f"broken branch already present at alpha={lo}")
    # grow the upper seed geometrically to the first coupling with a broken
    # solution; at much stronger coupling the root leaves the W window again,
    # so a fixed large seed would sit on the wrong side
    hi = 0.02
    while not _broken_exists(p, hi, cfg):
        lo = hi
        hi *= 1.7
        if hi > 1.5:
            raise NoTransitionError(f"broken branch absent up to alpha={hi:g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _broken_exists(p, mid, cfg):
            hi = mid
        else:
            lo = mid
    alpha_c = 0.5 * (lo + hi)

    # reduced condition at the symmetric branch, just outside the bracket
    def reduced_excess(alpha):
        sh = solve_sh(BathParams(p.s, alpha, p.delta), cfg)
        if sh.eta0 == 0.0:
            return np.inf
        w = sh.eta0 * p.delta
        return 2.0 * alpha * w * moment_table(p.s, w, cfg=cfg,
                                              which=("Jd",))["Jd"] - 1.0

    pad = max(10 * tol, 1e-5)
    reduced_ok = reduced_excess(alpha_c - pad) < 0 < reduced_excess(alpha_c + pad)

    # full energy comparison just above threshold
    probe = BathParams(p.s, alpha_c + pad, p.delta)
    e_broken = solve_degenerate(probe, "broken", cfg).energy
    e_symm = solve_degenerate(probe, "symmetric", cfg).energy
    energy_ok = e_broken <= e_symm + 1e-12

    if not (reduced_ok and energy_ok):
        raise NoSolutionError(
            "broken-branch onset, reduced condition, and energy comparison "
            f"disagree near alpha={alpha_c:.6f}")
    return QcpResult(
        s=p.s, delta=p.delta, method="Degenerate", alpha_c=alpha_c,
        bracket=(lo, hi), criterion="broken-branch onset",
        diagnostics={
            "reduced_excess_below": reduced_excess(alpha_c - pad),
            "reduced_excess_above": reduced_excess(alpha_c + pad),
            "energy_gap_above": e_broken - e_symm,
        })
