"""Single-polaron ansatz: displaced oscillators with one renormalization factor.

The trial state dresses each mode with a displacement g_k/2/(omega_k + W),
where W = eta*delta is the renormalized tunneling and eta solves the fixed
point eta = exp(-alpha*I1(eta*delta)).  For s <= 1 the nontrivial fixed point
disappears at a finite coupling through a tangency with the identity map; past
that point only the fully localized branch eta = 0 survives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import BathParams, QuadratureConfig, DEFAULT_QUAD, moment_table
from .errors import NoTransitionError


@dataclass(frozen=True)
class ShSolution:
    eta0: float
    energy: float
    iterations: int
    converged: bool


def sh_energy(p: BathParams, eta0: float, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Variational energy -eta0*delta/2 - K(eta0*delta) at the given eta0."""
    W = eta0 * p.delta
    if W == 0.0:
        # K(0) = alpha/(2s): the bath binding energy of the fully displaced state
        return -p.alpha / (2.0 * p.s)
    return -W / 2.0 - p.alpha * moment_table(p.s, W, cfg=cfg, which=("Kbar",))["Kbar"]


def solve_sh(p: BathParams, cfg: QuadratureConfig = DEFAULT_QUAD,
             eta_min: float = 1e-12, max_iter: int = 200000,
             tol: float = 1e-13) -> ShSolution:
    """Iterate the fixed point from eta = 1 down to the largest solution.

    The map eta -> exp(-alpha*I1(eta*delta)) is increasing, so undamped
    iteration from above converges monotonically whenever a nontrivial fixed
    point exists.  If the iterate drains below eta_min the nontrivial branch is
    gone and the localized solution eta = 0 is returned as converged.
    """
    if p.alpha == 0.0 or p.delta == 0.0:
        eta = 1.0 if p.delta > 0 else 0.0
        return ShSolution(eta, sh_energy(p, eta, cfg), 0, True)
    eta = 1.0
    for it in range(1, max_iter + 1):
        nxt = np.exp(-p.alpha * moment_table(p.s, eta * p.delta, cfg=cfg,
                                            which=("I1",))["I1"])
        if nxt < eta_min:
            return ShSolution(0.0, sh_energy(p, 0.0, cfg), it, True)
        if abs(nxt - eta) <= tol * eta:
            return ShSolution(nxt, sh_energy(p, nxt, cfg), it, True)
        eta = nxt
    return ShSolution(eta, sh_energy(p, eta, cfg), max_iter, False)


def _psi_max(s: float, alpha: float, delta: float, cfg: QuadratureConfig) -> float:
    """Max over t <= 0 of psi(t) = -alpha*I1(exp(t)*delta) - t.

    A nontrivial fixed point ln(eta) = -alpha*I1(eta*delta) exists iff this
    maximum is >= 0.  psi is unimodal in t over the searched window, so golden
    section suffices; the window floor sits far below any physical eta.
    """
    lo, hi = np.log(1e-250), 0.0

    def psi(t):
        return -alpha * moment_table(s, np.exp(t) * delta, cfg=cfg,
                                     which=("I1",))["I1"] - t

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = psi(c), psi(d)
    for _ in range(200):
        if b - a < 1e-10:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = psi(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = psi(d)
    return max(fc, fd, psi(lo), psi(hi))


def sh_alpha_c(s: float, delta: float, cfg: QuadratureConfig = DEFAULT_QUAD,
               tol: float = 1e-6, full: bool = False):
    """Coupling where the nontrivial fixed point disappears, by bisection.

    The fixed point vanishes through a tangency, so existence is monotone in
    alpha and bisection on the sign of the fixed-point excess is exact.  For
    s > 1 the excess never changes sign and there is no transition.  With
    full=True the final (lo, hi) bracket is returned alongside the estimate.
    """
    if s > 1.0:
        raise NoTransitionError(f"no localization transition for s={s} > 1")
    lo, hi = 1e-3, 1.5
    if _psi_max(s, lo, delta, cfg) < 0:
        raise NoTransitionError(f"fixed point already gone at alpha={lo}")
    if _psi_max(s, hi, delta, cfg) >= 0:
        raise NoTransitionError(f"fixed point survives to alpha={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _psi_max(s, mid, delta, cfg) >= 0:
            lo = mid
        else:
            hi = mid
    alpha_c = 0.5 * (lo + hi)
    return (alpha_c, lo, hi) if full else alpha_c
