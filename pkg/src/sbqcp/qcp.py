"""Critical-point location, coupling scans, and the comparison-table builder.

The transition is detected through the overlap rho of the superposed ground
state.  Sub-Ohmic baths lose the open-overlap branch through a level crossing
with the degenerate solution, so rho drops discontinuously and the collapse
threshold itself is the critical coupling.  The Ohmic bath closes the overlap
only asymptotically; there the threshold underestimates the transition and
the reported value extrapolates 1/ln(1/rho) to zero, with the raw threshold
kept alongside in the diagnostics.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bath import BathParams, QuadratureConfig, DEFAULT_QUAD
from .degenerate import degenerate_alpha_c, solve_degenerate
from .errors import NoSolutionError, NonConvergedError, NoTransitionError, \
    SbqcpError
from .sh import sh_alpha_c, solve_sh
from .superposed import ground_state, minimize_tau

RHO_DISCONTINUITY = 1e-2  # overlap this large just below collapse = level crossing
SCAN_BLOCK = 8            # continuation runs inside fixed-size alpha blocks


@dataclass(frozen=True)
class QcpResult:
    s: float
    delta: float
    method: str  # "SH" | "Degenerate" | "Superposed"
    alpha_c: float
    bracket: tuple
    criterion: str
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScanRecord:
    alpha: float
    tau_star: float
    rho: float
    M: float
    W: float
    eta: float
    E_sh: float
    E_deg: float
    E_sup: float
    flags: str = ""


def _best_degenerate_energy(p: BathParams, cfg: QuadratureConfig) -> float:
    try:
        return solve_degenerate(p, "broken", cfg).energy
    except NoSolutionError:
        return solve_degenerate(p, "symmetric", cfg).energy


def _scan_block(p_base: BathParams, alphas, cfg: QuadratureConfig,
                tau_tol: float):
    """Sequential continuation over one block of couplings.

    The warm-start chain lives entirely inside the block, so the result for a
    block depends only on its own alphas; distributing blocks over any number
    of workers reproduces identical bytes.
    """
    records = []
    warm_tracked = None
    warm_branch = None
    tau_prev = 0.9
    for alpha in alphas:
        p = BathParams(p_base.s, float(alpha), p_base.delta)
        flags = []
        try:
            e_sh = solve_sh(p, cfg).energy
        except SbqcpError:
            e_sh, flags = math.nan, flags + ["sh-failed"]
        try:
            e_deg = _best_degenerate_energy(p, cfg)
        except SbqcpError:
            e_deg, flags = math.nan, flags + ["deg-failed"]
        try:
            tracked = minimize_tau(p, cfg, warm=warm_tracked, tol=tau_tol)
            if tracked.rho > 0:
                warm_tracked = (tracked.M, max(tracked.a, 1e-6 * p.delta),
                                tracked.W)
            if tracked.rho == 0.0:
                flags.append("collapsed")
            if "multiple-minima" in tracked.note:
                flags.append("multiple-minima")
        except SbqcpError:
            tracked, flags = None, flags + ["tracked-failed"]
        try:
            gs = ground_state(p, cfg, warm=warm_branch, tau_seed=tau_prev)
            e_sup = gs.energy
            if gs.rho > 0:
                warm_branch = (gs.M, gs.a, gs.W)
                tau_prev = gs.tau if gs.tau > 0 else tau_prev
        except SbqcpError:
            e_sup, flags = math.nan, flags + ["sup-failed"]
        if tracked is not None:
            records.append(ScanRecord(float(alpha), tracked.tau, tracked.rho,
                                      tracked.M, tracked.W, tracked.eta,
                                      e_sh, e_deg, e_sup,
                                      ";".join(flags)))
        else:
            records.append(ScanRecord(float(alpha), math.nan, math.nan,
                                      math.nan, math.nan, math.nan,
                                      e_sh, e_deg, e_sup, ";".join(flags)))
    return records


def scan_alpha(p_base: BathParams, alphas, cfg: QuadratureConfig = DEFAULT_QUAD,
               tau_tol: float = 1e-4, n_workers: int = 1):
    """One ScanRecord per coupling: tracked-branch observables plus the three
    ansatz energies.  Warm starts chain within fixed-size blocks only, so the
    output is byte-identical for any worker count."""
    alphas = np.asarray(list(alphas), dtype=float)
    if alphas.size == 0:
        return []
    if np.any(np.diff(alphas) <= 0):
        raise NoSolutionError("alpha grid must be strictly increasing")
    blocks = [alphas[i:i + SCAN_BLOCK] for i in range(0, alphas.size, SCAN_BLOCK)]
    if n_workers <= 1 or len(blocks) == 1:
        parts = [_scan_block(p_base, b, cfg, tau_tol) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(
                lambda b: _scan_block(p_base, b, cfg, tau_tol), blocks))
    return [rec for part in parts for rec in part]


def _extrapolate_vanishing(samples):
    """Zero crossing of a linear fit to 1/ln(1/rho) against alpha.

    samples: (alpha, rho) pairs with rho in (0, 1), sorted ascending in
    alpha; uses the last six.  Returns None when the fit cannot produce a
    forward zero.
    """
    pts = [(a, 1.0 / math.log(1.0 / r)) for a, r in samples if 0.0 < r < 1.0]
    if len(pts) < 2:
        return None
    pts = pts[-6:]
    x = np.array([q[0] for q in pts])
    y = np.array([q[1] for q in pts])
    slope, intercept = np.polyfit(x, y, 1)
    if slope >= 0:
        return None
    zero = -intercept / slope
    return float(zero) if zero > x[-1] else None


def locate_alpha_c(p_base: BathParams, method: str,
                   cfg: QuadratureConfig = DEFAULT_QUAD,
                   tol: float = 1e-5) -> QcpResult:
    """Critical coupling by the chosen ansatz's own criterion.

    SH and Degenerate delegate to their modules.  Superposed bisects on the
    collapse (rho < 1e-8) of the continuation-tracked ground solution between
    the degenerate onset and twice the SH tangency; if the overlap just below
    threshold is still of order one the collapse is a level crossing and the
    threshold is the critical point, otherwise the extrapolated vanishing of
    the overlap is reported with the threshold kept in the diagnostics.
    """
    if p_base.s > 1.0:
        raise NoTransitionError(f"no transition for s={p_base.s} > 1")
    if method == "SH":
        alpha_c, lo, hi = sh_alpha_c(p_base.s, p_base.delta, cfg, tol=tol,
                                     full=True)
        return QcpResult(p_base.s, p_base.delta, "SH", alpha_c, (lo, hi),
                         "fixed-point tangency", {})
    if method == "Degenerate":
        return degenerate_alpha_c(p_base, cfg, tol=tol)
    if method != "Superposed":
        raise NoSolutionError(f"unknown method {method!r}")

    deg = degenerate_alpha_c(p_base, cfg, tol=tol)
    sh_c = sh_alpha_c(p_base.s, p_base.delta, cfg, tol=tol)
    lo = deg.alpha_c
    hi = min(2.0 * sh_c, 1.5)
    survivors = []  # (alpha, rho) below the collapse
    warm = {"state": None, "tau": 0.9}

    def rho_at(alpha):
        p = BathParams(p_base.s, alpha, p_base.delta)
        gs = ground_state(p, cfg, warm=warm["state"], tau_seed=warm["tau"])
        if gs.rho > 0:
            warm["state"] = (gs.M, gs.a, gs.W)
            if gs.tau > 0:
                warm["tau"] = gs.tau
        return gs.rho

    steps = []
    r_lo = rho_at(lo)
    r_hi = rho_at(hi)
    if r_lo < 1e-8:
        raise NoSolutionError(
            f"overlap already collapsed at the degenerate onset alpha={lo:g}")
    if r_hi >= 1e-8:
        raise NoSolutionError(f"overlap still open at alpha={hi:g}")
    survivors.append((lo, r_lo))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        r_mid = rho_at(mid)
        steps.append((mid, r_mid))
        if r_mid < 1e-8:
            hi = mid
        else:
            lo = mid
            survivors.append((mid, r_mid))
    threshold = 0.5 * (lo + hi)
    survivors.sort()
    rho_before = survivors[-1][1]
    discontinuous = rho_before > RHO_DISCONTINUITY
    if not discontinuous:
        # continuous closure: add a few wider-spaced samples so the fit sees
        # more than the bisection's tight cluster near the threshold
        for off in (0.06, 0.04, 0.02):
            a = threshold - off
            if a > deg.alpha_c:
                survivors.append((a, rho_at(a)))
        survivors.sort()
    extrapolated = _extrapolate_vanishing(survivors)
    if discontinuous or extrapolated is None:
        alpha_c = threshold
        bracket = (lo, hi)
        criterion = "overlap collapse (level crossing)"
    else:
        alpha_c = extrapolated
        bracket = (alpha_c - tol, alpha_c)
        criterion = "extrapolated overlap vanishing"
    return QcpResult(
        p_base.s, p_base.delta, "Superposed", alpha_c, bracket, criterion,
        diagnostics={
            "threshold": threshold,
            "threshold_bracket": (lo, hi),
            "extrapolated": extrapolated,
            "rho_before_collapse": rho_before,
            "samples": [list(q) for q in survivors],
            "bisection_steps": [list(q) for q in steps],
            "alpha_c_degenerate": deg.alpha_c,
            "alpha_c_sh": sh_c,
        })


def energy_difference_curve(p_base: BathParams, alphas,
                            cfg: QuadratureConfig = DEFAULT_QUAD):
    """(alpha, E_sup - E_deg, flags) along the grid.

    The difference is never positive where both solves succeed and is
    strictly negative once the broken degenerate branch exists, because the
    superposed family contains the degenerate solution as its closed-overlap
    limit and keeps a lower open-overlap branch available.
    """
    out = []
    warm = None
    tau_prev = 0.9
    for alpha in alphas:
        p = BathParams(p_base.s, float(alpha), p_base.delta)
        flags = []
        try:
            e_deg = _best_degenerate_energy(p, cfg)
        except SbqcpError:
            e_deg, flags = math.nan, flags + ["deg-failed"]
        try:
            gs = ground_state(p, cfg, warm=warm, tau_seed=tau_prev)
            e_sup = gs.energy
            if gs.rho > 0:
                warm = (gs.M, gs.a, gs.W)
                if gs.tau > 0:
                    tau_prev = gs.tau
        except SbqcpError:
            e_sup, flags = math.nan, flags + ["sup-failed"]
        out.append((float(alpha), e_sup - e_deg, ";".join(flags)))
    return out


# reference critical couplings quoted for comparison in the source table
TABLE1_ANNOTATIONS = {
    "NRG": {0.25: 0.0264, 0.5: 0.1065, 0.75: 0.3168, 1.0: 1.0},
    "QMC": {0.25: 0.0254, 0.5: 0.0983, 0.75: 0.2951, 1.0: 1.0},
    "sparse-polynomial": {0.25: 0.0259, 0.5: 0.0977, 0.75: 0.2953, 1.0: 1.0},
    "coherent-state": {0.25: 0.0256, 0.5: 0.0820, 0.75: 0.3205, 1.0: 1.0},
}

# the Ohmic single-polaron tangency is quoted in the vanishing-tunneling
# convention; this delta stands in for that limit
SH_OHMIC_DELTA = 1e-3


def table1_report(delta: float = 0.1, s_list=(0.25, 0.5, 0.75, 1.0),
                  cfg: QuadratureConfig = DEFAULT_QUAD):
    """Rows (s, alpha_c_sh, alpha_c_deg, alpha_c_sup) plus static annotations.

    Failed cells carry NaN and a flag naming the cell.  Returns a dict with
    "rows": list of row dicts and "annotations": the reference columns.
    """
    rows = []
    for s in s_list:
        flags = []
        sh_delta = SH_OHMIC_DELTA if s == 1.0 else delta
        try:
            a_sh = sh_alpha_c(s, sh_delta, cfg)
        except SbqcpError:
            a_sh, flags = math.nan, flags + ["sh-failed"]
        base = BathParams(s, 0.0, delta)
        try:
            a_deg = degenerate_alpha_c(base, cfg).alpha_c
        except SbqcpError:
            a_deg, flags = math.nan, flags + ["deg-failed"]
        try:
            sup = locate_alpha_c(base, "Superposed", cfg)
            a_sup = sup.alpha_c
            threshold = sup.diagnostics.get("threshold")
            extrapolated = sup.diagnostics.get("extrapolated")
        except SbqcpError:
            a_sup, threshold, extrapolated = math.nan, math.nan, math.nan
            flags.append("sup-failed")
        rows.append({
            "s": s, "alpha_c_sh": a_sh, "alpha_c_deg": a_deg,
            "alpha_c_sup": a_sup, "sup_threshold": threshold,
            "sup_extrapolated": extrapolated, "flags": ";".join(flags),
        })
    return {"delta": delta, "rows": rows, "annotations": TABLE1_ANNOTATIONS}
