"""Bath spectral density and the singular moment integrals used by every ansatz.

The bath is a power-law continuum J(omega) = 2 * alpha * omega**s * omega_c**(1-s)
with a hard cutoff at omega_c, and omega_c = 1 fixes the energy unit.  All
self-consistency equations reduce to a small family of moment integrals over
[0, 1] whose integrands carry up to two sharp scales (the renormalized tunneling
W and the shift combination a = rho*delta), either of which may sit hundreds of
decades below the cutoff.  The engine here integrates on logarithmically spaced
Gauss-Legendre panels down to a floor tied to the smallest physical scale and
closes the remainder [0, floor] with the analytic leading-power term.

A discretized bath (frequencies plus couplings obtained by binning J) backs the
exact-diagonalization oracle and the finite-difference stationarity checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, NonConvergedError

OMEGA_C = 1.0

# Kernel names accepted by bath_moment / moment_table.
MOMENT_KINDS = ("I1", "I2", "I3", "I4", "Jd", "K", "D")


@dataclass(frozen=True)
class BathParams:
    """Problem instance: spectral exponent, coupling, and tunneling splitting."""

    s: float
    alpha: float
    delta: float
    omega_c: float = OMEGA_C

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError(f"s must be > 0, got {self.s}")
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 <= self.delta <= self.omega_c:
            raise DomainError(f"delta must lie in [0, omega_c], got {self.delta}")
        if self.omega_c != OMEGA_C:
            raise DomainError("omega_c is the energy unit and must equal 1")


@dataclass(frozen=True)
class QuadratureConfig:
    panels: int = 64
    nodes_per_panel: int = 16
    omega_floor: float | None = None  # None: auto, min(W, a) * 1e-10
    rel_tol: float = 1e-10


DEFAULT_QUAD = QuadratureConfig()


def spectral_density(p: BathParams, omega):
    """J(omega) = 2*alpha*omega**s for omega <= omega_c, zero above the cutoff."""
    omega = np.asarray(omega, dtype=float)
    out = np.where(omega <= p.omega_c, 2.0 * p.alpha * omega**p.s, 0.0)
    return out if out.ndim else float(out)


def overlap_exponent_divergent(s: float) -> bool:
    """Whether the integral of omega**(s-2)/(omega+W)**2 diverges at omega=0.

    Decided analytically from the power counting at the origin: the integrand
    behaves as omega**(s-2), integrable only for s > 1.  A quadrature cannot
    certify divergence, so this is never decided numerically.
    """
    return s <= 1.0


@lru_cache(maxsize=None)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel_grid(lo: float, hi: float, panels: int, nodes: int):
    """Gauss-Legendre nodes/weights on geometrically spaced panels of [lo, hi]."""
    edges = np.geomspace(lo, hi, panels + 1)
    x, w = _leggauss(nodes)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return (mid + half * x[None, :]).ravel(), (half * w[None, :]).ravel()


@lru_cache(maxsize=128)
def _grid_bundle(s: float, lo_exp: int, panels: int, nodes: int):
    """Cached grid arrays for a decade-quantized lower edge 10**lo_exp.

    The solvers evaluate these kernels tens of thousands of times per scan at
    slowly drifting scales; quantizing the lower edge to a decade makes the
    grid (and the s-dependent powers and logs) reusable across calls.
    """
    om, wt = _panel_grid(10.0 ** lo_exp, 1.0, panels, nodes)
    return om, wt, om**s, np.log(om), np.log(wt)


def _tail(c: float, p: float, lo: float) -> float:
    """Analytic remainder integral of omega**(p-1)/c**2 over [0, lo], log-safe."""
    if c <= 0.0:
        return np.inf
    return float(np.exp(p * np.log(lo) - np.log(p) - 2.0 * np.log(c)))


def _eval_kernels(s, W, a, lo_exp, panels, nodes, which):
    """Raw kernel values on the panel grid plus analytic [0, lo] tails.

    Two evaluation paths: plain arithmetic when every scale is comfortably
    inside double range, and a log-space path otherwise (W can sit hundreds
    of decades below the cutoff near the single-polaron tangency, where
    (omega+W)**2 underflows).  Values beyond double range saturate to inf,
    which is the honest answer for those moments.
    """
    om, wt, oms, lom, lwt = _grid_bundle(s, lo_exp, panels, nodes)
    lo = 10.0 ** lo_exp
    out = {}
    small = min(W, a) if a > 0 else W
    if small >= 1e-90:
        d1 = (om + W) ** 2
        f1 = oms / d1
        if "I1" in which:
            out["I1"] = float(wt @ f1) + _tail(W, s + 1, lo)
        if "Jd" in which:
            out["Jd"] = float(wt @ (f1 / om)) + _tail(W, s, lo)
        if "Kbar" in which:
            out["Kbar"] = 0.5 * (
                float(wt @ (oms * (om + 2 * W) / d1))
                + 2.0 * float(np.exp((s + 1) * np.log(lo) - np.log(s + 1) - np.log(W)))
            )
        if a > 0:
            d2 = om + a
            if "I2" in which:
                out["I2"] = float(wt @ (f1 / d2)) + _tail(W, s + 1, lo) / a
            if "I3" in which:
                out["I3"] = float(wt @ (f1 * om / (d2 * d2))) + _tail(W, s + 2, lo) / a**2
            if "I4" in which:
                out["I4"] = float(wt @ (f1 / (d2 * d2))) + _tail(W, s + 1, lo) / a**2
    else:
        lw = lom
        lden1 = 2.0 * np.log(om + W)
        with np.errstate(over="ignore"):
            if "I1" in which:
                out["I1"] = float(np.sum(np.exp(lwt + s * lw - lden1))) \
                    + _tail(W, s + 1, lo)
            if "Jd" in which:
                out["Jd"] = float(np.sum(np.exp(lwt + (s - 1) * lw - lden1))) \
                    + _tail(W, s, lo)
            if "Kbar" in which:
                out["Kbar"] = 0.5 * (
                    float(np.sum(np.exp(lwt + s * lw - lden1) * (om + 2 * W)))
                    + 2.0 * float(np.exp((s + 1) * np.log(lo) - np.log(s + 1)
                                         - np.log(W)))
                )
            if a > 0:
                lden2 = np.log(om + a)
                if "I2" in which:
                    out["I2"] = float(np.sum(np.exp(lwt + s * lw - lden1 - lden2))) \
                        + _tail(W, s + 1, lo) / a
                if "I3" in which:
                    out["I3"] = float(np.sum(np.exp(lwt + (s + 1) * lw - lden1
                                                    - 2 * lden2))) \
                        + _tail(W, s + 2, lo) / a**2
                if "I4" in which:
                    out["I4"] = float(np.sum(np.exp(lwt + s * lw - lden1
                                                    - 2 * lden2))) \
                        + _tail(W, s + 1, lo) / a**2
    return out


_BASE_KERNELS = ("I1", "Jd", "Kbar")
_AUX_KERNELS = ("I2", "I3", "I4")


def moment_table(s, W, a=None, cfg: QuadratureConfig = DEFAULT_QUAD,
                 check=False, which=None):
    """Evaluate the kernel family at (W, a).

    Returns a dict with I1, Jd, Kbar, and additionally I2, I3, I4 when a is a
    positive shift; pass which=(names...) to restrict evaluation.  Kbar is
    the alpha-free half-integral of omega**s*(omega+2W)/(omega+W)**2; callers
    multiply by alpha to get K.  With check=True the panel count is doubled
    and disagreement beyond cfg.rel_tol raises NonConvergedError.
    """
    if not W > 0:
        raise DomainError(f"W must be > 0, got {W}")
    want_aux = a is not None
    if want_aux and a < 0:
        raise DomainError(f"shift a must be >= 0, got {a}")
    if which is None:
        which = _BASE_KERNELS + (_AUX_KERNELS if want_aux and a > 0 else ())
    scale = min(W, a) if (want_aux and a > 0) else W
    lo = cfg.omega_floor if cfg.omega_floor is not None else max(scale * 1e-10, 1e-300)
    # quantize the lower edge down to a decade so grids are cacheable
    lo_exp = min(max(int(math.floor(math.log10(lo) + 1e-12)), -300), -1)
    panels = max(cfg.panels, 3 * -lo_exp)
    a_eff = a if want_aux else 0.0
    res = _eval_kernels(s, W, a_eff, lo_exp, panels, cfg.nodes_per_panel, which)
    if check:
        res2 = _eval_kernels(s, W, a_eff, lo_exp, 2 * panels, cfg.nodes_per_panel, which)
        for k, v in res.items():
            if abs(v - res2[k]) > cfg.rel_tol * max(abs(res2[k]), 1e-300):
                raise NonConvergedError(
                    f"quadrature refinement disagrees for {k} at s={s}, W={W:g}, a={a}"
                )
        return res2
    return res


def bath_moment(p: BathParams, kind: str, W: float, a: float = 0.0,
                cfg: QuadratureConfig = DEFAULT_QUAD):
    """Single named moment integral, with coupling prefactors where conventional.

    I1, I2, I3, I4, Jd are bare integrals of the respective kernels; K carries
    the (alpha/2) prefactor of the bath binding energy; D is the infrared
    overlap diagnostic, +inf for s <= 1 regardless of W.
    """
    if kind not in MOMENT_KINDS:
        raise DomainError(f"unknown moment kind {kind!r}")
    if kind == "D":
        if overlap_exponent_divergent(p.s):
            return np.inf
        # finite for s > 1: integrate omega**(s-2)/(omega+W)**2 directly
        if not W > 0:
            raise DomainError(f"W must be > 0, got {W}")
        lo = cfg.omega_floor if cfg.omega_floor is not None else max(W * 1e-10, 1e-300)
        panels = max(cfg.panels, int(np.ceil(3 * np.log10(1.0 / lo))))
        om, wt = _panel_grid(lo, 1.0, panels, cfg.nodes_per_panel)
        return float(wt @ (om ** (p.s - 2) / (om + W) ** 2)) + _tail(W, p.s - 1, lo)
    if kind in _AUX_KERNELS and a == 0.0:
        # zero shift reduces analytically: I2, I3 -> Jd and I4 -> D
        if kind == "I4":
            return bath_moment(p, "D", W, cfg=cfg)
        return moment_table(p.s, W, cfg=cfg, which=("Jd",))["Jd"]
    key = "Kbar" if kind == "K" else kind
    tab = moment_table(p.s, W, a if kind in _AUX_KERNELS else None, cfg,
                       which=(key,))
    if kind == "K":
        return p.alpha * tab["Kbar"]
    return tab[kind]


# ---------------------------------------------------------------------------
# discretized bath


@dataclass(frozen=True)
class DiscreteBath:
    """Finite mode set: omega_i in (0, 1] with couplings g_i from binning J."""

    frequencies: np.ndarray
    couplings: np.ndarray
    scheme: str = "linear"

    def __post_init__(self):
        om = np.asarray(self.frequencies, dtype=float)
        g = np.asarray(self.couplings, dtype=float)
        if om.shape != g.shape or om.ndim != 1:
            raise DomainError("frequencies and couplings must be equal-length 1-D arrays")
        if np.any(om <= 0) or np.any(om > OMEGA_C):
            raise DomainError("frequencies must lie in (0, 1]")
        if np.any(g < 0):
            raise DomainError("couplings must be non-negative")
        object.__setattr__(self, "frequencies", om)
        object.__setattr__(self, "couplings", g)

    @property
    def n_modes(self) -> int:
        return self.frequencies.size

    @property
    def g2(self) -> np.ndarray:
        return self.couplings**2

    def weighted_sum(self, values) -> float:
        """Sum of g_i**2 * values_i, the discrete stand-in for int J(w) f(w) dw."""
        return float(np.dot(self.g2, values))


def discretize_bath(p: BathParams, scheme: str = "linear", n_modes: int = 8,
                    lam: float = 2.0) -> DiscreteBath:
    """Bin J over (0, 1] and place one mode per bin at the J-weighted centroid.

    g_i**2 is the exact integral of J over the bin, so the coupling sum rule
    sum g_i**2 = 2*alpha/(s+1) holds to rounding for any bin count.  The
    logarithmic scheme uses bin edges lam**(-k) down to lam**(-n_modes).
    """
    if n_modes < 1:
        raise DomainError("n_modes must be >= 1")
    if scheme == "linear":
        edges = np.linspace(0.0, 1.0, n_modes + 1)
    elif scheme == "logarithmic":
        if lam <= 1:
            raise DomainError("logarithmic scheme needs lam > 1")
        edges = np.concatenate(([0.0], lam ** (-np.arange(n_modes, 0, -1, dtype=float))))
        edges[-1] = 1.0
    else:
        raise DomainError(f"unknown scheme {scheme!r}")
    s, alpha = p.s, p.alpha
    a_e, b_e = edges[:-1], edges[1:]
    # int_bin J = 2*alpha/(s+1) * (b^(s+1) - a^(s+1)); centroid uses the s+2 moment
    pow1 = b_e ** (s + 1) - a_e ** (s + 1)
    pow2 = b_e ** (s + 2) - a_e ** (s + 2)
    g2 = 2.0 * alpha / (s + 1) * pow1
    om = (s + 1) / (s + 2) * pow2 / pow1
    return DiscreteBath(frequencies=om, couplings=np.sqrt(g2), scheme=scheme)
