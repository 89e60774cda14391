"""Command-line front end.

Subcommands mirror the library: single-point solves for each ansatz,
coupling scans, the energy-difference curve, critical-coupling location,
the summary table, and the brute-force upper-bound check.  Every run is
reproducible from its inputs alone; there is no seed anywhere.  When an
output path is given the data land as CSV or JSON with a JSON manifest
sibling, and the scan and difference-curve commands render a figure next
to the data file.  Without an output path the rows go to stdout.
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, fields

from .bath import BathParams, DEFAULT_QUAD, QuadratureConfig, discretize_bath
from .degenerate import constant_phi_overlap, solve_degenerate
from .errors import NoSolutionError, SbqcpError, UsageError
from .oracle import EdInstance, ed_ground_state, variational_energy_discrete
from .qcp import energy_difference_curve, locate_alpha_c, scan_alpha, table1_report
from .report import (emit_csv, render_figure2, render_scan_figure,
                     write_manifest, _atomic_write)
from .sh import solve_sh
from .superposed import ground_state

COMMANDS = ("sh-solve", "deg-solve", "sup-solve", "scan", "figure2",
            "qcp", "table1", "oracle-check")

SCHEMAS = {
    "scan": ("alpha", "tau", "rho", "M", "W", "eta",
             "E_sh", "E_deg", "E_sup", "flags"),
    "table1": ("s", "alpha_c_sh", "alpha_c_deg", "alpha_c_sup"),
    "figure2": ("alpha", "dE"),
    "sh-solve": ("s", "alpha", "delta", "eta0", "W", "energy"),
    "deg-solve": ("s", "alpha", "delta", "branch", "eta", "M", "W",
                  "energy", "overlap_divergent"),
    "sup-solve": ("s", "alpha", "delta", "tau", "M", "W", "eta", "rho",
                  "shift", "energy", "source"),
    "qcp": ("s", "delta", "method", "alpha_c", "bracket_lo", "bracket_hi",
            "criterion", "threshold", "extrapolated"),
    "oracle-check": ("s", "alpha", "ansatz", "E_var", "E_ed", "gap",
                     "sigma_z_avg"),
}


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one invocation; round-trips through a dict."""

    command: str
    s: float = 1.0
    alpha: float = 0.1
    delta: float = 0.1
    grid_start: float | None = None
    grid_stop: float | None = None
    grid_count: int | None = None
    grid_spacing: str = "linear"
    panels: int = DEFAULT_QUAD.panels
    nodes_per_panel: int = DEFAULT_QUAD.nodes_per_panel
    output: str | None = None
    format: str = "csv"
    method: str = "all"
    strict: bool = False
    deterministic: bool = True

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}, expected "
                             f"one of {', '.join(COMMANDS)}")
        if not self.s > 0:
            raise UsageError("s must be > 0")
        if self.alpha < 0:
            raise UsageError("alpha must be >= 0")
        if not 0 <= self.delta <= 1:
            raise UsageError("delta must lie in [0, 1]")
        if self.grid_spacing not in ("linear", "log"):
            raise UsageError("grid_spacing must be 'linear' or 'log'")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be 'csv' or 'json'")
        if self.method not in ("all", "sh", "degenerate", "superposed"):
            raise UsageError("method must be all, sh, degenerate "
                             "or superposed")
        if self.panels < 1 or self.nodes_per_panel < 2:
            raise UsageError("panels must be >= 1 and nodes_per_panel >= 2")
        if not self.deterministic:
            raise UsageError("deterministic cannot be disabled")
        if self.grid_count is not None:
            if self.grid_count < 1:
                raise UsageError("grid count must be >= 1")
            if self.grid_stop <= self.grid_start and self.grid_count > 1:
                raise UsageError("grid stop must exceed start")
            if self.grid_spacing == "log" and self.grid_start <= 0:
                raise UsageError("log grid requires start > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise UsageError(f"unknown config key {key!r}")
        return cls(**data)

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(panels=self.panels,
                                nodes_per_panel=self.nodes_per_panel)

    def grid(self):
        import numpy as np
        if self.grid_count is None:
            raise UsageError(f"{self.command} requires --grid")
        if self.grid_spacing == "log":
            return np.geomspace(self.grid_start, self.grid_stop,
                                self.grid_count)
        return np.linspace(self.grid_start, self.grid_stop, self.grid_count)


_BOOL_TRUE = ("1", "true", "yes", "on")
_BOOL_FALSE = ("0", "false", "no", "off")


def _coerce(key: str, raw: str):
    kind = {"s": float, "alpha": float, "delta": float,
            "grid_start": float, "grid_stop": float, "grid_count": int,
            "panels": int, "nodes_per_panel": int,
            "strict": bool, "deterministic": bool}.get(key, str)
    if kind is bool:
        low = raw.strip().lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise UsageError(f"config key {key!r} expects a boolean, got {raw!r}")
    try:
        return kind(raw.strip())
    except ValueError:
        raise UsageError(f"config key {key!r} expects {kind.__name__}, "
                         f"got {raw!r}")


def _parse_grid_spec(text: str) -> dict:
    parts = text.split(":")
    if len(parts) == 4 and parts[3] == "log":
        spacing = "log"
        parts = parts[:3]
    elif len(parts) == 3:
        spacing = "linear"
    else:
        raise UsageError(f"grid must be start:stop:count[:log], got {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise UsageError(f"grid must be start:stop:count[:log], got {text!r}")
    return {"grid_start": start, "grid_stop": stop, "grid_count": count,
            "grid_spacing": spacing}


def read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment; grid accepts colon form."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise UsageError(f"{path}:{lineno}: expected key=value, "
                             f"got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key == "grid":
            out.update(_parse_grid_spec(raw))
        else:
            out[key] = _coerce(key, raw)
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbqcp",
        description="variational ground states and the critical coupling "
                    "of the unbiased spin-boson model")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key=value file; "
                        "command-line flags override it")
    parser.add_argument("--s", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--grid", help="start:stop:count[:log]")
    parser.add_argument("--panels", type=int)
    parser.add_argument("--nodes-per-panel", type=int, dest="nodes_per_panel")
    parser.add_argument("--output", "-o")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--method",
                        choices=("all", "sh", "degenerate", "superposed"))
    parser.add_argument("--strict", action="store_true", default=None)
    return parser


def parse_config(argv) -> RunConfig:
    """Merge config file and flags into a validated RunConfig.

    Flags override file values; the file may hold any RunConfig key.
    """
    ns = _build_parser().parse_args(argv)
    data = {}
    if ns.config:
        data.update(read_config_file(ns.config))
    data["command"] = ns.command
    for key in ("s", "alpha", "delta", "panels", "nodes_per_panel",
                "output", "format", "method", "strict"):
        value = getattr(ns, key)
        if value is not None:
            data[key] = value
    if ns.grid is not None:
        data.update(_parse_grid_spec(ns.grid))
    return RunConfig.from_dict(data)


# ---------------------------------------------------------------------------
# subcommand bodies: each returns (rows, tolerances, failure_flags, renderer)

def _cmd_sh_solve(cfg: RunConfig, quad):
    p = BathParams(cfg.s, cfg.alpha, cfg.delta)
    sol = solve_sh(p, quad)
    row = (p.s, p.alpha, p.delta, sol.eta0, sol.eta0 * p.delta, sol.energy)
    return [row], {"fixed_point_rel_tol": 1e-12}, [], None


def _cmd_deg_solve(cfg: RunConfig, quad):
    p = BathParams(cfg.s, cfg.alpha, cfg.delta)
    try:
        sol = solve_degenerate(p, "broken", quad)
    except NoSolutionError:
        sol = solve_degenerate(p, "symmetric", quad)
    overlap = constant_phi_overlap(sol, p, quad)
    row = (p.s, p.alpha, p.delta, sol.branch, sol.eta, sol.M, sol.W,
           sol.energy, overlap.divergent)
    return [row], {"root_rel_tol": 1e-12}, [], None


def _cmd_sup_solve(cfg: RunConfig, quad):
    p = BathParams(cfg.s, cfg.alpha, cfg.delta)
    gs = ground_state(p, quad)
    row = (p.s, p.alpha, p.delta, gs.tau, gs.M, gs.W, gs.eta, gs.rho,
           gs.delta_shift, gs.energy, gs.note)
    return [row], {"inner_rel_tol": 1e-12, "tau_tol": 1e-6}, [], None


def _workers() -> int:
    raw = os.environ.get("SBQCP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"SBQCP_THREADS must be an integer, got {raw!r}")


def _cmd_scan(cfg: RunConfig, quad):
    p = BathParams(cfg.s, 0.0, cfg.delta)
    records = scan_alpha(p, cfg.grid(), quad, n_workers=_workers())
    rows = [(r.alpha, r.tau_star, r.rho, r.M, r.W, r.eta,
             r.E_sh, r.E_deg, r.E_sup, r.flags) for r in records]
    flags = sorted({f for r in records if r.flags for f in r.flags.split(";")})

    def renderer(path):
        ok = [r for r in records if not math.isnan(r.tau_star)]
        return render_scan_figure(path, [r.alpha for r in ok],
                                  [r.tau_star for r in ok],
                                  [max(r.rho, 1e-300) for r in ok])

    return rows, {"tau_tol": 1e-4, "inner_rel_tol": 1e-12}, flags, renderer


def _cmd_figure2(cfg: RunConfig, quad):
    p = BathParams(cfg.s, 0.0, cfg.delta)
    curve = energy_difference_curve(p, cfg.grid(), quad)
    rows = [(alpha, de) for alpha, de, _ in curve]
    flags = sorted({f for _, _, fl in curve if fl for f in fl.split(";")})

    def renderer(path):
        ok = [(a, d) for a, d in rows if not math.isnan(d)]
        return render_figure2(path, [a for a, _ in ok], [d for _, d in ok])

    return rows, {"tau_tol": 1e-6}, flags, renderer


def _cmd_qcp(cfg: RunConfig, quad):
    methods = {"sh": ["SH"], "degenerate": ["Degenerate"],
               "superposed": ["Superposed"],
               "all": ["SH", "Degenerate", "Superposed"]}[cfg.method]
    p = BathParams(cfg.s, 0.0, cfg.delta)
    rows, flags = [], []
    for method in methods:
        try:
            res = locate_alpha_c(p, method, quad)
        except SbqcpError as exc:
            flags.append(f"{method.lower()}-failed:{exc}")
            rows.append((cfg.s, cfg.delta, method, math.nan,
                         math.nan, math.nan, "", math.nan, math.nan))
            continue
        # threshold and extrapolated exist only for the superposed method;
        # an absent diagnostic is an empty cell, not a missing value
        thr = res.diagnostics.get("threshold")
        ext = res.diagnostics.get("extrapolated")
        rows.append((cfg.s, cfg.delta, method, res.alpha_c,
                     res.bracket[0], res.bracket[1], res.criterion,
                     "" if thr is None else thr,
                     "" if ext is None else ext))
    return rows, {"alpha_c_tol": 1e-5}, flags, None


def _cmd_table1(cfg: RunConfig, quad):
    data = table1_report(cfg.delta, cfg=quad)
    rows = [(r["s"], r["alpha_c_sh"], r["alpha_c_deg"], r["alpha_c_sup"])
            for r in data["rows"]]
    flags = sorted({f for r in data["rows"] if r["flags"]
                    for f in r["flags"].split(";")})
    tol = {"alpha_c_tol": 1e-5,
           "sup_threshold": {str(r["s"]): r["sup_threshold"]
                             for r in data["rows"]},
           "sup_extrapolated": {str(r["s"]): r["sup_extrapolated"]
                                for r in data["rows"]}}
    return rows, tol, flags, None


def _cmd_oracle_check(cfg: RunConfig, quad):
    rows, flags = [], []
    for s in (0.5, 1.0):
        for alpha in (0.1, 0.3):
            p = BathParams(s, alpha, cfg.delta)
            bath = discretize_bath(p, n_modes=3)
            inst = EdInstance(bath=bath, delta=p.delta, n_max=10)
            ed = ed_ground_state(inst)
            if abs(ed.sigma_z_avg) > 1e-8:
                flags.append(f"sigma-z-nonzero:s={s}:alpha={alpha}")
            for name in ("sh", "degenerate", "superposed"):
                e_var = variational_energy_discrete(inst, name)
                gap = e_var - ed.energy
                if gap < -1e-9:
                    flags.append(f"bound-violated:{name}:s={s}:alpha={alpha}")
                rows.append((s, alpha, name, e_var, ed.energy, gap,
                             ed.sigma_z_avg))
    return rows, {"bound_slack": 1e-9, "sigma_z_tol": 1e-8}, flags, None


_DISPATCH = {
    "sh-solve": _cmd_sh_solve,
    "deg-solve": _cmd_deg_solve,
    "sup-solve": _cmd_sup_solve,
    "scan": _cmd_scan,
    "figure2": _cmd_figure2,
    "qcp": _cmd_qcp,
    "table1": _cmd_table1,
    "oracle-check": _cmd_oracle_check,
}


def _rows_to_json(header, rows) -> str:
    payload = []
    for row in rows:
        entry = {}
        for name, value in zip(header, row):
            if isinstance(value, float) and math.isnan(value):
                value = None
            entry[name] = value
        payload.append(entry)
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _emit(cfg: RunConfig, header, rows) -> list:
    """Write rows to the configured destination; returns NaN-cell flags."""
    if cfg.output is None:
        text_rows = [",".join(header)]
        for row in rows:
            text_rows.append(",".join(
                "" if (v is None or (isinstance(v, float) and math.isnan(v)))
                else (repr(float(v)) if isinstance(v, float) else str(v))
                for v in row))
        sys.stdout.write("\n".join(text_rows) + "\n")
        return [f"nan:{name}:row{idx}" for idx, row in enumerate(rows)
                for name, v in zip(header, row)
                if isinstance(v, float) and math.isnan(v)]
    if cfg.format == "json":
        _atomic_write(cfg.output, _rows_to_json(header, rows))
        return [f"nan:{name}:row{idx}" for idx, row in enumerate(rows)
                for name, v in zip(header, row)
                if isinstance(v, float) and math.isnan(v)]
    missing = emit_csv(cfg.output, header, rows)
    return [f"nan:{name}:row{idx}" for idx, name in missing]


def run_command(argv) -> int:
    """Execute one invocation; returns the process exit code."""
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    quad = cfg.quadrature()
    start = time.monotonic()
    try:
        rows, tolerances, flags, renderer = _DISPATCH[cfg.command](cfg, quad)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SbqcpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    header = SCHEMAS[cfg.command]
    flags = list(flags) + _emit(cfg, header, rows)
    if cfg.output is not None:
        if renderer is not None:
            try:
                renderer(cfg.output)
            except Exception as exc:  # figure loss should not kill the data
                flags.append(f"figure-failed:{exc}")
        write_manifest(cfg.output, cfg.command, cfg.to_dict(), tolerances,
                       time.monotonic() - start, flags)
    if cfg.strict and flags:
        print(f"error: {len(flags)} flagged rows in strict mode",
              file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
