"""Delimited output, run manifests, and figure rendering.

Every writer lands atomically: content goes to a temporary file in the
destination directory and is moved into place with os.replace, so a
crashed run never leaves a half-written artifact.  Numbers are formatted
with repr, which round-trips doubles exactly and never consults the
locale.
"""

import json
import math
import os
import tempfile

import numpy as np

ARTIFACT_VERSION = "1"


def _is_nan(value) -> bool:
    return isinstance(value, float) and math.isnan(value)


def _cell(value) -> str:
    if value is None or _is_nan(value):
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(path: str, header, rows) -> list:
    """Write rows under the exact header; blank cells mark missing values.

    Returns (row_index, column_name) pairs for every NaN or None cell so
    the caller can record them as flags.
    """
    missing = []
    lines = [",".join(header)]
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"row {i} has {len(row)} cells, "
                             f"header has {len(header)}")
        cells = []
        for name, value in zip(header, row):
            if value is None or _is_nan(value):
                missing.append((i, name))
            cells.append(_cell(value))
        lines.append(",".join(cells))
    _atomic_write(path, "\n".join(lines) + "\n")
    return missing


def manifest_path(output_path: str) -> str:
    base, _ = os.path.splitext(output_path)
    return base + ".manifest.json"


def write_manifest(output_path: str, command: str, config: dict,
                   tolerances: dict, wall_time: float,
                   failure_flags) -> str:
    """JSON sidecar describing how the sibling artifact was produced."""
    payload = {
        "artifact_version": ARTIFACT_VERSION,
        "command": command,
        "config": config,
        "tolerances": tolerances,
        "wall_time_s": wall_time,
        "failure_flags": sorted(set(failure_flags)),
        "output": os.path.basename(output_path),
    }
    path = manifest_path(output_path)
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def figure_path(output_path: str, suffix: str = "") -> str:
    base, _ = os.path.splitext(output_path)
    return base + (suffix + ".png" if suffix else ".png")


def _save(fig, path: str):
    fig.savefig(path, dpi=150, metadata={"Software": "sbqcp"})


def render_scan_figure(path: str, alphas, taus, rhos) -> str:
    """Amplitude and overlap against coupling, two stacked panels."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    alphas = np.asarray(alphas, dtype=float)
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(5.0, 6.0))
    ax1.plot(alphas, np.asarray(taus, dtype=float), "o-", ms=3)
    ax1.set_ylabel(r"$\tau^*$")
    ax2.plot(alphas, np.asarray(rhos, dtype=float), "o-", ms=3)
    ax2.set_yscale("log")
    ax2.set_ylabel(r"$\rho$")
    ax2.set_xlabel(r"$\alpha$")
    fig.tight_layout()
    out = figure_path(path)
    _save(fig, out)
    plt.close(fig)
    return out


def render_figure2(path: str, alphas, de) -> str:
    """Energy gain of the superposed state over the constant profile."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.plot(np.asarray(alphas, dtype=float), np.asarray(de, dtype=float),
            "o-", ms=3)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel(r"$E_g - E_g^{\,D}$")
    fig.tight_layout()
    out = figure_path(path)
    _save(fig, out)
    plt.close(fig)
    return out
