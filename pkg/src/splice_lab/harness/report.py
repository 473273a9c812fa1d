"""results.csv / summary.json writers and optional SVG decay plots."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..estimates import EstimateRow

CSV_COLUMNS = ("R", "r", "quantity_name", "measured", "bound_shape", "implied_constant")


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def write_results_csv(rows: Iterable[EstimateRow], path: str | Path) -> Path:
    """Fixed column order and ``%.17g`` numbers, so equal inputs give equal bytes."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
    return path


def read_results_csv(path: str | Path) -> list[EstimateRow]:
    with Path(path).open(newline="") as fh:
        return [EstimateRow(float(r["R"]), float(r["r"]), r["quantity_name"], float(r["measured"]),
                            float(r["bound_shape"]), float(r["implied_constant"]))
                for r in csv.DictReader(fh)]


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return _jsonable(x.item())
    return x


def write_summary(summary: Mapping, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return path


def plot_curves(curves: Mapping[str, tuple[Sequence[float], Sequence[float], float]],
                path: str | Path, title: str = "") -> Path | None:
    """Semilog plot of each ``name -> (R, values, slope)`` series with its fitted line.

    Returns None when matplotlib is unavailable (plots are optional).
    """
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None
    import numpy as np

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, (R, vals, slope) in curves.items():
        R = np.asarray(R, dtype=float)
        v = np.asarray(vals, dtype=float)
        ok = v > 0
        if not ok.any():
            continue
        line, = ax.semilogy(R[ok], v[ok], "o", label=f"{name} (slope {slope:.3f})")
        icpt = np.mean(np.log(v[ok]) - slope * R[ok])
        ax.semilogy(R, np.exp(icpt + slope * R), "--", color=line.get_color())
    ax.set_xlabel("R")
    ax.set_ylabel("norm")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
