"""Run artifacts: the CSV time series, the JSON summary, and figures.

CSV columns follow TimeSeriesRow order exactly; every float is written
with 17 significant digits so rows survive a round trip through text.
"""

import json
import math

import numpy as np

from .flow import CSV_COLUMNS

_FIELDS = ("step", "t", "S", "dSdt_formula", "dSdt_finite_difference",
           "lam", "integral_F2", "integral_H2", "integral_R",
           "integral_R2", "min_det_g", "max_abs_f")


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % value


def rows_to_csv(rows):
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, name)) for name in _FIELDS))
    return "\n".join(lines) + "\n"


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def summarize(rows, monotone_tol=1e-8):
    """Verdict block for the JSON summary."""
    if not rows:
        return {"rows": 0, "monotone": False}
    deltas = [b.S - a.S for a, b in zip(rows, rows[1:])]
    min_delta = min(deltas) if deltas else 0.0
    lams = [r.lam for r in rows if not math.isnan(r.lam)]
    return {
        "rows": len(rows),
        "steps": rows[-1].step,
        "t_final": rows[-1].t,
        "S_initial": rows[0].S,
        "S_final": rows[-1].S,
        "min_delta_S": min_delta,
        "monotone": bool(min_delta >= -monotone_tol),
        "lambda_first": lams[0] if lams else None,
        "lambda_final": lams[-1] if lams else None,
        "integral_F2_final": rows[-1].integral_F2,
        "integral_H2_final": rows[-1].integral_H2,
    }


def write_summary(summary, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def render_figures(rows, prefix):
    """PNG plots of the time series next to the CSV; returns the paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = [r.t for r in rows]
    written = []

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(t, [r.S for r in rows], marker=".", lw=1)
    ax1.set_ylabel("S")
    ax2.plot(t, [r.dSdt_formula for r in rows], marker=".", lw=1,
             label="formula")
    ax2.plot(t, [r.dSdt_finite_difference for r in rows], ls="--", lw=1,
             label="finite difference")
    ax2.set_xlabel("t")
    ax2.set_ylabel("dS/dt")
    ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = f"{prefix}_action.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    for name, label in (("integral_F2", "int F^2 dV"),
                        ("integral_H2", "int H^2 dV"),
                        ("integral_R", "int R dV"),
                        ("integral_R2", "int R^2 dV")):
        ax.plot(t, [getattr(r, name) for r in rows], lw=1, label=label)
    ax.set_xlabel("t")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = f"{prefix}_invariants.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    spectral = [(r.t, r.lam) for r in rows if not math.isnan(r.lam)]
    if spectral:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot([p[0] for p in spectral], [p[1] for p in spectral],
                marker="o", lw=1)
        ax.set_xlabel("t")
        ax.set_ylabel("lambda")
        fig.tight_layout()
        path = f"{prefix}_lambda.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
