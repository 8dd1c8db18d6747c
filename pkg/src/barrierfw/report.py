"""Figure rendering for method comparisons.

Renders optimality-gap convergence plots (against both iteration count and
wall time) next to the delimited trace output.  Gaps are measured against
the best objective value any compared method reached, floored at a small
positive value so the log scale stays finite.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

GAP_FLOOR = 1e-16


def _gap_series(trace, f_best: float):
    ks = [r.k for r in trace]
    ts = [r.elapsed for r in trace]
    gaps = [max(r.F - f_best, GAP_FLOOR) for r in trace]
    return ks, ts, gaps


def render_compare_figures(traces: dict[str, list], out_dir, stem: str = "compare") -> list[str]:
    """One gap-vs-iterations and one gap-vs-time figure; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    finite = [r.F for trace in traces.values() for r in trace if math.isfinite(r.F)]
    if not finite:
        return []
    f_best = min(finite)
    written = []
    for mode, xlabel, fname in (
        ("iterations", "iteration", f"{stem}_gap_vs_iterations.png"),
        ("time", "wall time [s]", f"{stem}_gap_vs_time.png"),
    ):
        fig, ax = plt.subplots(figsize=(6.4, 4.4))
        for method, trace in sorted(traces.items()):
            ks, ts, gaps = _gap_series(trace, f_best)
            ax.plot(ks if mode == "iterations" else ts, gaps, label=method, linewidth=1.4)
        ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("objective gap to best")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = out_dir / fname
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(str(path))
    return written
