"""Generalized Frank-Wolfe with adaptive or exact line-search steps.

The adaptive rule minimizes the model F(x) - alpha*G + omega(alpha*D) over
[0, 1], giving alpha = min{G / (D(G+D)), 1}.  The exact rule minimizes the
restriction of separable-log objectives in closed form via safeguarded
root finding, and falls back to golden-section minimization for log-det
objectives.  Every run records a per-iteration trace and certifies its final
gap, since the linearization gap G bounds the optimality gap from above.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .barriers import (
    BarrierDomainError,
    LogDetBarrier,
    WeightedLogBarrier,
    cone_inner,
    omega_star,
)
from .composite import BoxLinearTerm, CompositeProblem
from .rootfind import golden_section, newton_bisection

TRACE_HEADER = "k,F,G,D,alpha,branch,elapsed_ms"

BRANCH_INTERIOR = "interior-step"
BRANCH_FULL = "full-step"
BRANCH_STOP = "stop"


@dataclass
class SolverConfig:
    step_rule: str = "adaptive"  # "adaptive" | "exact"
    eps: float | None = 1e-6  # stop once G_k <= eps; None disables the gap rule
    max_iters: int = 100_000
    time_limit: float | None = None  # wall-clock seconds

    def __post_init__(self):
        if self.step_rule not in ("adaptive", "exact"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.eps is not None and not self.eps > 0.0:
            raise ValueError("gap threshold must be positive when set")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.time_limit is not None and not self.time_limit > 0.0:
            raise ValueError("time limit must be positive when set")


@dataclass
class TraceRecord:
    k: int
    F: float
    G: float
    D: float
    alpha: float
    branch: str
    elapsed: float  # seconds since the run started


@dataclass
class SolveResult:
    x: np.ndarray
    trace: list[TraceRecord]
    status: str  # "gap" | "stationary" | "max_iters" | "time"

    @property
    def final_objective(self) -> float:
        return self.trace[-1].F

    @property
    def final_gap(self) -> float:
        return self.trace[-1].G


def step_size_adaptive(gap: float, dist: float) -> float:
    """min{G / (D(G+D)), 1}; returns 1 when the local distance vanishes."""
    if gap < 0.0 or dist < 0.0:
        raise ValueError("gap and local distance must be nonnegative")
    if dist == 0.0:
        return 1.0
    return min(gap / (dist * (gap + dist)), 1.0)


def exact_line_search(y, ax, ad, xi_dot_d: float = 0.0) -> float:
    """Minimizer over [0, 1] of zeta(a) = -sum_i y_i ln(ax_i + a*ad_i) + a*xi_dot_d.

    ``ax`` holds the current positive term values a_i^T x and ``ad`` the
    slopes a_i^T d along the direction.  Requires a strict descent direction
    (zeta'(0) < 0) and an interior starting point; the root of the strictly
    increasing derivative is found by Newton iterations safeguarded with
    bisection inside a bracket kept strictly inside the domain.
    """
    y = np.asarray(y, dtype=np.float64)
    ax = np.asarray(ax, dtype=np.float64)
    ad = np.asarray(ad, dtype=np.float64)
    if y.shape != ax.shape or y.shape != ad.shape:
        raise ValueError("y, ax, ad must share one shape")
    if np.any(ax <= 0.0):
        raise BarrierDomainError("line search requires strictly positive current term values")
    xi_dot_d = float(xi_dot_d)

    def dphi(a: float) -> float:
        return float(-np.sum(y * ad / (ax + a * ad))) + xi_dot_d

    def d2phi(a: float) -> float:
        r = ad / (ax + a * ad)
        return float(np.sum(y * r * r))

    if not dphi(0.0) < 0.0:
        raise ValueError("not a descent direction")

    neg = ad < 0.0
    if not bool(neg.any()):
        # the domain is unbounded to the right; the slope tends to xi_dot_d
        if xi_dot_d <= 0.0:
            return 1.0
        hi = 1.0
    else:
        pole = float(np.min(ax[neg] / -ad[neg]))
        hi = min(1.0, pole - 1e-12 * max(1.0, pole))
        if hi <= 0.0:
            return 0.0
    if dphi(hi) <= 0.0:
        # derivative still negative at the right end: clipped minimizer
        return hi
    tol = 1e-12 * (1.0 + abs(xi_dot_d))
    return newton_bisection(dphi, d2phi, 0.0, hi, abs_tol=tol, width_tol=1e-14)


def _exact_step_logdet(problem: CompositeProblem, u, du, h_slope: float) -> float:
    """Safeguarded univariate minimization of a -> f(u + a*du) + a*h_slope on [0, 1]."""
    barrier = problem.barrier

    def phi(a: float) -> float:
        point = u + a * du
        if not barrier.is_interior(point):
            return math.inf
        return barrier.value(point) + a * h_slope

    hi = 1.0
    if not barrier.is_interior(u + du):
        # locate the feasibility boundary, then stay strictly inside it
        lo_f, hi_f = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo_f + hi_f)
            if barrier.is_interior(u + mid * du):
                lo_f = mid
            else:
                hi_f = mid
        hi = lo_f * (1.0 - 1e-9)
    if hi <= 0.0:
        return 0.0
    return golden_section(phi, 0.0, hi, tol=1e-12)


def solve_fw(problem: CompositeProblem, x0, config: SolverConfig | None = None) -> SolveResult:
    """Run the generalized Frank-Wolfe method from a feasible interior start.

    Every iterate stays feasible with an interior barrier argument, the
    objective never increases, and on a gap-rule exit the last recorded G
    certifies the optimality gap.
    """
    if config is None:
        config = SolverConfig()
    x = np.array(x0, dtype=np.float64, copy=True)
    if not math.isfinite(problem.term.value(x)):
        raise ValueError("starting point is outside the domain of h")
    problem.barrier.require_interior(problem.linmap.apply(x))

    barrier = problem.barrier
    linmap = problem.linmap
    term = problem.term
    xi = term.coeff if isinstance(term, BoxLinearTerm) else None

    trace: list[TraceRecord] = []
    status = "max_iters"
    t0 = time.perf_counter()
    k = 0
    while True:
        u = linmap.apply(x)
        hx = term.value(x)
        F = barrier.value(u) + hx
        g = barrier.grad(u)
        c = linmap.apply_adjoint(g)
        v, hv, _ = term.lmo(c)
        uv = linmap.apply(v)
        gap = cone_inner(g, u - uv) + hx - hv
        du = uv - u
        dist = barrier.local_norm(u, du)
        elapsed = time.perf_counter() - t0

        if config.eps is not None and gap <= config.eps:
            trace.append(TraceRecord(k, F, gap, dist, 0.0, BRANCH_STOP, elapsed))
            status = "gap"
            break
        if gap <= 0.0 and dist == 0.0:
            trace.append(TraceRecord(k, F, gap, dist, 0.0, BRANCH_STOP, elapsed))
            status = "stationary"
            break
        if k >= config.max_iters:
            trace.append(TraceRecord(k, F, gap, dist, 0.0, BRANCH_STOP, elapsed))
            status = "max_iters"
            break
        if config.time_limit is not None and elapsed >= config.time_limit:
            trace.append(TraceRecord(k, F, gap, dist, 0.0, BRANCH_STOP, elapsed))
            status = "time"
            break

        if config.step_rule == "adaptive":
            alpha = step_size_adaptive(max(gap, 0.0), dist)
        else:
            h_slope = hv - hx  # linear along the segment for the shipped terms
            if isinstance(barrier, WeightedLogBarrier):
                alpha = exact_line_search(barrier.weights, u, du, h_slope)
            elif isinstance(barrier, LogDetBarrier):
                alpha = _exact_step_logdet(problem, u, du, h_slope)
            else:
                raise NotImplementedError(
                    f"no exact line search for barrier {type(barrier).__name__}"
                )
        branch = BRANCH_FULL if alpha >= 1.0 else BRANCH_INTERIOR
        trace.append(TraceRecord(k, F, gap, dist, alpha, branch, elapsed))
        x = (1.0 - alpha) * x + alpha * v
        k += 1
    return SolveResult(x, trace, status)


@dataclass
class BoundReport:
    """Iteration-count ceilings implied by the complexity analysis."""

    k_lin: int
    k_eps: int
    fwgap_eps: int
    delta0: float
    theta: float
    r_h: float
    eps: float
    delta0_source: str = "measured"  # or "g0-surrogate"

    def as_dict(self) -> dict:
        return {
            "K_Lin": self.k_lin,
            "K_eps": self.k_eps,
            "FWGAP_eps": self.fwgap_eps,
            "inputs": {
                "delta0": self.delta0,
                "theta": self.theta,
                "R_h": self.r_h,
                "eps": self.eps,
                "delta0_source": self.delta0_source,
            },
        }


def theorem1_bounds(delta0: float, theta: float, r_h: float, eps: float,
                    delta0_source: str = "measured") -> BoundReport:
    """Ceiling formulas for the linear phase, the gap phase, and the G-phase.

    K_Lin  = ceil(5.3 (delta0 + theta + R_h) ln(10.6 delta0)), floored at 0,
    K_eps  = K_Lin + ceil(12 (theta + R_h)^2 max{1/eps - 1/delta0, 0}),
    FWGAP  = K_Lin + ceil(24 (theta + R_h)^2 / eps).
    """
    if not delta0 > 0.0:
        raise ValueError("delta0 must be positive")
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    if theta < 1.0:
        raise ValueError("theta must be at least 1")
    if r_h < 0.0:
        raise ValueError("R_h must be nonnegative")
    s = theta + r_h
    k_lin = max(0, math.ceil(5.3 * (delta0 + s) * math.log(10.6 * delta0)))
    k_eps = k_lin + math.ceil(12.0 * s * s * max(1.0 / eps - 1.0 / delta0, 0.0))
    fwgap = k_lin + math.ceil(24.0 * s * s / eps)
    return BoundReport(k_lin, k_eps, fwgap, float(delta0), float(theta), float(r_h),
                       float(eps), delta0_source)


class SequenceHypothesisError(ValueError):
    """The inputs fail the premises of the sequence decay estimate."""


def check_sequence_prop5(d_seq, g_seq, M: float, tol: float = 1e-9) -> bool:
    """Verify the sequence decay estimate on paired gap/progress sequences.

    Hypotheses (checked up to ``tol`` slack since they usually come from
    measured traces; violation raises :class:`SequenceHypothesisError` so it
    cannot be confused with a failed conclusion): d_{j+1} <= d_j - g_j^2 / M
    and g_j >= d_j >= 0.  Returns True iff d_j <= M / (j + M/d_0) at every
    index and min{g_0..g_j} < 2M/j for every j >= 1, both up to a fixed
    rounding-level slack of 1e-9 (1 + d_0).
    """
    d = np.asarray(d_seq, dtype=np.float64)
    g = np.asarray(g_seq, dtype=np.float64)
    if d.shape != g.shape or d.ndim != 1 or d.size == 0:
        raise ValueError("need two nonempty sequences of equal length")
    if not M > 0.0:
        raise ValueError("M must be positive")
    if np.any(d < -tol) or np.any(g < -tol):
        raise SequenceHypothesisError("sequences must be nonnegative")
    slack = tol * (1.0 + np.abs(d))
    if np.any(g < d - slack):
        raise SequenceHypothesisError("g_j >= d_j fails")
    if np.any(d[1:] > d[:-1] - g[:-1] ** 2 / M + slack[:-1]):
        raise SequenceHypothesisError("d_{j+1} <= d_j - g_j^2/M fails")

    d0 = float(d[0])
    conc_slack = 1e-9 * (1.0 + abs(d0))
    j = np.arange(d.size, dtype=np.float64)
    if d0 <= 0.0:
        bound = np.zeros(d.size)
    else:
        bound = M / (j + M / d0)
    if np.any(d > bound * (1.0 + 1e-12) + conc_slack):
        return False
    running_min = np.minimum.accumulate(g)
    if d.size > 1 and np.any(running_min[1:] >= 2.0 * M / j[1:] + conc_slack):
        return False
    return True


def check_improvement_omega_star(trace: list[TraceRecord], tol: float = 1e-9) -> bool:
    """Each interior step must gain at least omega_star(G_k / D_k) - tol."""
    for prev, cur in zip(trace, trace[1:]):
        if prev.alpha < 1.0 and prev.alpha > 0.0 and prev.D > 0.0:
            if prev.F - cur.F < omega_star(prev.G / prev.D) - tol:
                return False
    return True


def format_float(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def trace_to_csv_lines(trace: list[TraceRecord]):
    yield TRACE_HEADER
    for r in trace:
        yield ",".join(
            (
                str(r.k),
                format_float(r.F),
                format_float(r.G),
                format_float(r.D),
                format_float(r.alpha),
                r.branch,
                format_float(r.elapsed * 1e3),
            )
        )


def write_trace_csv(trace: list[TraceRecord], path) -> None:
    from .ioutils import atomic_write_text

    atomic_write_text(path, "\n".join(trace_to_csv_lines(trace)) + "\n")
