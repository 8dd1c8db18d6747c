"""Invariant suites behind the command-line ``verify`` entry point.

Each check returns (name, passed, detail).  The suites reuse the library's
own oracles (finite differences, exhaustive linear minimization, golden
section) so they stay independent of the code paths they certify.
"""

from __future__ import annotations

import math

import numpy as np

from . import oracles
from .barriers import LogDetBarrier, WeightedLogBarrier, omega, omega_star
from .composite import KnapsackBoxIndicator, SimplexIndicator
from .dual import dual_objective, solve_md_standalone
from .instances import (
    DoptFastState,
    DoptInstance,
    gen_dopt,
    gen_pet,
    problem_for,
    start_point,
)
from .solver import SolverConfig, solve_fw, step_size_adaptive, theorem1_bounds

Check = tuple[str, bool, str]


def check_trace_invariants(trace, theta: float, r_h: float,
                           f_ref: float | None = None) -> list[Check]:
    """Row-wise inequalities every solver trace must satisfy."""
    out: list[Check] = []
    big = theta + r_h
    min_g = min(r.G for r in trace)
    out.append(("gap nonnegative", min_g >= 0.0, f"min G = {min_g:.3e}"))
    worst_mono = max((b.F - a.F for a, b in zip(trace, trace[1:])), default=0.0)
    out.append(("objective nonincreasing", worst_mono <= 0.0, f"worst rise = {worst_mono:.3e}"))
    worst_p3 = max(r.D - (r.G + big + 1e-9 * (1.0 + r.G)) for r in trace)
    out.append(("local distance bound", worst_p3 <= 0.0, f"worst slack = {worst_p3:.3e}"))
    worst_omega = 0.0
    for a, b in zip(trace, trace[1:]):
        if a.D > 0.0 and step_size_adaptive(max(a.G, 0.0), a.D) < 1.0:
            worst_omega = max(worst_omega, omega_star(a.G / a.D) - 1e-9 - (a.F - b.F))
    out.append(("per-step model improvement", worst_omega <= 0.0,
                f"worst shortfall = {worst_omega:.3e}"))
    if f_ref is not None:
        deltas = [r.F - f_ref for r in trace]
        d0 = deltas[0]
        worst_lin = -math.inf
        worst_inv = -math.inf
        for i, (a, b) in enumerate(zip(trace, trace[1:])):
            da, db = deltas[i], deltas[i + 1]
            if da <= 0.0 or db <= 0.0:
                continue
            if a.G > big:
                rate = 1.0 - 1.0 / (5.3 * (d0 + big))
                worst_lin = max(worst_lin, db - rate * da - 1e-9 * (1.0 + da))
            else:
                worst_inv = max(worst_inv,
                                (1.0 / (12.0 * big * big) - 1e-9) - (1.0 / db - 1.0 / da))
        out.append(("linear phase contraction", worst_lin <= 0.0,
                    f"worst slack = {worst_lin:.3e}"))
        out.append(("inverse gap growth", worst_inv <= 0.0,
                    f"worst shortfall = {worst_inv:.3e}"))
        if d0 > 0.0:
            klin = sum(1 for r in trace if r.G > big)
            cap = theorem1_bounds(d0, theta, r_h, max(d0, 1e-12)).k_lin
            out.append(("linear phase count", klin <= cap, f"{klin} <= {cap}"))
    return out


def _sampled_interior(rng: np.random.Generator, barrier):
    if isinstance(barrier, WeightedLogBarrier):
        return rng.uniform(0.2, 3.0, size=barrier.domain_shape)
    n = barrier.n
    a = rng.standard_normal((n, n + 2))
    return a @ a.T / (n + 2) + 0.2 * np.eye(n)


def _sampled_direction(rng: np.random.Generator, barrier):
    if isinstance(barrier, WeightedLogBarrier):
        return rng.standard_normal(barrier.domain_shape)
    w = rng.standard_normal((barrier.n, barrier.n))
    return 0.5 * (w + w.T)


def barrier_identity_checks(barrier, probes: int = 100, seed: int = 0) -> list[Check]:
    """Log-homogeneity, gradient identities, the local-ball upper bound, and
    finite-difference agreement, over random interior probes."""
    rng = np.random.default_rng(seed)
    theta = barrier.theta
    worst = {
        "log homogeneity": 0.0,
        "gradient pairing": 0.0,
        "hessian pairing": 0.0,
        "gradient cauchy bound": 0.0,
        "cone norm bound": 0.0,
        "local ball upper bound": 0.0,
        "fd gradient": 0.0,
        "fd hessian quad": 0.0,
    }
    for _ in range(probes):
        u = _sampled_interior(rng, barrier)
        w = _sampled_direction(rng, barrier)
        fu = barrier.value(u)
        gu = barrier.grad(u)
        for t in (0.5, 2.0, 10.0):
            lhs = barrier.value(t * u)
            worst["log homogeneity"] = max(
                worst["log homogeneity"],
                abs(lhs - fu + theta * math.log(t)) / (1e-10 * (1.0 + abs(fu))) - 1.0,
            )
        worst["gradient pairing"] = max(
            worst["gradient pairing"],
            abs(float(np.vdot(gu, u)) + theta) / (1e-10 * theta) - 1.0,
        )
        hw = float(np.vdot(barrier.hess_apply(u, u), w))
        worst["hessian pairing"] = max(
            worst["hessian pairing"],
            abs(float(np.vdot(gu, w)) + hw) / (1e-10 * (1.0 + abs(hw))) - 1.0,
        )
        nw = barrier.local_norm(u, w)
        worst["gradient cauchy bound"] = max(
            worst["gradient cauchy bound"],
            abs(float(np.vdot(gu, w))) - (math.sqrt(theta) * nw + 1e-10),
        )
        v = np.abs(w) if isinstance(barrier, WeightedLogBarrier) else _psd_part(w)
        worst["cone norm bound"] = max(
            worst["cone norm bound"],
            barrier.local_norm(u, v) - (-float(np.vdot(gu, v)) + 1e-10),
        )
        step = w / (2.0 * max(nw, 1e-12))  # local norm 1/2, inside the unit ball
        vball = u + step
        if barrier.is_interior(vball):
            model = fu + float(np.vdot(gu, step)) + omega(barrier.local_norm(u, step))
            worst["local ball upper bound"] = max(
                worst["local ball upper bound"], barrier.value(vball) - model - 1e-9
            )
        if isinstance(barrier, WeightedLogBarrier):
            fd = oracles.fd_gradient(lambda p: barrier.value(p), u)
            worst["fd gradient"] = max(
                worst["fd gradient"],
                float(np.max(np.abs(fd - gu))) / (1e-6 * (1.0 + float(np.max(np.abs(gu))))) - 1.0,
            )
            quad = oracles.fd_quadratic_form(lambda p: barrier.value(p), u, w)
            worst["fd hessian quad"] = max(
                worst["fd hessian quad"],
                abs(quad - barrier.hess_quad(u, w)) / (1e-5 * (1.0 + abs(quad))) - 1.0,
            )
        else:
            # single-entry probes must stay symmetric to remain in the domain
            def as_spd_arg(p):
                mat = p.reshape(barrier.domain_shape)
                return barrier.value(0.5 * (mat + mat.T))

            flat_grad = oracles.fd_gradient(as_spd_arg, u.ravel()).reshape(
                barrier.domain_shape
            )
            worst["fd gradient"] = max(
                worst["fd gradient"],
                float(np.max(np.abs(flat_grad - gu)))
                / (1e-6 * (1.0 + float(np.max(np.abs(gu))))) - 1.0,
            )
            quad = oracles.fd_quadratic_form(as_spd_arg, u.ravel(), w.ravel())
            worst["fd hessian quad"] = max(
                worst["fd hessian quad"],
                abs(quad - barrier.hess_quad(u, w)) / (1e-5 * (1.0 + abs(quad))) - 1.0,
            )
    name = type(barrier).__name__
    return [(f"{name}: {k}", v <= 0.0, f"worst normalized excess = {v:.3e}")
            for k, v in worst.items()]


def _psd_part(w: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(w)
    return (vecs * np.maximum(vals, 0.0)) @ vecs.T


def omega_inequality_checks() -> list[Check]:
    out: list[Check] = []
    s_small = np.linspace(0.0, 0.5, 201)
    ok1 = all(omega_star(s) >= s * s / 3.0 - 1e-15 for s in s_small)
    out.append(("omega_star quadratic lower bound", ok1, "grid [0, 1/2]"))
    s_big = np.linspace(0.5, 100.0, 400)
    ok2 = all(omega_star(s) >= s / 5.3 - 1e-12 for s in s_big)
    out.append(("omega_star linear lower bound", ok2, "grid [1/2, 100]"))
    s_log = np.linspace(-0.99, 0.99, 397)
    ok3 = all(
        math.log1p(s) >= s - s * s / (2.0 * (1.0 - abs(s))) - 1e-12 for s in s_log
    )
    out.append(("log lower bound", ok3, "grid (-0.99, 0.99)"))
    return out


def instance_checks(inst, quick: bool = True) -> list[Check]:
    """Instance-driven battery: a short adaptive run plus family extras."""
    out: list[Check] = []
    problem = problem_for(inst)
    theta = problem.barrier.theta
    r_h = problem.term.variation()
    x0 = start_point(inst, "ct")
    res = solve_fw(problem, x0, SolverConfig(eps=None, max_iters=150 if quick else 500))
    out.extend(check_trace_invariants(res.trace, theta, r_h))
    if isinstance(problem.barrier, WeightedLogBarrier):
        worst = 0.0
        for hist_x in (x0, res.x):
            u = problem.linmap.apply(hist_x)
            y = problem.barrier.grad(u)
            g = problem.fw_gap(hist_x, problem.lmo_at(hist_x).point)
            ident = dual_objective(problem, y) + problem.objective(hist_x)
            worst = max(worst, abs(g - ident) / (1e-8 * (1.0 + abs(g))) - 1.0)
        out.append(("duality gap identity", worst <= 0.0, f"normalized excess {worst:.3e}"))
        y0 = problem.barrier.grad(problem.linmap.apply(x0))
        md = solve_md_standalone(problem, y0, x0, SolverConfig(eps=None, max_iters=60))
        worst_eq = 0.0
        xs = _fw_iterate_path(problem, x0, 60)
        for yk, xk in zip(md.y_history, xs):
            yref = problem.barrier.grad(problem.linmap.apply(xk))
            scale = 1e-9 * (1.0 + float(np.max(np.abs(yk))))
            worst_eq = max(worst_eq, float(np.max(np.abs(yk - yref))) / scale - 1.0)
        out.append(("dual equivalence", worst_eq <= 0.0, f"normalized excess {worst_eq:.3e}"))
    if isinstance(inst, DoptInstance) and inst.tbar is None:
        state = DoptFastState(inst.points, np.full(inst.m, 1.0 / inst.m))
        worst_fast = 0.0
        for _ in range(40 if quick else 200):
            m_dense = (inst.points * state.x[:, None]).T @ inst.points
            qd = np.einsum("ij,jk,ik->i", inst.points, np.linalg.inv(m_dense), inst.points)
            worst_fast = max(worst_fast, float(np.max(np.abs(qd - state.qdiag) / np.abs(qd))))
            from .instances import dopt_fast_iterate

            dopt_fast_iterate(state, rule="adaptive")
        out.append(("rank-one update agreement", worst_fast <= 1e-8,
                    f"worst rel err {worst_fast:.3e}"))
    return out


def _fw_iterate_path(problem, x0, iters: int):
    """The iterate sequence (not just the trace) of an adaptive run."""
    xs = [np.array(x0, dtype=np.float64)]
    x = xs[0].copy()
    for _ in range(iters):
        u = problem.linmap.apply(x)
        g = problem.barrier.grad(u)
        v, hv, _ = problem.term.lmo(problem.linmap.apply_adjoint(g))
        uv = problem.linmap.apply(v)
        gap = float(np.vdot(g, u - uv)) + problem.term.value(x) - hv
        dist = problem.barrier.local_norm(u, uv - u)
        if gap <= 0.0 and dist == 0.0:
            break
        alpha = step_size_adaptive(max(gap, 0.0), dist)
        x = (1.0 - alpha) * x + alpha * v
        xs.append(x.copy())
    return xs


def builtin_suite() -> list[Check]:
    out: list[Check] = []
    out.extend(omega_inequality_checks())
    out.extend(barrier_identity_checks(WeightedLogBarrier(np.array([1.0, 2.5, 4.0])),
                                       probes=25, seed=11))
    out.extend(barrier_identity_checks(LogDetBarrier(3), probes=25, seed=12))

    rng = np.random.default_rng(5)
    term = SimplexIndicator(6)
    knap = KnapsackBoxIndicator(rng.uniform(0.5, 1.5, 6), 2.0)
    worst = 0.0
    for _ in range(200):
        c = rng.standard_normal(6)
        for t in (term, knap):
            mine = t.lmo(c)
            brute = oracles.brute_lmo(t, c)
            worst = max(worst, mine.lin_value + mine.h_value
                        - (float(np.dot(c, brute)) + t.value(brute)))
    out.append(("linear minimization vs enumeration", worst <= 1e-12,
                f"worst excess {worst:.3e}"))

    out.extend(instance_checks(gen_pet(25, 25, 123)))
    out.extend(instance_checks(gen_dopt(4, 12, 321)))
    return out


def run_checks(checks: list[Check], printer=print) -> bool:
    ok = True
    for name, passed, detail in checks:
        printer(f"{'PASS' if passed else 'FAIL'}  {name} ({detail})")
        ok = ok and passed
    return ok
