"""Safeguarded univariate root finding and golden-section minimization."""

from __future__ import annotations

import math

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def newton_bisection(f, fprime, lo: float, hi: float, *, abs_tol: float, width_tol: float,
                     max_iter: int = 200) -> float:
    """Root of an increasing function on [lo, hi] with f(lo) <= 0 <= f(hi).

    Newton iterations are kept inside the current bracket; any step leaving
    it, or making insufficient progress, falls back to bisection.  Stops when
    |f| <= abs_tol or the bracket width drops below width_tol.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo > 0.0 or fhi < 0.0:
        raise ValueError("endpoints do not bracket a root of the increasing function")
    if abs(flo) <= abs_tol:
        return lo
    if abs(fhi) <= abs_tol:
        return hi
    t = 0.5 * (lo + hi)
    for _ in range(max_iter):
        ft = f(t)
        if abs(ft) <= abs_tol:
            return t
        if ft > 0.0:
            hi = t
        else:
            lo = t
        if hi - lo <= width_tol:
            return 0.5 * (lo + hi)
        d = fprime(t)
        t_newton = t - ft / d if d > 0.0 else math.inf
        if lo < t_newton < hi:
            t = t_newton
        else:
            t = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def golden_section(phi, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 400) -> float:
    """Argmin of a unimodal function on [lo, hi] to bracket width ``tol``."""
    if hi < lo:
        raise ValueError("empty interval")
    a, b = lo, hi
    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1 = phi(x1)
    f2 = phi(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_GOLDEN * (b - a)
            f1 = phi(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_GOLDEN * (b - a)
            f2 = phi(x2)
    return 0.5 * (a + b)
