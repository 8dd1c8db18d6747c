"""Baseline solvers for the simplex-constrained Poisson log-likelihood.

Three methods specialized to L(z) = -sum_j Y_j ln(<p_j, z>) over the unit
simplex: a relatively smooth gradient method with the fixed step 1/Ybar
(L is Ybar-smooth relative to r(z) = -sum ln z_i), the same method with a
backtracking search for the local relative-smoothness constant, and the
multiplicative update of Cover's algorithm.  Traces share the Frank-Wolfe
CSV schema so runs are directly comparable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .solver import BRANCH_STOP, SolveResult, TraceRecord


class PetObjective:
    """Poisson likelihood data: nonnegative detection matrix and counts >= 1."""

    def __init__(self, P, counts):
        if sp.issparse(P):
            mat = sp.csr_matrix(P, dtype=np.float64)
        else:
            mat = sp.csr_matrix(np.asarray(P, dtype=np.float64))
        mat.eliminate_zeros()
        mat.sort_indices()
        y = np.asarray(counts)
        if y.ndim != 1 or y.size != mat.shape[1]:
            raise ValueError("counts must be one value per detector bin")
        if np.any(y < 1) or np.any(y != np.floor(y)):
            raise ValueError("counts must be integers >= 1")
        if mat.nnz and mat.data.min() < 0.0:
            raise ValueError("detection probabilities must be nonnegative")
        self.P = mat  # voxels by bins
        self.counts = y.astype(np.float64)
        self.n, self.m = mat.shape
        self.total = float(self.counts.sum())  # Ybar, the global smoothness constant

    def forward(self, z: np.ndarray) -> np.ndarray:
        return self.P.T @ z

    def value(self, z: np.ndarray) -> float:
        u = self.forward(z)
        if np.any(u <= 0.0):
            return math.inf
        return -math.fsum(self.counts * np.log(u))

    def ascent_grad(self, z: np.ndarray) -> np.ndarray:
        """P (Y / P^T z), the negated gradient of the minimized objective."""
        u = self.forward(z)
        if np.any(u <= 0.0):
            raise ValueError("iterate has a dead bin: <p_j, z> = 0")
        return self.P @ (self.counts / u)

    def bregman_r(self, z_new: np.ndarray, z_old: np.ndarray) -> float:
        """D_r(z_new, z_old) for the reference function r(z) = -sum ln z_i."""
        ratio = z_new / z_old
        return float(np.sum(ratio - np.log(ratio) - 1.0))

    def fw_gap_at(self, z: np.ndarray) -> tuple[float, float, int]:
        """Gap certificate, local distance, and the active vertex at ``z``."""
        u = self.forward(z)
        c = self.P @ (self.counts / u)
        i = int(np.argmax(c))
        gap = float(c[i]) - float(np.dot(c, z))
        col = self.P.getrow(i).toarray().ravel()
        r = col / u - 1.0
        dist = math.sqrt(float(np.dot(self.counts, r * r)))
        return gap, dist, i


def _check_start(obj: PetObjective, z0) -> np.ndarray:
    z = np.array(z0, dtype=np.float64, copy=True)
    if z.shape != (obj.n,) or np.any(z <= 0.0) or abs(float(z.sum()) - 1.0) > 1e-9:
        raise ValueError("start must lie in the relative interior of the simplex")
    return z


def rsgm_step(obj: PetObjective, z: np.ndarray, alpha: float) -> np.ndarray:
    """One Bregman gradient step: argmax <c, z'> - D_r(z', z)/alpha over the simplex.

    Stationarity gives z'_i = 1 / (1/z_i + alpha (lam - c_i)) with the
    multiplier lam fixed by sum_i z'_i = 1; the sum is strictly decreasing in
    lam, so bisection from an expanding bracket pins the unique root.
    """
    if np.any(z <= 0.0):
        raise ValueError("step requires a strictly positive iterate")
    if not alpha > 0.0:
        raise ValueError("step size must be positive")
    c = obj.ascent_grad(z)
    inv_z = 1.0 / z

    lam_min = float(np.max(c - inv_z / alpha))

    def total(lam: float) -> float:
        # strictly decreasing where finite; +inf past the positivity boundary
        den = inv_z + alpha * (lam - c)
        if np.any(den <= 0.0):
            return math.inf
        return float(np.sum(1.0 / den))

    # bracket [lo, hi] with total(lo) > 1 > total(hi); lo may sit at the pole
    lo = lam_min
    span = max(1.0, abs(lam_min))
    hi = max(0.0, lam_min) + span
    for _ in range(200):
        if total(hi) < 1.0:
            break
        hi = lam_min + 2.0 * (hi - lam_min)
    if 0.0 > lam_min and total(0.0) > 1.0:
        lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if total(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
    z_new = 1.0 / (inv_z + alpha * (hi - c))
    s = float(z_new.sum())
    if not math.isfinite(s) or s <= 0.0:
        raise RuntimeError("multiplier search failed to produce a positive point")
    return z_new / s


def em_step(obj: PetObjective, z: np.ndarray) -> np.ndarray:
    """Multiplicative update z_i <- z_i * grad_i Lbar(z) of the normalized likelihood."""
    if np.any(z <= 0.0):
        raise ValueError("step requires a strictly positive iterate")
    u = obj.forward(z)
    if np.any(u <= 0.0):
        raise ValueError("iterate has a dead bin: <p_j, z> = 0")
    ybar = obj.counts / obj.total
    return z * (obj.P @ (ybar / u))


def _record(obj: PetObjective, trace: list[TraceRecord], k: int, z, alpha: float,
            branch: str, t0: float) -> None:
    gap, dist, _ = obj.fw_gap_at(z)
    trace.append(TraceRecord(k, obj.value(z), gap, dist, alpha, branch,
                             time.perf_counter() - t0))


def rsgm_fixed_solve(obj: PetObjective, z0, iters: int) -> SolveResult:
    """Relatively smooth gradient method with the global step 1/Ybar."""
    z = _check_start(obj, z0)
    alpha = 1.0 / obj.total
    trace: list[TraceRecord] = []
    t0 = time.perf_counter()
    for k in range(iters):
        _record(obj, trace, k, z, alpha, "rsgm-fixed", t0)
        z = rsgm_step(obj, z, alpha)
    _record(obj, trace, iters, z, 0.0, BRANCH_STOP, t0)
    return SolveResult(z, trace, "max_iters")


@dataclass
class BacktrackingState:
    accepted: list[float]


def rsgm_backtracking_solve(obj: PetObjective, z0, iters: int,
                            l0: float | None = None) -> tuple[SolveResult, BacktrackingState]:
    """Backtracking variant: per-iterate search for a local smoothness constant.

    Candidates start at max(L_prev / 2, 1) and double until the relative
    smoothness inequality
    L(z+) <= L(z) + <grad L(z), z+ - z> + L_k D_r(z+, z) accepts; the step is
    then 1/L_k.  Never needs more than the global constant Ybar (plus
    rounding), and raises after 60 futile doublings.
    """
    z = _check_start(obj, z0)
    l_prev = obj.total if l0 is None else float(l0)
    trace: list[TraceRecord] = []
    accepted: list[float] = []
    t0 = time.perf_counter()
    for k in range(iters):
        fz = obj.value(z)
        c = obj.ascent_grad(z)
        cand = max(l_prev / 2.0, 1.0)
        z_new = None
        for _ in range(60):
            trial = rsgm_step(obj, z, 1.0 / cand)
            lin = -float(np.dot(c, trial - z))  # <grad L(z), z+ - z>
            rhs = fz + lin + cand * obj.bregman_r(trial, z)
            if obj.value(trial) <= rhs + 1e-12 * (1.0 + abs(fz)):
                z_new = trial
                break
            cand *= 2.0
        if z_new is None:
            raise RuntimeError("backtracking failed to accept within 60 doublings")
        gap, dist, _ = obj.fw_gap_at(z)
        trace.append(TraceRecord(k, fz, gap, dist, 1.0 / cand,
                                 format(cand, ".17g"), time.perf_counter() - t0))
        accepted.append(cand)
        l_prev = cand
        z = z_new
    _record(obj, trace, iters, z, 0.0, BRANCH_STOP, t0)
    return SolveResult(z, trace, "max_iters"), BacktrackingState(accepted)


def em_solve(obj: PetObjective, z0, iters: int) -> SolveResult:
    z = _check_start(obj, z0)
    trace: list[TraceRecord] = []
    t0 = time.perf_counter()
    for k in range(iters):
        _record(obj, trace, k, z, 1.0, "em", t0)
        z = em_step(obj, z)
    _record(obj, trace, iters, z, 0.0, BRANCH_STOP, t0)
    return SolveResult(z, trace, "max_iters")
