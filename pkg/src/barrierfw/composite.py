"""Composite problems F(x) = f(A x) + h(x) and their linear minimization oracles.

The nonsmooth term ``h`` owns a compact domain and answers exact linear
minimization queries min_x <c, x> + h(x).  Infeasibility of an objective
query is reported as the value ``inf``, never as an exception; boundary
gradients, in contrast, raise :class:`~barrierfw.barriers.BarrierDomainError`.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import NamedTuple

import numpy as np

from .barriers import BarrierFunction, cone_inner
from .linmaps import LinearMap

# Feasibility tolerance on constraint residuals of indicator terms.  Iterates
# are convex combinations of exactly feasible points, so drift is rounding only.
FEAS_TOL = 1e-12


class LmoResult(NamedTuple):
    point: np.ndarray
    h_value: float
    lin_value: float


class NonsmoothTerm(ABC):
    """A proper closed convex term with compact domain and an exact LMO."""

    dim: int

    @abstractmethod
    def value(self, x: np.ndarray) -> float:
        """h(x); returns ``inf`` outside the domain."""

    @abstractmethod
    def lmo(self, c: np.ndarray) -> LmoResult:
        """An exact minimizer of <c, x> + h(x) over the domain."""

    @abstractmethod
    def variation(self) -> float:
        """An exact bound on max |h(x) - h(y)| over the domain."""

    def _check_cost(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.float64)
        if c.shape != (self.dim,):
            raise ValueError(f"cost vector must have shape ({self.dim},), got {c.shape}")
        return c


class SimplexIndicator(NonsmoothTerm):
    """Indicator of the unit simplex; the LMO returns a coordinate vector."""

    def __init__(self, n: int):
        n = int(n)
        if n < 1:
            raise ValueError("dimension must be positive")
        self.dim = n

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            return math.inf
        if abs(float(x.sum()) - 1.0) > FEAS_TOL or float(x.min()) < -FEAS_TOL:
            return math.inf
        return 0.0

    def lmo(self, c) -> LmoResult:
        c = self._check_cost(c)
        i = int(np.argmin(c))  # smallest index wins ties
        v = np.zeros(self.dim)
        v[i] = 1.0
        return LmoResult(v, 0.0, float(c[i]))

    def variation(self) -> float:
        return 0.0


class BoxLinearTerm(NonsmoothTerm):
    """h(x) = xi^T x on the box [0, M] (coordinatewise), +inf outside."""

    def __init__(self, upper, coeff):
        xi = np.ascontiguousarray(coeff, dtype=np.float64)
        if xi.ndim != 1 or xi.size == 0:
            raise ValueError("linear coefficient must be a nonempty vector")
        ub = np.broadcast_to(np.asarray(upper, dtype=np.float64), xi.shape).copy()
        if np.any(ub <= 0.0) or not np.all(np.isfinite(ub)):
            raise ValueError("upper bounds must be positive and finite")
        self.upper = ub
        self.coeff = xi
        self.dim = xi.size

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            return math.inf
        tol = FEAS_TOL * np.maximum(1.0, self.upper)
        if np.any(x < -tol) or np.any(x > self.upper + tol):
            return math.inf
        return float(np.dot(self.coeff, x))

    def lmo(self, c) -> LmoResult:
        c = self._check_cost(c)
        total = c + self.coeff
        v = np.where(total < 0.0, self.upper, 0.0)  # exact ties stay at 0
        return LmoResult(v, float(np.dot(self.coeff, v)), float(np.dot(c, v)))

    def variation(self) -> float:
        return float(np.dot(self.upper, np.abs(self.coeff)))


class KnapsackBoxIndicator(NonsmoothTerm):
    """Indicator of {x in [0,1]^m : t^T x <= tau}; greedy ratio LMO.

    The minimizer of a linear function over this set fills coordinates with
    negative cost in increasing order of cost per unit weight, leaving at
    most one coordinate fractional.
    """

    def __init__(self, weights, budget: float):
        t = np.ascontiguousarray(weights, dtype=np.float64)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("weights must form a nonempty vector")
        if np.any(t < 0.0) or not np.all(np.isfinite(t)):
            raise ValueError("weights must be nonnegative and finite")
        budget = float(budget)
        if not budget > 0.0:
            raise ValueError("budget must be positive")
        self.weights = t
        self.budget = budget
        self.dim = t.size

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            return math.inf
        if np.any(x < -FEAS_TOL) or np.any(x > 1.0 + FEAS_TOL):
            return math.inf
        if float(np.dot(self.weights, x)) > self.budget + FEAS_TOL * max(1.0, self.budget):
            return math.inf
        return 0.0

    def lmo(self, c) -> LmoResult:
        c = self._check_cost(c)
        v = np.zeros(self.dim)
        remaining = self.budget
        negative = np.flatnonzero(c < 0.0)
        free = negative[self.weights[negative] == 0.0]
        v[free] = 1.0  # zero-weight coordinates never consume budget
        paid = negative[self.weights[negative] > 0.0]
        ratios = c[paid] / self.weights[paid]
        for i in paid[np.argsort(ratios, kind="stable")]:
            w = self.weights[i]
            if w <= remaining:
                v[i] = 1.0
                remaining -= w
            else:
                v[i] = remaining / w
                break
        return LmoResult(v, 0.0, float(np.dot(c, v)))

    def variation(self) -> float:
        return 0.0


class CompositeProblem:
    """The triple (barrier f, linear map A, nonsmooth term h) defining F."""

    def __init__(self, barrier: BarrierFunction, linmap: LinearMap, term: NonsmoothTerm):
        if linmap.in_dim != term.dim:
            raise ValueError(
                f"operator input dimension {linmap.in_dim} does not match term dimension {term.dim}"
            )
        if linmap.out_shape != barrier.domain_shape:
            raise ValueError(
                f"operator output shape {linmap.out_shape} does not match barrier domain {barrier.domain_shape}"
            )
        self.barrier = barrier
        self.linmap = linmap
        self.term = term

    @property
    def dim(self) -> int:
        return self.term.dim

    def objective(self, x: np.ndarray) -> float:
        """F(x) = f(A x) + h(x); ``inf`` marks infeasibility."""
        hx = self.term.value(x)
        if not math.isfinite(hx):
            return math.inf
        u = self.linmap.apply(x)
        if not self.barrier.is_interior(u):
            return math.inf
        return self.barrier.value(u) + hx

    def lmo_at(self, x: np.ndarray) -> LmoResult:
        """Linear minimization against the cost c = A* grad f(A x)."""
        u = self.linmap.apply(x)
        g = self.barrier.grad(u)
        return self.term.lmo(self.linmap.apply_adjoint(g))

    def fw_gap(self, x: np.ndarray, v: np.ndarray) -> float:
        """<grad f(Ax), A(x - v)> + h(x) - h(v), an optimality-gap certificate."""
        u = self.linmap.apply(x)
        g = self.barrier.grad(u)
        hx = self.term.value(x)
        hv = self.term.value(v)
        return cone_inner(g, u - self.linmap.apply(np.asarray(v, dtype=np.float64))) + hx - hv

    def local_distance(self, x: np.ndarray, v: np.ndarray) -> float:
        """||A(v - x)||_{A x}, the step length in the local norm at the iterate."""
        u = self.linmap.apply(x)
        w = self.linmap.apply(np.asarray(v, dtype=np.float64)) - u
        return self.barrier.local_norm(u, w)


def variation_bound(term: NonsmoothTerm) -> float:
    """Exact variation of ``h`` over its domain for the shipped terms."""
    return term.variation()
