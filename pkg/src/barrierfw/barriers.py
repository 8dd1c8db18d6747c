"""Logarithmically homogeneous self-concordant barriers.

Two barrier families are provided: the weighted log barrier on the
positive orthant and the log-determinant barrier on the positive definite
cone.  Both expose value, gradient, Hessian action, the Hessian-induced
local norm, and closed-form conjugates.  The module also houses the
univariate pair ``omega`` / ``omega_star`` that drives the adaptive
step-size and the complexity estimates.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np
from scipy.linalg import cho_solve, solve_triangular


class BarrierDomainError(ValueError):
    """Evaluation was requested outside the interior of the barrier's cone."""


# Below this threshold the log1p forms of omega/omega_star lose relative
# accuracy to cancellation, so a short Taylor tail is used instead.
_SERIES_CUTOFF = 1e-4


def omega(a: float) -> float:
    """omega(a) = -a - ln(1 - a), the upper-bound model inside the unit local ball.

    Defined for a < 1; strictly convex with omega(0) = 0.  Arguments at or
    beyond 1 raise ``BarrierDomainError`` (callers treat the model as +inf
    there).
    """
    a = float(a)
    if not a < 1.0:
        raise BarrierDomainError(f"omega is defined only for a < 1, got {a}")
    if abs(a) < _SERIES_CUTOFF:
        # sum_{k>=2} a^k / k, truncated; error below 1e-16 relative here
        return a * a * (0.5 + a * (1.0 / 3.0 + a * (0.25 + a * 0.2)))
    return -a - math.log1p(-a)


def omega_star(s: float) -> float:
    """omega_star(s) = s - ln(1 + s), the Fenchel conjugate of ``omega``.

    Defined for s > -1; strictly increasing on [0, inf).
    """
    s = float(s)
    if not s > -1.0:
        raise BarrierDomainError(f"omega_star is defined only for s > -1, got {s}")
    if abs(s) < _SERIES_CUTOFF:
        return s * s * (0.5 + s * (-1.0 / 3.0 + s * (0.25 - s * 0.2)))
    return s - math.log1p(s)


def cone_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product on the barrier's ambient space (Frobenius for matrices)."""
    return float(np.vdot(a, b))


class BarrierFunction(ABC):
    """A theta-logarithmically-homogeneous self-concordant barrier.

    Implementations must evaluate exactly on the interior of their cone and
    raise ``BarrierDomainError`` elsewhere, never return a garbage number.
    """

    theta: float
    domain_shape: tuple[int, ...]

    @abstractmethod
    def is_interior(self, u: np.ndarray) -> bool:
        """True iff ``u`` lies in the interior of the cone."""

    def require_interior(self, u: np.ndarray) -> None:
        if not self.is_interior(u):
            raise BarrierDomainError(
                f"{type(self).__name__}: point is not in the cone interior"
            )

    @abstractmethod
    def value(self, u: np.ndarray) -> float: ...

    @abstractmethod
    def grad(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def hess_apply(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        """H(u) w."""

    def hess_quad(self, u: np.ndarray, w: np.ndarray) -> float:
        """<H(u) w, w>, the squared local norm of ``w`` at ``u``."""
        return cone_inner(w, self.hess_apply(u, w))

    def local_norm(self, u: np.ndarray, w: np.ndarray) -> float:
        return math.sqrt(max(self.hess_quad(u, w), 0.0))

    # Conjugate calculus; available in closed form for both shipped families.
    @abstractmethod
    def conjugate_value(self, y: np.ndarray) -> float: ...

    @abstractmethod
    def conjugate_grad(self, y: np.ndarray) -> np.ndarray: ...


class WeightedLogBarrier(BarrierFunction):
    """f(u) = -sum_j w_j ln(u_j) on u > 0, with weights w_j >= 1.

    theta = sum_j w_j.  The Hessian is diagonal with entries w_j / u_j^2, and
    the conjugate gradient is y -> -w/y on y < 0.
    """

    def __init__(self, weights):
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-D array")
        if not np.all(np.isfinite(w)) or np.any(w < 1.0):
            raise ValueError("weights must be finite and >= 1")
        self.weights = w
        self.theta = float(math.fsum(w))
        self.domain_shape = (w.size,)

    def is_interior(self, u: np.ndarray) -> bool:
        u = np.asarray(u)
        return (
            u.shape == self.domain_shape
            and bool(np.all(np.isfinite(u)))
            and bool(np.all(u > 0.0))
        )

    def value(self, u: np.ndarray) -> float:
        self.require_interior(u)
        # fsum keeps the rounding error of the objective near one ulp of the
        # largest term, which per-iteration descent checks rely on
        return -math.fsum(self.weights * np.log(u))

    def grad(self, u: np.ndarray) -> np.ndarray:
        self.require_interior(u)
        return -self.weights / np.asarray(u, dtype=np.float64)

    def hess_apply(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        self.require_interior(u)
        u = np.asarray(u, dtype=np.float64)
        return self.weights * np.asarray(w, dtype=np.float64) / (u * u)

    def hess_quad(self, u: np.ndarray, w: np.ndarray) -> float:
        self.require_interior(u)
        r = np.asarray(w, dtype=np.float64) / np.asarray(u, dtype=np.float64)
        return float(np.dot(self.weights, r * r))

    def conjugate_value(self, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=np.float64)
        self._require_negative(y)
        return math.fsum(self.weights * np.log(self.weights / (-y))) - self.theta

    def conjugate_grad(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        self._require_negative(y)
        return -self.weights / y

    def _require_negative(self, y: np.ndarray) -> None:
        if y.shape != self.domain_shape or not np.all(np.isfinite(y)) or np.any(y >= 0.0):
            raise BarrierDomainError(
                "conjugate of the weighted log barrier requires y < 0 componentwise"
            )


class LogDetBarrier(BarrierFunction):
    """f(U) = -ln det(U) on symmetric positive definite U of order n; theta = n.

    Each evaluation refreshes a Cholesky factorization from scratch; callers
    needing incremental inverse maintenance should use the rank-one update
    machinery in :mod:`barrierfw.instances`.
    """

    # Relative asymmetry beyond this is treated as outside the domain.
    _SYM_TOL = 1e-10

    def __init__(self, n: int):
        n = int(n)
        if n < 1:
            raise ValueError("matrix order must be positive")
        self.n = n
        self.theta = float(n)
        self.domain_shape = (n, n)

    def _cholesky(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if u.shape != self.domain_shape or not np.all(np.isfinite(u)):
            raise BarrierDomainError("expected a finite symmetric matrix of the declared order")
        scale = max(1.0, float(np.abs(u).max()))
        if float(np.abs(u - u.T).max()) > self._SYM_TOL * scale:
            raise BarrierDomainError("matrix argument is not symmetric")
        try:
            return np.linalg.cholesky(0.5 * (u + u.T))
        except np.linalg.LinAlgError as exc:
            raise BarrierDomainError("matrix argument is not positive definite") from exc

    def is_interior(self, u: np.ndarray) -> bool:
        try:
            self._cholesky(u)
        except BarrierDomainError:
            return False
        return True

    def value(self, u: np.ndarray) -> float:
        chol = self._cholesky(u)
        return -2.0 * math.fsum(np.log(np.diag(chol)))

    def grad(self, u: np.ndarray) -> np.ndarray:
        chol = self._cholesky(u)
        inv = cho_solve((chol, True), np.eye(self.n))
        return -0.5 * (inv + inv.T)

    def hess_apply(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        chol = self._cholesky(u)
        w = np.asarray(w, dtype=np.float64)
        m = cho_solve((chol, True), cho_solve((chol, True), w).T).T
        return 0.5 * (m + m.T)

    def hess_quad(self, u: np.ndarray, w: np.ndarray) -> float:
        # <H(U)W, W> = ||L^{-1} W L^{-T}||_F^2 for symmetric W, U = L L^T
        chol = self._cholesky(u)
        w = np.asarray(w, dtype=np.float64)
        s = solve_triangular(chol, w, lower=True)
        t = solve_triangular(chol, s.T, lower=True)
        return float(np.sum(t * t))

    def conjugate_value(self, y: np.ndarray) -> float:
        # f*(Y) = -ln det(-Y) - n on Y negative definite
        try:
            chol = self._cholesky(-np.asarray(y, dtype=np.float64))
        except BarrierDomainError as exc:
            raise BarrierDomainError(
                "conjugate of the log-det barrier requires -Y positive definite"
            ) from exc
        return -2.0 * math.fsum(np.log(np.diag(chol))) - self.n

    def conjugate_grad(self, y: np.ndarray) -> np.ndarray:
        try:
            chol = self._cholesky(-np.asarray(y, dtype=np.float64))
        except BarrierDomainError as exc:
            raise BarrierDomainError(
                "conjugate of the log-det barrier requires -Y positive definite"
            ) from exc
        inv = cho_solve((chol, True), np.eye(self.n))
        return 0.5 * (inv + inv.T)


class LocalNorm:
    """The Hessian-induced norm ||.||_u anchored at a fixed interior point."""

    def __init__(self, barrier: BarrierFunction, anchor: np.ndarray):
        barrier.require_interior(anchor)
        self.barrier = barrier
        self.anchor = np.array(anchor, dtype=np.float64, copy=True)

    def __call__(self, w: np.ndarray) -> float:
        return self.barrier.local_norm(self.anchor, w)

    def squared(self, w: np.ndarray) -> float:
        return self.barrier.hess_quad(self.anchor, w)
