"""Seeded problem generators, starting points, and the design fast path.

Three instance families are produced from the pinned generator in
:mod:`barrierfw.rng`: Poisson tomography likelihoods over the simplex,
log-det design problems (optionally with a knapsack relaxation), and
empirical log-investment problems.  Instances serialize to JSON losslessly
and rebuild into :class:`~barrierfw.composite.CompositeProblem` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .barriers import LogDetBarrier, WeightedLogBarrier
from .composite import CompositeProblem, KnapsackBoxIndicator, SimplexIndicator
from .ioutils import atomic_write_json, read_json
from .linmaps import DenseMatrixMap, RankOneSumMap, SparseMatrixMap
from .rng import GENERATOR_NAME, GENERATOR_VERSION, SeededRng

SCHEMA_VERSION = f"{GENERATOR_NAME}/{GENERATOR_VERSION}"


@dataclass
class PetInstance:
    """Simulated emission-count data: sparse detection matrix plus bin counts."""

    n: int                  # voxels
    m: int                  # bins kept after pruning zero-count bins
    P: sp.csr_matrix        # n-by-m detection probabilities, rows sum to 1 pre-pruning
    counts: np.ndarray      # kept bin counts, all >= 1
    seed: int
    x_true: np.ndarray      # simulated voxel intensities (reference only)
    subseed: int = 0        # regeneration offset used when a draw degenerated
    m_requested: int = 0

    @property
    def theta(self) -> float:
        return float(self.counts.sum())


@dataclass
class DoptInstance:
    points: np.ndarray      # m points in R^n, full affine hull
    seed: int
    tbar: np.ndarray | None = None
    tau: float | None = None
    subseed: int = 0

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def m(self) -> int:
        return self.points.shape[0]


@dataclass
class LogInvestInstance:
    returns: np.ndarray     # m gross-return vectors in R^n, entrywise positive
    probs: np.ndarray       # empirical outcome weights in the open simplex
    rescale: float          # 1 / min(probs); scaled weights are all >= 1
    seed: int

    @property
    def n(self) -> int:
        return self.returns.shape[1]

    @property
    def m(self) -> int:
        return self.returns.shape[0]


def gen_pet(n: int, m: int, seed: int) -> PetInstance:
    """Detection matrix at 5% row sparsity, Poisson intensities near 100.

    Each voxel selects floor(m/20) bins without replacement, receives
    uniform weights normalized to sum 1, and intensity |N(100, sd 3)|.
    Simulated counts pass through the detection matrix and a second Poisson
    stage; zero-count bins are dropped.  A fully degenerate draw (all counts
    zero) regenerates under an incremented sub-seed, recorded on the result.
    """
    n, m = int(n), int(m)
    if n < 20 or m < 20:
        raise ValueError("need n, m >= 20 so each voxel reaches at least one bin")
    per_voxel = m // 20
    for subseed in range(64):
        rng = SeededRng(seed + subseed)
        indptr = np.zeros(n + 1, dtype=np.int64)
        indices = np.empty(n * per_voxel, dtype=np.int64)
        values = np.empty(n * per_voxel, dtype=np.float64)
        for i in range(n):
            cols = rng.choice_without_replacement(m, per_voxel)
            raw = rng.uniform(size=per_voxel)
            lo = i * per_voxel
            indices[lo:lo + per_voxel] = cols
            values[lo:lo + per_voxel] = raw / raw.sum()
            indptr[i + 1] = lo + per_voxel
        x_true = np.abs(rng.normal(100.0, 3.0, size=n))
        emitted = rng.poisson_array(x_true).astype(np.float64)
        P = sp.csr_matrix((values, indices, indptr), shape=(n, m))
        bin_means = P.T @ emitted
        counts = rng.poisson_array(bin_means)
        keep = np.flatnonzero(counts >= 1)
        if keep.size == 0:
            continue
        pruned = sp.csr_matrix(P[:, keep])
        pruned.sort_indices()
        return PetInstance(
            n=n, m=int(keep.size), P=pruned, counts=counts[keep].astype(np.int64),
            seed=int(seed), x_true=x_true, subseed=subseed, m_requested=m,
        )
    raise RuntimeError("all generated bins were empty for 64 consecutive sub-seeds")


def pet_start_center(inst: PetInstance) -> np.ndarray:
    return np.full(inst.n, 1.0 / inst.n)


def pet_start_boundary(inst: PetInstance) -> np.ndarray:
    """A near-boundary interior start supported on a greedy bin cover.

    Voxels are added by descending count of still-uncovered bins (ties to
    the smaller index) until every bin sees positive mass; everything off
    the cover gets 1e-6/n.
    """
    pt = inst.P.T.tocsr()  # bins by voxels
    if np.diff(pt.indptr).min() == 0:
        raise ValueError("instance invalid: a kept bin has no positive detection weight")
    covered = np.zeros(inst.m, dtype=bool)
    cover: list[int] = []
    col_hits = inst.P.copy()
    col_hits.data = np.ones_like(col_hits.data)
    while not covered.all():
        gains = col_hits @ (~covered).astype(np.float64)
        i = int(np.argmax(gains))
        if gains[i] <= 0.0:
            raise ValueError("instance invalid: greedy cover cannot reach every bin")
        cover.append(i)
        row = inst.P.getrow(i)
        covered[row.indices] = True
    small = 1e-6 / inst.n
    z = np.full(inst.n, small)
    bulk = (1.0 - (inst.n - len(cover)) * small) / len(cover)
    z[np.array(cover)] = bulk
    return z


def gen_dopt(n: int, m: int, seed: int, knapsack: bool = False) -> DoptInstance:
    """Standard normal points (full rank almost surely); optional budget data."""
    n, m = int(n), int(m)
    if m <= n:
        raise ValueError("need more points than dimensions")
    for subseed in range(64):
        rng = SeededRng(seed + subseed)
        points = rng.normal(size=n * m).reshape(m, n)
        tbar = None
        tau = None
        if knapsack:
            tbar = rng.uniform(0.5, 1.5, size=m)
            tau = m / 4.0
        if np.linalg.matrix_rank(points) == n:
            return DoptInstance(points=points, seed=int(seed), tbar=tbar, tau=tau,
                                subseed=subseed)
    raise RuntimeError("could not draw a full-rank point set in 64 attempts")


def gen_log_invest(n: int, m: int, seed: int) -> LogInvestInstance:
    """Gross returns uniform on [0.5, 1.5]; outcome weights uniform on the simplex."""
    n, m = int(n), int(m)
    if n < 2 or m < 2:
        raise ValueError("need at least two assets and two outcomes")
    rng = SeededRng(seed)
    returns = rng.uniform(0.5, 1.5, size=m * n).reshape(m, n)
    probs = rng.simplex_uniform(m)
    rescale = 1.0 / float(probs.min())
    return LogInvestInstance(returns=returns, probs=probs, rescale=rescale, seed=int(seed))


def pet_problem(inst: PetInstance) -> CompositeProblem:
    return CompositeProblem(
        WeightedLogBarrier(inst.counts.astype(np.float64)),
        SparseMatrixMap(inst.P.T),
        SimplexIndicator(inst.n),
    )


def dopt_problem(inst: DoptInstance) -> CompositeProblem:
    if inst.tbar is None:
        term = SimplexIndicator(inst.m)
    else:
        term = KnapsackBoxIndicator(inst.tbar, inst.tau)
    return CompositeProblem(LogDetBarrier(inst.n), RankOneSumMap(inst.points), term)


def loginvest_problem(inst: LogInvestInstance) -> CompositeProblem:
    # rescaling by 1/min(probs) makes every weight >= 1 up to rounding
    weights = np.maximum(inst.probs * inst.rescale, 1.0)
    return CompositeProblem(
        WeightedLogBarrier(weights),
        DenseMatrixMap(inst.returns),
        SimplexIndicator(inst.n),
    )


def start_point(inst, kind: str) -> np.ndarray:
    if kind == "ct":
        if isinstance(inst, PetInstance):
            return pet_start_center(inst)
        if isinstance(inst, DoptInstance):
            if inst.tbar is not None:
                # keep the barycenter-style start inside the budget
                scale = min(1.0, inst.tau / float(inst.tbar.sum()))
                return np.full(inst.m, scale * (1.0 - 1e-9))
            return np.full(inst.m, 1.0 / inst.m)
        if isinstance(inst, LogInvestInstance):
            return np.full(inst.n, 1.0 / inst.n)
        raise TypeError(f"unsupported instance type {type(inst).__name__}")
    if kind == "bd":
        if isinstance(inst, PetInstance):
            return pet_start_boundary(inst)
        raise ValueError("the near-boundary start is defined for tomography instances only")
    raise ValueError(f"unknown start kind {kind!r}")


# ---------------------------------------------------------------------------
# serialization


def instance_to_dict(inst) -> dict:
    if isinstance(inst, PetInstance):
        return {
            "type": "pet",
            "seed": inst.seed,
            "generator_version": SCHEMA_VERSION,
            "params": {"n": inst.n, "m": inst.m_requested or inst.m, "subseed": inst.subseed},
            "data": {
                "P": {
                    "rows": inst.n,
                    "cols": inst.m,
                    "indptr": inst.P.indptr.tolist(),
                    "indices": inst.P.indices.tolist(),
                    "values": inst.P.data.tolist(),
                },
                "counts": inst.counts.tolist(),
                "x_true": inst.x_true.tolist(),
            },
        }
    if isinstance(inst, DoptInstance):
        return {
            "type": "dopt",
            "seed": inst.seed,
            "generator_version": SCHEMA_VERSION,
            "params": {"n": inst.n, "m": inst.m, "subseed": inst.subseed,
                       "knapsack": inst.tbar is not None},
            "data": {
                "points": inst.points.tolist(),
                "tbar": None if inst.tbar is None else inst.tbar.tolist(),
                "tau": inst.tau,
            },
        }
    if isinstance(inst, LogInvestInstance):
        return {
            "type": "loginvest",
            "seed": inst.seed,
            "generator_version": SCHEMA_VERSION,
            "params": {"n": inst.n, "m": inst.m},
            "data": {
                "returns": inst.returns.tolist(),
                "probs": inst.probs.tolist(),
                "rescale": inst.rescale,
            },
        }
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


def instance_from_dict(doc: dict):
    kind = doc.get("type")
    data = doc["data"]
    if kind == "pet":
        pmat = data["P"]
        P = sp.csr_matrix(
            (np.asarray(pmat["values"], dtype=np.float64),
             np.asarray(pmat["indices"], dtype=np.int64),
             np.asarray(pmat["indptr"], dtype=np.int64)),
            shape=(pmat["rows"], pmat["cols"]),
        )
        return PetInstance(
            n=pmat["rows"], m=pmat["cols"], P=P,
            counts=np.asarray(data["counts"], dtype=np.int64),
            seed=doc["seed"], x_true=np.asarray(data["x_true"], dtype=np.float64),
            subseed=doc["params"].get("subseed", 0),
            m_requested=doc["params"].get("m", pmat["cols"]),
        )
    if kind == "dopt":
        tbar = data.get("tbar")
        return DoptInstance(
            points=np.asarray(data["points"], dtype=np.float64),
            seed=doc["seed"],
            tbar=None if tbar is None else np.asarray(tbar, dtype=np.float64),
            tau=data.get("tau"),
            subseed=doc["params"].get("subseed", 0),
        )
    if kind == "loginvest":
        return LogInvestInstance(
            returns=np.asarray(data["returns"], dtype=np.float64),
            probs=np.asarray(data["probs"], dtype=np.float64),
            rescale=float(data["rescale"]),
            seed=doc["seed"],
        )
    raise ValueError(f"unknown instance type {kind!r}")


def save_instance(inst, path) -> None:
    atomic_write_json(path, instance_to_dict(inst))


def load_instance(path):
    return instance_from_dict(read_json(path))


def problem_for(inst) -> CompositeProblem:
    if isinstance(inst, PetInstance):
        return pet_problem(inst)
    if isinstance(inst, DoptInstance):
        return dopt_problem(inst)
    if isinstance(inst, LogInvestInstance):
        return loginvest_problem(inst)
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


# ---------------------------------------------------------------------------
# design fast path: rank-one maintenance of the inverse information matrix


class DoptFastState:
    """Per-iteration O(n^2 + mn) bookkeeping for simplex design problems.

    Maintains B = (C diag(x) C^T)^{-1} and the diagonal of Q = C^T B C under
    vertex steps x <- (1-alpha) x + alpha e_i via the rank-one inverse update,
    refactorizing densely on a fixed cadence and whenever positive
    definiteness is numerically in doubt.
    """

    def __init__(self, points, x0, refactor_every: int = 50):
        self.C = np.ascontiguousarray(np.asarray(points, dtype=np.float64).T)
        self.n, self.m = self.C.shape
        x = np.array(x0, dtype=np.float64, copy=True)
        if x.shape != (self.m,) or np.any(x < 0.0):
            raise ValueError("x0 must be a nonnegative vector over the points")
        self.x = x
        self.refactor_every = int(refactor_every)
        self.steps_since_refactor = 0
        self.refactor_count = 0
        self.last_index: int | None = None
        self.B = np.zeros((self.n, self.n))
        self.qdiag = np.zeros(self.m)
        self.refactorize()

    def refactorize(self) -> None:
        M = (self.C * self.x) @ self.C.T
        try:
            chol = np.linalg.cholesky(M)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError("information matrix lost positive definiteness") from exc
        inv = np.linalg.inv(chol)
        B = inv.T @ inv
        self.B = 0.5 * (B + B.T)
        S = self.B @ self.C
        self.qdiag = np.einsum("ij,ij->j", self.C, S)
        self.steps_since_refactor = 0
        self.refactor_count += 1

    def gradient(self) -> np.ndarray:
        """Objective gradient entries, -q_i."""
        return -self.qdiag

    def hessian_diag(self) -> np.ndarray:
        return self.qdiag ** 2

    def fw_gap(self, i: int | None = None) -> float:
        i = int(np.argmax(self.qdiag)) if i is None else i
        return float(np.dot(self.x, self.qdiag[i] - self.qdiag))

    def local_distance(self, i: int) -> float:
        q = float(self.qdiag[i])
        return math.sqrt(max(self.n - 2.0 * q + q * q, 0.0))

    def best_index(self) -> int:
        return int(np.argmax(self.qdiag))

    def step(self, i: int, alpha: float) -> None:
        """Move toward vertex i and refresh B and diag(Q) in O(n^2 + mn)."""
        if not 0.0 <= alpha < 1.0:
            raise ValueError("vertex steps require alpha in [0, 1)")
        i = int(i)
        if alpha == 0.0:
            self.last_index = i
            return
        q = float(self.qdiag[i])
        beta = alpha / (1.0 - alpha)
        w = self.B @ self.C[:, i]
        s = self.C.T @ w
        self.qdiag = (self.qdiag - s * s / (1.0 / beta + q)) / (1.0 - alpha)
        coef = beta / (1.0 + beta * q)
        self.B = (self.B - coef * np.outer(w, w)) / (1.0 - alpha)
        self.x *= 1.0 - alpha
        self.x[i] += alpha
        self.last_index = i
        self.steps_since_refactor += 1
        if self.qdiag[i] <= 0.0 or not np.isfinite(self.qdiag[i]):
            self.refactorize()
            if self.qdiag[i] <= 0.0 or not np.isfinite(self.qdiag[i]):
                raise RuntimeError("fast path inconsistent after dense refactorization")
        elif self.steps_since_refactor >= self.refactor_every:
            self.refactorize()


def dopt_fast_iterate(state: DoptFastState, i: int | None = None,
                      rule: str = "adaptive") -> tuple[int, float, float, float]:
    """One Frank-Wolfe iteration through the fast state.

    Returns (chosen index, gap, local distance, step size).  The exact rule
    minimizes the one-dimensional restriction
    zeta(alpha) = -n ln(1-alpha) - ln(1 + alpha (q-1)/(1-alpha) ...) through a
    safeguarded Newton iteration on its strictly increasing derivative.
    """
    i = state.best_index() if i is None else int(i)
    gap = state.fw_gap(i)
    dist = state.local_distance(i)
    q = float(state.qdiag[i])
    n = state.n
    if rule == "adaptive":
        alpha = 1.0 if dist == 0.0 else min(gap / (dist * (gap + dist)), 1.0)
        alpha = min(alpha, 1.0 - 1e-12)
    elif rule == "exact":
        # the restriction is zeta(a) = -(n-1) ln(1-a) - ln(1-a+a*q) up to a constant
        def dphi(a: float) -> float:
            return (n - 1.0) / (1.0 - a) - (q - 1.0) / (1.0 - a + a * q)

        def d2phi(a: float) -> float:
            return (n - 1.0) / (1.0 - a) ** 2 + ((q - 1.0) / (1.0 - a + a * q)) ** 2

        hi = 1.0 - 1e-12
        if dphi(0.0) >= 0.0:
            alpha = 0.0
        elif dphi(hi) <= 0.0:
            alpha = hi
        else:
            from .rootfind import newton_bisection

            alpha = newton_bisection(dphi, d2phi, 0.0, hi, abs_tol=1e-12 * n,
                                     width_tol=1e-15)
    else:
        raise ValueError(f"unknown step rule {rule!r}")
    state.step(i, alpha)
    return i, gap, dist, alpha
