"""Frank-Wolfe solvers for composite objectives with barrier-type smooth parts.

The package bundles the barrier calculus, linear operators, nonsmooth terms
with exact linear minimization oracles, the adaptive and exact-step solvers
with their complexity-bound calculators, an equivalent dual mirror-descent
loop, baseline methods, seeded instance generators, and the verification
oracles used by the test suite and the command line tool.
"""

from .barriers import (
    BarrierDomainError,
    BarrierFunction,
    LocalNorm,
    LogDetBarrier,
    WeightedLogBarrier,
    omega,
    omega_star,
)
from .composite import (
    BoxLinearTerm,
    CompositeProblem,
    KnapsackBoxIndicator,
    LmoResult,
    NonsmoothTerm,
    SimplexIndicator,
    variation_bound,
)
from .dual import MdResult, dual_iterate_from_primal, dual_objective, solve_md_standalone
from .linmaps import DenseMatrixMap, IdentityMap, LinearMap, RankOneSumMap, SparseMatrixMap
from .solver import (
    BoundReport,
    SequenceHypothesisError,
    SolveResult,
    SolverConfig,
    TraceRecord,
    check_sequence_prop5,
    exact_line_search,
    solve_fw,
    step_size_adaptive,
    theorem1_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "BarrierDomainError",
    "BarrierFunction",
    "BoundReport",
    "BoxLinearTerm",
    "CompositeProblem",
    "DenseMatrixMap",
    "IdentityMap",
    "KnapsackBoxIndicator",
    "LinearMap",
    "LmoResult",
    "LocalNorm",
    "LogDetBarrier",
    "MdResult",
    "NonsmoothTerm",
    "RankOneSumMap",
    "SequenceHypothesisError",
    "SimplexIndicator",
    "SolveResult",
    "SolverConfig",
    "SparseMatrixMap",
    "TraceRecord",
    "WeightedLogBarrier",
    "check_sequence_prop5",
    "dual_iterate_from_primal",
    "dual_objective",
    "exact_line_search",
    "omega",
    "omega_star",
    "solve_fw",
    "solve_md_standalone",
    "step_size_adaptive",
    "theorem1_bounds",
    "variation_bound",
]
