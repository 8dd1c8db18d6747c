"""Linear operators with forward and adjoint application.

Dense, CSR-sparse, identity, and rank-one-sum forms are provided.  All maps
validate dimensions at construction; per-call checks only verify argument
shape.  Vector-to-matrix maps (``RankOneSumMap``) use the Frobenius pairing
for the adjoint identity <A x, Y> = <x, A* Y>.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
import scipy.sparse as sp


class LinearMap(ABC):
    """A linear operator from R^in_dim into vectors or symmetric matrices."""

    in_dim: int
    out_shape: tuple[int, ...]

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.in_dim,):
            raise ValueError(f"expected input of shape ({self.in_dim},), got {x.shape}")
        return self._apply(x)

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != self.out_shape:
            raise ValueError(f"expected output-space element of shape {self.out_shape}, got {y.shape}")
        return self._apply_adjoint(y)

    @abstractmethod
    def _apply(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _apply_adjoint(self, y: np.ndarray) -> np.ndarray: ...


class IdentityMap(LinearMap):
    def __init__(self, n: int):
        n = int(n)
        if n < 1:
            raise ValueError("dimension must be positive")
        self.in_dim = n
        self.out_shape = (n,)

    def _apply(self, x):
        return x.copy()

    def _apply_adjoint(self, y):
        return y.copy()


class DenseMatrixMap(LinearMap):
    """x -> M x for a dense m-by-n matrix M."""

    def __init__(self, matrix):
        m = np.ascontiguousarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("matrix must be 2-D and nonempty")
        self.matrix = m
        self.in_dim = m.shape[1]
        self.out_shape = (m.shape[0],)

    def _apply(self, x):
        return self.matrix @ x

    def _apply_adjoint(self, y):
        return self.matrix.T @ y


class SparseMatrixMap(LinearMap):
    """Compressed-sparse-row operator; stored zeros are stripped at construction."""

    def __init__(self, matrix):
        m = sp.csr_matrix(matrix, dtype=np.float64)
        m.eliminate_zeros()
        m.sort_indices()
        if m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError("sparse matrix must be nonempty")
        self.matrix = m
        self.in_dim = m.shape[1]
        self.out_shape = (m.shape[0],)

    @property
    def indptr(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def values(self) -> np.ndarray:
        return self.matrix.data

    def _apply(self, x):
        return self.matrix @ x

    def _apply_adjoint(self, y):
        return self.matrix.T @ y


class RankOneSumMap(LinearMap):
    """x -> sum_i x_i a_i a_i^T for points a_1..a_m in R^d (symmetric output).

    The adjoint sends a symmetric matrix Y to the vector (a_i^T Y a_i)_i.
    """

    def __init__(self, points):
        p = np.ascontiguousarray(points, dtype=np.float64)
        if p.ndim != 2 or p.size == 0:
            raise ValueError("points must form a nonempty m-by-d array")
        self.points = p
        self.in_dim = p.shape[0]
        d = p.shape[1]
        self.out_shape = (d, d)

    def _apply(self, x):
        s = (self.points * x[:, None]).T @ self.points
        return 0.5 * (s + s.T)

    def _apply_adjoint(self, y):
        # a_i^T Y a_i for every i without forming Y a_i twice
        return np.einsum("ij,ij->i", self.points @ y, self.points)
