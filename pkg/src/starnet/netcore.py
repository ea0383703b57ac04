"""Dynamic network containers and the diagonal-free vectorization algebra.

Dyads are ordered column-major with the diagonal skipped: the dyad (i, j)
(0-based, i != j) sits at position ``(n - 1) * j + i - (i > j)``. Every
design matrix and variational update in the package uses this order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def offdiag_mask(n: int) -> np.ndarray:
    """Boolean n x n mask, True off the diagonal."""
    return ~np.eye(n, dtype=bool)


def dyad_index(i: int, j: int, n: int) -> int:
    """Position of dyad (i, j) in a diagonal-free vector (0-based)."""
    if i == j:
        raise ValueError("diagonal entries have no dyad index")
    return (n - 1) * j + i - int(i > j)


def vec_minus_diag(M) -> np.ndarray:
    """Column-stack a square matrix, skipping the diagonal."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    # transposing turns numpy's row-major boolean indexing into column-major order
    return M.T[offdiag_mask(n)]


def unvec_minus_diag(v, n: int) -> np.ndarray:
    """Inverse of :func:`vec_minus_diag`; the diagonal is filled with zeros."""
    v = np.asarray(v)
    if v.shape != (n * (n - 1),):
        raise ValueError(f"expected a vector of length {n * (n - 1)}, got shape {v.shape}")
    out = np.zeros((n, n), dtype=v.dtype)
    out.T[offdiag_mask(n)] = v
    return out


def linear_combination(coeffs, tensor) -> np.ndarray:
    """Sum_l coeffs[l] * tensor[l] for a stack of equal-sized matrices."""
    coeffs = np.asarray(coeffs, dtype=float)
    tensor = np.asarray(tensor, dtype=float)
    if coeffs.ndim != 1 or tensor.ndim != 3 or tensor.shape[0] != coeffs.shape[0]:
        raise ValueError(
            f"{coeffs.shape[0] if coeffs.ndim == 1 else coeffs.shape} coefficients "
            f"for a tensor of shape {tensor.shape}"
        )
    return np.tensordot(coeffs, tensor, axes=1)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DynamicNetwork:
    """Binary adjacency matrices A_0..A_T of a fixed actor set.

    ``matrices`` has shape (T + 1, n, n). Diagonal entries carry no meaning
    and are stored as zero.
    """

    matrices: np.ndarray
    directed: bool = True
    labels: tuple = field(default=())

    def __post_init__(self):
        A = np.asarray(self.matrices)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ValueError(f"expected shape (T+1, n, n), got {A.shape}")
        if A.shape[1] < 2:
            raise ValueError("need at least two actors")
        off = A[:, offdiag_mask(A.shape[1])]
        if not np.all((off == 0) | (off == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        A = A.astype(np.int8)
        A[:, np.arange(A.shape[1]), np.arange(A.shape[1])] = 0
        if not self.directed and not np.array_equal(A, A.transpose(0, 2, 1)):
            raise ValueError("undirected network has asymmetric adjacency matrices")
        object.__setattr__(self, "matrices", _frozen(A))
        labels = tuple(self.labels) if self.labels else tuple(range(1, A.shape[1] + 1))
        if len(labels) != A.shape[1]:
            raise ValueError("label count does not match actor count")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    @property
    def T(self) -> int:
        return self.matrices.shape[0] - 1

    def __getitem__(self, t: int) -> np.ndarray:
        return self.matrices[t]

    def density(self, t: int) -> float:
        return float(vec_minus_diag(self.matrices[t]).mean())


@dataclass(frozen=True)
class CovariateTensor:
    """Dyadic covariates X_{lt}; ``slices`` has shape (T, p1, n, n) for t = 1..T."""

    slices: np.ndarray
    names: tuple = field(default=())

    def __post_init__(self):
        X = np.asarray(self.slices, dtype=float)
        if X.ndim != 4 or X.shape[2] != X.shape[3]:
            raise ValueError(f"expected shape (T, p1, n, n), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("covariates contain missing or non-finite values")
        object.__setattr__(self, "slices", _frozen(X))
        names = tuple(self.names) if self.names else tuple(f"x{l + 1}" for l in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError("covariate name count does not match slice count")
        object.__setattr__(self, "names", names)

    @property
    def T(self) -> int:
        return self.slices.shape[0]

    @property
    def p(self) -> int:
        return self.slices.shape[1]

    @property
    def n(self) -> int:
        return self.slices.shape[2]

    def at(self, t: int) -> np.ndarray:
        """Covariate slices for time t (1-based, matching the network index)."""
        if not 1 <= t <= self.T:
            raise IndexError(f"time {t} outside 1..{self.T}")
        return self.slices[t - 1]

    def check_against(self, network: DynamicNetwork) -> None:
        if self.n != network.n or self.T != network.T:
            raise ValueError(
                f"covariates cover n={self.n}, T={self.T} but the network has "
                f"n={network.n}, T={network.T}"
            )

    @classmethod
    def from_static(cls, mats: Sequence, T: int, names=()) -> "CovariateTensor":
        X = np.asarray(mats, dtype=float)
        return cls(np.broadcast_to(X, (T,) + X.shape).copy(), names)
