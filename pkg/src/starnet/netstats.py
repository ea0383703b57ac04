"""Lagged-network statistics, covariance bases and GLMM design matrices."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .netcore import offdiag_mask

DIRECTED_STATS = (
    "out_degree",
    "in_degree",
    "stability",
    "reciprocity",
    "transitivity1",
    "transitivity2",
    "transitivity3",
    "cycle",
)
UNDIRECTED_STATS = ("degree", "stability", "triangle")


@dataclass(frozen=True)
class LagStatTensor:
    slices: np.ndarray  # (p2, n, n)
    labels: tuple

    @property
    def p(self) -> int:
        return self.slices.shape[0]


@dataclass(frozen=True)
class CovarianceBases:
    """PSD matrices whose weighted sums give the sender/receiver covariances."""

    H_s: list
    H_r: list
    H_sr: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.H_s[0].shape[0]


def _clean(A) -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square adjacency matrix, got shape {A.shape}")
    if A.shape[0] < 2:
        raise ValueError("need at least two actors")
    np.fill_diagonal(A, 0.0)
    return A


def _require_symmetric(A: np.ndarray) -> None:
    if not np.array_equal(A, A.T):
        raise ValueError("undirected statistics need a symmetric adjacency matrix")


def build_lag_stats_directed(A_prev, selection=DIRECTED_STATS, lag: int = 1) -> LagStatTensor:
    """Directed mean-function slices computed from one lagged network.

    ``selection`` keeps the canonical order of :data:`DIRECTED_STATS` as given;
    labels carry a ``_lag{k}`` suffix for lags deeper than one.
    """
    unknown = [s for s in selection if s not in DIRECTED_STATS]
    if unknown:
        raise ValueError(f"unknown directed statistic(s): {unknown}")
    A = _clean(A_prev)
    n = A.shape[0]
    J = np.ones((n, n))
    builders = {
        "out_degree": lambda: A @ J,
        "in_degree": lambda: J @ A,
        "stability": lambda: A,
        "reciprocity": lambda: A.T,
        "transitivity1": lambda: A @ A,
        "transitivity2": lambda: A @ A.T,
        "transitivity3": lambda: A.T @ A,
        "cycle": lambda: A.T @ A.T,
    }
    slices = np.stack([builders[s]() for s in selection]) if selection else np.zeros((0, n, n))
    return LagStatTensor(slices, _labels(selection, lag))


def build_lag_stats_undirected(A_prev, selection=UNDIRECTED_STATS, lag: int = 1) -> LagStatTensor:
    unknown = [s for s in selection if s not in UNDIRECTED_STATS]
    if unknown:
        raise ValueError(f"unknown undirected statistic(s): {unknown}")
    A = _clean(A_prev)
    _require_symmetric(A)
    n = A.shape[0]
    J = np.ones((n, n))
    builders = {
        "degree": lambda: A @ J + J @ A,
        "stability": lambda: A,
        "triangle": lambda: A @ A,
    }
    slices = np.stack([builders[s]() for s in selection]) if selection else np.zeros((0, n, n))
    return LagStatTensor(slices, _labels(selection, lag))


def _labels(selection, lag: int) -> tuple:
    return tuple(s if lag == 1 else f"{s}_lag{lag}" for s in selection)


def _normalized_gram(B: np.ndarray) -> np.ndarray:
    # D^{-1/2} B B' D^{-1/2} with D the row sums of B (B has a unit diagonal, so D > 0)
    d = B.sum(axis=1)
    G = (B @ B.T) / np.sqrt(np.outer(d, d))
    G = 0.5 * (G + G.T)
    np.fill_diagonal(G, 1.0)
    return G


def build_H_directed(A_prev) -> CovarianceBases:
    """Identity plus degree-normalized shared-neighbour bases.

    The lagged adjacency gets a unit diagonal before the Gram products so no
    degree is zero; the resulting sender/receiver bases are correlation
    matrices.
    """
    A = _clean(A_prev)
    n = A.shape[0]
    Abar = A + np.eye(n)
    I = np.eye(n)
    return CovarianceBases(H_s=[I, _normalized_gram(Abar)], H_r=[I, _normalized_gram(Abar.T)], H_sr=[I])


def build_H_undirected(A_prev) -> CovarianceBases:
    A = _clean(A_prev)
    _require_symmetric(A)
    Abar = A + np.eye(A.shape[0])
    H = _normalized_gram(Abar)
    return CovarianceBases(H_s=[H], H_r=[], H_sr=[])


def identity_bases(n: int, directed: bool = True) -> CovarianceBases:
    I = np.eye(n)
    if directed:
        return CovarianceBases(H_s=[I], H_r=[I], H_sr=[I])
    return CovarianceBases(H_s=[I], H_r=[], H_sr=[])


def build_MR(n: int) -> np.ndarray:
    """n^2 x n^2 permutation-like matrix mapping vec(M) to vec(M') off the diagonal."""
    if n < 2:
        raise ValueError("need at least two actors")
    M = np.zeros((n * n, n * n), dtype=np.int8)
    i, j = np.nonzero(offdiag_mask(n))
    # 1-based M_R[(j-1)n+i, (i-1)n+j] = 1 becomes 0-based [j*n+i, i*n+j]
    M[j * n + i, i * n + j] = 1
    return M


def build_Z_matrices(n: int):
    """Sender, receiver and reciprocal-pair design matrices (Z_s, Z_r, Z_rec).

    Rows follow the diagonal-free dyad order; Z_rec columns enumerate the
    lower triangle column by column: (2,1), (3,1), ..., (n,n-1).
    """
    if n < 2:
        raise ValueError("need at least two actors")
    m = n * (n - 1)
    I = np.eye(n)
    Z_s = np.vstack([np.delete(I, i, axis=0) for i in range(n)])
    Z_r = np.kron(I, np.ones((n - 1, 1)))
    Z_rec = np.zeros((m, m // 2))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            r = (n - 1) * (j - 1) + i - int(i > j)
            if i > j:
                c = n * (j - 1) - j * (j + 1) // 2 + i
            else:
                c = n * (i - 1) - i * (i + 1) // 2 + j
            Z_rec[r - 1, c - 1] = 1.0
    return Z_s, Z_r, Z_rec
