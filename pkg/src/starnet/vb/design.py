"""Per-time-step design quantities shared by the VB fitter and the Gibbs oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError, ValidationError
from ..model import StarModelSpec
from ..netcore import CovariateTensor, DynamicNetwork, offdiag_mask
from ..netstats import (
    build_H_directed,
    build_H_undirected,
    build_lag_stats_directed,
    build_lag_stats_undirected,
    identity_bases,
)

# effect block layouts: (role, prior) per block, in stacking order
BLOCKS = {
    ("directed", "full"): (("s", "omega"), ("r", "omega"), ("s", "tau_s2"), ("r", "tau_r2")),
    ("directed", "identity_only"): (("s", "omega"), ("r", "omega")),
    ("undirected", "full"): (("u", "tau_s"),),
    ("undirected", "identity_only"): (("u", "tau_s"),),
}


def dyad_positions(n: int, directed: bool):
    """(rows, cols) of the modelled dyads in their canonical order.

    Directed: all off-diagonal dyads column-major. Undirected: the strict
    upper triangle, row by row.
    """
    if directed:
        cols, rows = np.nonzero(offdiag_mask(n))
        return rows, cols
    return np.triu_indices(n, 1)


def jittered_inverse(H: np.ndarray, jitter: float) -> np.ndarray:
    n = H.shape[0]
    try:
        L = np.linalg.cholesky(H + jitter * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"covariance basis is not positive definite after jitter {jitter}") from exc
    Linv = np.linalg.solve(L, np.eye(n))
    return Linv.T @ Linv


@dataclass
class FitData:
    """Everything the updates need that does not change across iterations."""

    spec: StarModelSpec
    n: int
    times: np.ndarray  # fitted network indices t
    A: np.ndarray  # (T, n, n) observed adjacency at fitted times
    X: np.ndarray  # (T, m, p) stacked covariates then lag statistics, per modelled dyad
    rows: np.ndarray
    cols: np.ndarray
    names: tuple
    p1: int
    H: dict  # prior name -> (T, n, n) basis matrices
    Hinv: dict  # prior name -> (T, n, n) jittered inverses
    XtX: np.ndarray

    @property
    def T(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[2]

    @property
    def directed(self) -> bool:
        return self.spec.directed

    @property
    def blocks(self) -> tuple:
        if not self.spec.has_effects:
            return ()
        return BLOCKS[("directed" if self.directed else "undirected", self.spec.covariance_design)]

    @property
    def has_R(self) -> bool:
        return self.directed and self.spec.has_effects

    def vec(self, M: np.ndarray) -> np.ndarray:
        """Modelled-dyad entries of one matrix or a (T, n, n) stack."""
        return M[..., self.rows, self.cols]

    def unvec(self, v: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`vec`; undirected results are mirrored, diagonal zero."""
        out = np.zeros(v.shape[:-1] + (self.n, self.n))
        out[..., self.rows, self.cols] = v
        if not self.directed:
            out[..., self.cols, self.rows] = v
        return out


def stats_at(network: DynamicNetwork, spec: StarModelSpec, t: int):
    """Lag statistics for time t, stacked over lags 1..lag_depth."""
    builder = build_lag_stats_directed if spec.directed else build_lag_stats_undirected
    slices, labels = [], []
    for k in range(1, spec.lag_depth + 1):
        G = builder(network[t - k], spec.stat_selection, lag=k)
        slices.append(G.slices)
        labels.extend(G.labels)
    n = network.n
    return (np.concatenate(slices) if slices else np.zeros((0, n, n))), tuple(labels)


def bases_at(network: DynamicNetwork, spec: StarModelSpec, t: int):
    if spec.covariance_design == "identity_only":
        return identity_bases(network.n, spec.directed)
    return build_H_directed(network[t - 1]) if spec.directed else build_H_undirected(network[t - 1])


def prepare(network: DynamicNetwork, covariates: CovariateTensor, spec: StarModelSpec, jitter: float = 1e-6) -> FitData:
    if network.directed != spec.directed:
        raise ValidationError("network directedness does not match the model spec")
    try:
        covariates.check_against(network)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    if network.T < spec.lag_depth:
        raise ValidationError(f"need at least {spec.lag_depth + 1} networks for lag depth {spec.lag_depth}")
    n = network.n
    rows, cols = dyad_positions(n, spec.directed)
    times = np.arange(spec.lag_depth, network.T + 1)
    A, X = [], []
    labels = ()
    H = {"tau_s2": [], "tau_r2": [], "tau_s": []}
    for t in times:
        G, labels = stats_at(network, spec, t)
        slices = np.concatenate([covariates.at(t), G])
        X.append(slices[:, rows, cols].T)
        A.append(network[t].astype(float))
        if spec.has_effects:
            bases = bases_at(network, spec, t)
            if spec.directed and spec.covariance_design == "full":
                H["tau_s2"].append(bases.H_s[1])
                H["tau_r2"].append(bases.H_r[1])
            elif not spec.directed:
                H["tau_s"].append(bases.H_s[0])
    H = {k: np.array(v) for k, v in H.items() if v}
    Hinv = {k: np.array([jittered_inverse(h, jitter) for h in v]) for k, v in H.items()}
    X = np.array(X)
    return FitData(
        spec=spec,
        n=n,
        times=times,
        A=np.array(A),
        X=X,
        rows=rows,
        cols=cols,
        names=tuple(covariates.names) + labels,
        p1=covariates.p,
        H=H,
        Hinv=Hinv,
        XtX=np.einsum("tmp,tmq->pq", X, X),
    )
