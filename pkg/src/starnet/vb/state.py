"""Variational parameters and fitter options."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..model import PriorSet


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500
    tolerance: float = 1e-6
    jitter: float = 1e-6
    seed: int = 0
    trace: bool = True
    # "mean" feeds E_q[A*] downstream; "location" feeds the truncated-normal locations (debug only)
    latent_moment: str = "mean"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.jitter < 0:
            raise ValueError("jitter must be nonnegative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.latent_moment not in ("mean", "location"):
            raise ValueError("latent_moment must be 'mean' or 'location'")


@dataclass
class VariationalState:
    """Parameters of every factor of the mean-field posterior.

    Effect means are stored as ``mu_eff[t, block, actor]`` with blocks in the
    order (s1, r1, s2, r2) for directed fits and a single block for undirected
    ones; ``Sigma_eff[t]`` is the joint covariance over the stacked blocks.
    """

    mu_m: np.ndarray
    Sigma_m: np.ndarray
    M_A: np.ndarray
    E_bar: np.ndarray
    mu_eff: np.ndarray
    Sigma_eff: np.ndarray
    M_R: np.ndarray
    a_s: float = 0.0
    b_s: float = 1.0
    a_r: float = 0.0
    b_r: float = 1.0
    a_omega: float = 0.0
    B_omega: np.ndarray = field(default_factory=lambda: np.eye(2))
    sigma2_R_tilde: float = 0.0
    a_R: float = 0.0
    b_R: float = 1.0

    @classmethod
    def initial(cls, T: int, n: int, p: int, n_blocks: int, priors: PriorSet, has_R: bool) -> "VariationalState":
        state = cls(
            mu_m=np.zeros(p),
            Sigma_m=np.eye(p),
            M_A=np.zeros((T, n, n)),
            E_bar=np.zeros((T, n, n)),
            mu_eff=np.zeros((T, n_blocks, n)),
            Sigma_eff=np.zeros((T, n_blocks * n, n_blocks * n)),
            M_R=np.zeros((T, n, n)),
            a_s=priors.a_s0,
            b_s=priors.b_s0,
            a_r=priors.a_r0,
            b_r=priors.b_r0,
            a_omega=priors.a_omega0,
            B_omega=priors.B_omega0_array.copy(),
            a_R=priors.a_R0,
            b_R=priors.b_R0,
        )
        if has_R:
            state.sigma2_R_tilde = _sigma2_R_tilde(state.a_R, state.b_R)
        return state

    def copy(self) -> "VariationalState":
        return copy.deepcopy(self)

    @property
    def T(self) -> int:
        return self.M_A.shape[0]

    @property
    def n(self) -> int:
        return self.M_A.shape[1]

    def to_arrays(self) -> dict:
        return {k: np.asarray(v) for k, v in vars(self).items()}

    @classmethod
    def from_arrays(cls, arrays) -> "VariationalState":
        kw = {}
        for k, v in arrays.items():
            v = np.asarray(v)
            kw[k] = float(v) if v.ndim == 0 else v.copy()
        return cls(**kw)


def _sigma2_R_tilde(a_R: float, b_R: float) -> float:
    ratio = b_R / a_R
    return ratio / (1.0 + 2.0 * ratio)


@dataclass
class FitReport:
    names: tuple
    coef_mean: np.ndarray
    coef_sd: np.ndarray
    variance_components: dict
    iterations: int
    converged: bool
    trace: list
    state: VariationalState
    times: np.ndarray
    spec: object
    options: FitOptions
    warnings: list = field(default_factory=list)
    comparison: Optional[dict] = None

    metric = "max_abs_change(mu_m, effect means, M_R)"

    def coef(self, name: str) -> float:
        return float(self.coef_mean[self.names.index(name)])

    def to_dict(self) -> dict:
        out = {
            "coefficients": [
                {"name": nm, "mean": float(m), "sd": float(s)}
                for nm, m, s in zip(self.names, self.coef_mean, self.coef_sd)
            ],
            "variance_components": self.variance_components,
            "iterations": self.iterations,
            "converged": self.converged,
            "convergence_metric": self.metric,
            "trace": [float(x) for x in self.trace],
            "times": [int(t) for t in self.times],
            "spec": self.spec.to_dict(),
            "options": vars(self.options).copy(),
            "warnings": list(self.warnings),
        }
        if self.comparison is not None:
            out["comparison"] = self.comparison
        return out
