"""Evidence of simultaneous dependence.

Posterior-ball curves give, per time point, the posterior probability that
the stacked sender/receiver effect vector lies within distance epsilon of
zero. Comparator curves give the same probability for an isotropic Gaussian
whose scale is calibrated so that the effects explain a fraction ``p`` of
the latent variance.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.special import gammainc

from .errors import ValidationError
from .model import ModelParams, UndirectedModelParams

DEFAULT_P_VALUES = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
DEFAULT_DRAWS = 10_000
DEFAULT_GRID_POINTS = 200

ATTENUATION_NOTE = (
    "attenuation factor uses diagonal averages of the effect covariances; "
    "it is a heuristic when those covariances are not scalar"
)


@dataclass(frozen=True)
class BallCurve:
    epsilon_grid: np.ndarray
    probabilities: np.ndarray
    label: Union[int, float, str]

    def __post_init__(self):
        eps = np.asarray(self.epsilon_grid, dtype=float)
        prob = np.asarray(self.probabilities, dtype=float)
        if eps.ndim != 1 or eps.shape != prob.shape:
            raise ValidationError("epsilon grid and probabilities must be matching 1-d arrays")
        if np.any(eps < 0) or np.any(np.diff(eps) <= 0):
            raise ValidationError("epsilon grid must be nonnegative and strictly increasing")
        if np.any(prob < 0) or np.any(prob > 1) or np.any(np.diff(prob) < 0):
            raise ValidationError("probabilities must be a nondecreasing sequence in [0, 1]")
        object.__setattr__(self, "epsilon_grid", eps)
        object.__setattr__(self, "probabilities", prob)

    def quantile(self, q: float = 0.5) -> float:
        """Smallest grid epsilon whose probability reaches ``q`` (linear interpolation)."""
        prob = self.probabilities
        k = int(np.searchsorted(prob, q, side="left"))
        if k >= prob.size:
            return float(self.epsilon_grid[-1])
        if k == 0 or prob[k] == prob[k - 1]:
            return float(self.epsilon_grid[k])
        w = (q - prob[k - 1]) / (prob[k] - prob[k - 1])
        return float(self.epsilon_grid[k - 1] + w * (self.epsilon_grid[k] - self.epsilon_grid[k - 1]))


def chi_cdf(dim: int, sigma: float, epsilon) -> np.ndarray:
    """P(||Z|| <= epsilon) for Z ~ N(0, sigma^2 I_dim)."""
    if dim < 1:
        raise ValidationError("dim must be at least 1")
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    eps = np.asarray(epsilon, dtype=float)
    if np.any(eps < 0):
        raise ValidationError("epsilon must be nonnegative")
    out = gammainc(dim / 2.0, 0.5 * (eps / sigma) ** 2)
    return float(out) if out.ndim == 0 else out


def _sample_norms(mean: np.ndarray, cov: np.ndarray, draws: int, rng) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (cov + cov.T))
    root = V * np.sqrt(np.clip(w, 0.0, None))
    z = rng.standard_normal((draws, mean.size))
    return np.linalg.norm(mean + z @ root.T, axis=1)


def sample_effect_norms(state, draws: int = DEFAULT_DRAWS, seed: int = 0) -> np.ndarray:
    """Monte Carlo norms of the stacked effect vector under q4, shape (T, draws)."""
    if state.mu_eff.ndim != 3 or state.mu_eff.shape[1] == 0:
        raise ValidationError("no random effects in spec")
    if draws < 1000:
        raise ValidationError("need at least 1000 draws")
    rng = np.random.default_rng(seed)
    T = state.mu_eff.shape[0]
    return np.stack([_sample_norms(state.mu_eff[t].ravel(), state.Sigma_eff[t], draws, rng) for t in range(T)])


def default_epsilon_grid(max_norm: float, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.2 * max_norm, points)


def posterior_ball_curves(
    state,
    epsilon_grid: Optional[Sequence[float]] = None,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    labels: Optional[Sequence] = None,
) -> list:
    """Empirical CDF of the effect norm per time point, evaluated on a common grid."""
    norms = sample_effect_norms(state, draws, seed)
    grid = default_epsilon_grid(norms.max()) if epsilon_grid is None else np.asarray(epsilon_grid, float)
    if labels is None:
        labels = range(1, norms.shape[0] + 1)
    curves = []
    for lab, nrm in zip(labels, norms):
        nrm = np.sort(nrm)
        prob = np.searchsorted(nrm, grid, side="right") / nrm.size
        if grid[0] == 0.0:
            prob[0] = 0.0
        curves.append(BallCurve(grid, prob, lab))
    return curves


def comparator_sigma2(p: float, sigma2_R: float, K_s: int, K_r: int) -> float:
    if not 0 < p < 1:
        raise ValidationError(f"p must lie in (0, 1), got {p}")
    return p * (sigma2_R + 1.0) / ((1.0 - p) * (K_s + K_r))


def comparator_curves(
    n: int,
    K_s: int,
    K_r: int,
    sigma2_R: float,
    p_values: Iterable[float] = DEFAULT_P_VALUES,
    epsilon_grid: Optional[Sequence[float]] = None,
) -> list:
    """Chi-distribution CDFs for the calibrated isotropic comparators."""
    if sigma2_R < 0:
        raise ValidationError("sigma2_R must be nonnegative")
    if K_s + K_r < 1:
        raise ValidationError("need at least one covariance component")
    p_values = list(p_values)
    sig = [np.sqrt(comparator_sigma2(p, sigma2_R, K_s, K_r)) for p in p_values]
    dim = n * (K_s + K_r)
    if epsilon_grid is None:
        # wide enough to carry the largest comparator to ~1
        epsilon_grid = default_epsilon_grid(max(sig) * (np.sqrt(dim) + 6.0))
    grid = np.asarray(epsilon_grid, float)
    return [BallCurve(grid, chi_cdf(dim, s, grid), p) for p, s in zip(p_values, sig)]


def sigma2_R_proxy(M_R: np.ndarray) -> float:
    """Variance of the fitted reciprocal-pair means (one entry per unordered pair and time)."""
    M_R = np.asarray(M_R, float)
    n = M_R.shape[-1]
    iu = np.triu_indices(n, 1)
    vals = M_R[..., iu[0], iu[1]].ravel()
    return float(vals.var()) if vals.size else 0.0


def component_counts(blocks) -> tuple:
    """(K_s, K_r) from a fitted block layout; undirected effects count once."""
    K_s = sum(1 for role, _ in blocks if role in ("s", "u"))
    K_r = sum(1 for role, _ in blocks if role == "r")
    return K_s, K_r


def attenuation_factor(params: Union[ModelParams, UndirectedModelParams], bases=None) -> float:
    """sqrt(1 + tau_s + tau_r + sigma2_R) with tau taken as diagonal averages.

    Without ``bases`` the structured covariance bases are assumed to have unit
    diagonal, which holds for the normalized Gram bases used by the model.
    """
    def diag_mean(H):
        return 1.0 if bases is None else float(np.mean(np.diag(H)))

    if isinstance(params, UndirectedModelParams):
        h = diag_mean(bases.H_s[0]) if bases is not None else 1.0
        # the undirected latent carries s_i + s_j
        return float(np.sqrt(1.0 + 2.0 * params.tau_s * h))
    tau_s = params.omega[0, 0] + params.tau_s2 * (diag_mean(bases.H_s[1]) if bases is not None else 1.0)
    tau_r = params.omega[1, 1] + params.tau_r2 * (diag_mean(bases.H_r[1]) if bases is not None else 1.0)
    return float(np.sqrt(1.0 + tau_s + tau_r + params.sigma2_R))


def curves_to_rows(curves: Iterable[BallCurve], kind: str) -> list:
    return [
        dict(kind=kind, label=c.label, epsilon=float(e), probability=float(p))
        for c in curves
        for e, p in zip(c.epsilon_grid, c.probabilities)
    ]


def write_curves_csv(path, curves: Iterable[BallCurve], kind: str = "posterior") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=("kind", "label", "epsilon", "probability"))
        w.writeheader()
        for row in curves_to_rows(curves, kind):
            row["epsilon"] = repr(row["epsilon"])
            row["probability"] = repr(row["probability"])
            w.writerow(row)


def read_curves_csv(path) -> list:
    """Inverse of :func:`write_curves_csv`; returns (kind, BallCurve) pairs in file order."""
    groups: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["kind"], row["label"])
            groups.setdefault(key, ([], []))
            groups[key][0].append(float(row["epsilon"]))
            groups[key][1].append(float(row["probability"]))
    out = []
    for (kind, label), (eps, prob) in groups.items():
        out.append((kind, BallCurve(np.array(eps), np.array(prob), _parse_label(label))))
    return out


def _parse_label(label: str):
    for cast in (int, float):
        try:
            return cast(label)
        except ValueError:
            pass
    return label
