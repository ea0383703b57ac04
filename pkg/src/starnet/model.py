"""Model settings, priors, parameter containers and covariance algebra."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from .netcore import offdiag_mask
from .netstats import DIRECTED_STATS, UNDIRECTED_STATS, CovarianceBases, build_MR

COVARIANCE_DESIGNS = ("full", "identity_only", "none")
PSD_TOL = -1e-8


@dataclass(frozen=True)
class PriorSet:
    sigma2_beta: float = 100.0
    sigma2_theta: float = 100.0
    a_s0: float = 2.0
    b_s0: float = 1.0
    a_r0: float = 2.0
    b_r0: float = 1.0
    a_R0: float = 2.0
    b_R0: float = 1.0
    a_omega0: float = 4.0
    B_omega0: tuple = ((1.0, 0.0), (0.0, 1.0))

    def __post_init__(self):
        for name in ("sigma2_beta", "sigma2_theta", "a_s0", "b_s0", "a_r0", "b_r0", "a_R0", "b_R0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"prior {name} must be positive")
        if not self.a_omega0 > 3:
            raise ValueError("a_omega0 must exceed 3 so the prior mean of Omega exists")
        B = np.asarray(self.B_omega0, dtype=float)
        if B.shape != (2, 2) or not np.allclose(B, B.T) or np.linalg.eigvalsh(B).min() <= 0:
            raise ValueError("B_omega0 must be a symmetric positive definite 2x2 matrix")
        object.__setattr__(self, "B_omega0", tuple(map(tuple, B.tolist())))

    @property
    def B_omega0_array(self) -> np.ndarray:
        return np.array(self.B_omega0, dtype=float)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["B_omega0"] = [list(r) for r in self.B_omega0]
        return d


@dataclass(frozen=True)
class StarModelSpec:
    directed: bool = True
    stat_selection: tuple = DIRECTED_STATS
    covariance_design: str = "full"
    priors: PriorSet = field(default_factory=PriorSet)
    lag_depth: int = 1

    def __post_init__(self):
        if self.covariance_design not in COVARIANCE_DESIGNS:
            raise ValueError(f"covariance_design must be one of {COVARIANCE_DESIGNS}")
        allowed = DIRECTED_STATS if self.directed else UNDIRECTED_STATS
        bad = [s for s in self.stat_selection if s not in allowed]
        if bad:
            raise ValueError(f"unknown statistic(s) for this network type: {bad}")
        if self.lag_depth < 1:
            raise ValueError("lag_depth must be at least 1")
        object.__setattr__(self, "stat_selection", tuple(self.stat_selection))

    @classmethod
    def undirected(cls, **kw) -> "StarModelSpec":
        kw.setdefault("stat_selection", UNDIRECTED_STATS)
        return cls(directed=False, **kw)

    @property
    def has_effects(self) -> bool:
        return self.covariance_design != "none"

    @property
    def K(self) -> tuple:
        """(K_s, K_r, K_sr) implied by the covariance design."""
        if self.covariance_design == "none":
            return (0, 0, 0)
        if not self.directed:
            return (1, 0, 0)
        return (2, 2, 1) if self.covariance_design == "full" else (1, 1, 1)

    @property
    def p2(self) -> int:
        return len(self.stat_selection) * self.lag_depth

    def to_dict(self) -> dict:
        return {
            "directed": self.directed,
            "stats": list(self.stat_selection),
            "covariance_design": self.covariance_design,
            "lag_depth": self.lag_depth,
            "priors": self.priors.to_dict(),
        }


@dataclass(frozen=True)
class ModelParams:
    """Directed STAR parameters; the dyad noise variance is fixed at one."""

    beta: np.ndarray
    theta: np.ndarray
    tau_s2: float = 0.0
    tau_r2: float = 0.0
    omega: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    sigma2_R: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=float)))
        om = np.asarray(self.omega, dtype=float)
        if om.shape != (2, 2):
            raise ValueError("omega must be 2x2")
        object.__setattr__(self, "omega", om)
        if self.tau_s2 < 0 or self.tau_r2 < 0 or self.sigma2_R < 0:
            raise ValueError("variance components must be nonnegative")

    sigma2_eps = 1.0

    @property
    def tau_s1(self) -> float:
        return float(self.omega[0, 0])

    @property
    def tau_r1(self) -> float:
        return float(self.omega[1, 1])

    @property
    def tau_sr1(self) -> float:
        return float(self.omega[0, 1])

    @property
    def tau_s(self) -> tuple:
        return (self.tau_s1, self.tau_s2)

    @property
    def tau_r(self) -> tuple:
        return (self.tau_r1, self.tau_r2)

    @property
    def tau_sr(self) -> tuple:
        return (self.tau_sr1,)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "theta": self.theta.tolist(),
            "tau_s2": float(self.tau_s2),
            "tau_r2": float(self.tau_r2),
            "omega": self.omega.tolist(),
            "sigma2_R": float(self.sigma2_R),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(
            beta=d["beta"],
            theta=d["theta"],
            tau_s2=d.get("tau_s2", 0.0),
            tau_r2=d.get("tau_r2", 0.0),
            omega=d.get("omega", [[0.0, 0.0], [0.0, 0.0]]),
            sigma2_R=d.get("sigma2_R", 0.0),
        )


@dataclass(frozen=True)
class UndirectedModelParams:
    beta: np.ndarray
    theta: np.ndarray
    tau_s: float = 0.0

    sigma2 = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=float)))
        if self.tau_s < 0:
            raise ValueError("tau_s must be nonnegative")

    def to_dict(self) -> dict:
        return {"beta": self.beta.tolist(), "theta": self.theta.tolist(), "tau_s": float(self.tau_s)}

    @classmethod
    def from_dict(cls, d: dict) -> "UndirectedModelParams":
        return cls(beta=d["beta"], theta=d["theta"], tau_s=d.get("tau_s", 0.0))


@dataclass(frozen=True)
class PSDReport:
    valid: bool
    min_eigenvalue: float
    problems: tuple = ()


def validate_psd(params: ModelParams, bases: CovarianceBases) -> PSDReport:
    """Check Omega and every sender/receiver cross block against the PSD cone."""
    problems = []
    eigs = []
    om_min = float(np.linalg.eigvalsh(params.omega).min())
    eigs.append(om_min)
    if om_min < PSD_TOL:
        problems.append(f"Omega has eigenvalue {om_min:.3g}")
    for name, value in (("tau_s2", params.tau_s2), ("tau_r2", params.tau_r2), ("sigma2_R", params.sigma2_R)):
        if value < 0:
            problems.append(f"{name} is negative")
    for k, H_sr in enumerate(bases.H_sr):
        block = np.block(
            [
                [params.tau_s[k] * bases.H_s[k], params.tau_sr[k] * H_sr],
                [params.tau_sr[k] * H_sr.T, params.tau_r[k] * bases.H_r[k]],
            ]
        )
        lam = float(np.linalg.eigvalsh(0.5 * (block + block.T)).min())
        eigs.append(lam)
        if lam < PSD_TOL:
            problems.append(f"cross block {k + 1} has eigenvalue {lam:.3g}")
    return PSDReport(valid=not problems, min_eigenvalue=min(eigs), problems=tuple(problems))


def effect_covariances(params: ModelParams, bases: CovarianceBases):
    """(Sigma_s, Sigma_r, Sigma_sr) as weighted sums of the bases."""
    n = bases.n
    S_s = sum((w * H for w, H in zip(params.tau_s, bases.H_s)), np.zeros((n, n)))
    S_r = sum((w * H for w, H in zip(params.tau_r, bases.H_r)), np.zeros((n, n)))
    S_sr = sum((w * H for w, H in zip(params.tau_sr, bases.H_sr)), np.zeros((n, n)))
    return S_s, S_r, S_sr


def assemble_dyad_covariance(params: ModelParams, bases: CovarianceBases, n: int) -> np.ndarray:
    """Covariance of vec(A*_t) (all n^2 entries, column-major) via Kronecker products."""
    if n > 64:
        raise ValueError("dense n^2 x n^2 assembly is limited to n <= 64")
    if bases.n != n:
        raise ValueError("bases do not match n")
    S_s, S_r, S_sr = effect_covariances(params, bases)
    one = np.ones((n, 1))
    J = np.ones((n, n))
    C = (
        np.kron(J, S_s)
        + np.kron(S_r, J)
        + np.kron(np.kron(one, S_sr), one.T)
        + np.kron(np.kron(one.T, S_sr.T), one)
        + params.sigma2_R * build_MR(n)
        + (params.sigma2_eps + params.sigma2_R) * np.eye(n * n)
    )
    return 0.5 * (C + C.T)


def offdiag_positions(n: int) -> np.ndarray:
    """Indices of off-diagonal dyads inside a full column-major vec of length n^2."""
    return np.flatnonzero(offdiag_mask(n).T.ravel())


def dyad_pair_covariance(params: ModelParams, bases: CovarianceBases, i, j, k, l) -> float:
    """Scalar role-based covariance between dyads (i, j) and (k, l)."""
    S_s, S_r, S_sr = effect_covariances(params, bases)
    value = S_s[i, k] + S_r[j, l] + S_sr[i, l] + S_sr[k, j]
    if (i, j) == (k, l) or (i, j) == (l, k):
        value += params.sigma2_R
    if (i, j) == (k, l):
        value += params.sigma2_eps
    return float(value)


def sample_role_based(params: ModelParams, bases: CovarianceBases, draws: int, rng) -> np.ndarray:
    """Draws of vec(s 1' + 1 r' + E) with paired-residual noise, shape (draws, n^2).

    (s, r) share one joint Gaussian and each reciprocal residual pair
    (E_ij, E_ji) has covariance I + sigma2_R J.
    """
    n = bases.n
    S_s, S_r, S_sr = effect_covariances(params, bases)
    joint = np.block([[S_s, S_sr], [S_sr.T, S_r]])
    w, V = np.linalg.eigh(0.5 * (joint + joint.T))
    root = V * np.sqrt(np.clip(w, 0.0, None))
    sr = rng.standard_normal((draws, 2 * n)) @ root.T
    s, r = sr[:, :n], sr[:, n:]
    E = np.sqrt(params.sigma2_eps) * rng.standard_normal((draws, n, n))
    shared = np.sqrt(params.sigma2_R) * rng.standard_normal((draws, n, n))
    shared = np.triu(shared, 1)
    shared = shared + shared.transpose(0, 2, 1) + np.sqrt(params.sigma2_R) * np.eye(n) * rng.standard_normal((draws, n, 1))
    Astar = s[:, :, None] + r[:, None, :] + E + shared
    return Astar.transpose(0, 2, 1).reshape(draws, n * n)


def marginal_edge_probability(m: float, var_sr: float, var_E: float) -> float:
    """P(A_ij = 1) once the sender-plus-receiver effect is integrated out."""
    if not var_E > 0:
        raise ValueError("var_E must be positive")
    return float(ndtr(m / np.sqrt(var_E + var_sr)))


def icc_reciprocity(sigma2_R: float) -> float:
    if sigma2_R < 0:
        raise ValueError("sigma2_R must be nonnegative")
    return sigma2_R / (sigma2_R + 1.0)


def variance_ratio_vector(params: ModelParams) -> np.ndarray:
    v = np.array([*params.tau_s, *params.tau_r, params.sigma2_R, 1.0])
    return v / v.sum()
