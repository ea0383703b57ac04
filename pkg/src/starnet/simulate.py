"""Synthetic dynamic networks from the STAR generative process, plus the
replicated bias study comparing STAR and independence fits."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .errors import NumericalError, StarError
from .model import ModelParams, StarModelSpec, UndirectedModelParams, validate_psd
from .netcore import CovariateTensor, DynamicNetwork, linear_combination
from .vb.design import bases_at, stats_at
from .vb.fit import fit
from .vb.state import FitOptions

log = logging.getLogger(__name__)

SIM_STUDY_BETA = (-2.5, 0.5, -2.0)
SIM_STUDY_THETA = (0.0075, 0.0075, 0.75, 0.75, 0.025, 0.025, 0.025, -0.05)
SIM_STUDY_COVARIATE_NAMES = ("intercept", "binary", "ar1_distance")


def sim_study_truth(dependence: bool = True) -> ModelParams:
    if not dependence:
        return ModelParams(beta=SIM_STUDY_BETA, theta=SIM_STUDY_THETA)
    return ModelParams(
        beta=SIM_STUDY_BETA,
        theta=SIM_STUDY_THETA,
        tau_s2=0.2,
        tau_r2=0.1,
        omega=[[0.25, 0.1], [0.1, 0.5]],
        sigma2_R=0.5,
    )


@dataclass(frozen=True)
class SimConfig:
    n: int
    T: int
    seed: int
    params: Union[ModelParams, UndirectedModelParams]
    spec: StarModelSpec = field(default_factory=StarModelSpec)
    initial_density: float = 0.05
    replicate_count: int = 1
    covariates: Optional[CovariateTensor] = None

    def __post_init__(self):
        if self.n < 2 or self.T < 1:
            raise ValueError("need n >= 2 and T >= 1")
        if not 0 <= self.initial_density <= 1:
            raise ValueError("initial_density must be a probability")
        if self.spec.directed != isinstance(self.params, ModelParams):
            raise ValueError("parameter type does not match spec.directed")
        if self.params.theta.shape[0] != self.spec.p2:
            raise ValueError(f"theta has {self.params.theta.shape[0]} entries but the statistic selection needs {self.spec.p2}")


@dataclass
class LatentTrace:
    latent: np.ndarray  # A*_t, (T, n, n)
    mean: np.ndarray  # mean structure, (T, n, n)
    effects: dict  # name -> (T, n) effect draws
    R: Optional[np.ndarray] = None


def replicate_rng(seed: int, replicate: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, replicate, stream]))


def generate_sim_study_covariates(n: int, T: int, seed: int, ar_coef: float = 0.9, ar_var: float = 0.05) -> CovariateTensor:
    """Intercept, a static symmetric Bernoulli(1/2) dyadic covariate, and AR(1) distances."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    ones = np.ones((n, n))
    B = np.triu(rng.integers(0, 2, size=(n, n)), 1).astype(float)
    B = B + B.T
    z = np.empty((T + 1, n))
    z[0] = rng.normal(0.0, np.sqrt(ar_var / (1 - ar_coef**2)), size=n)
    for t in range(1, T + 1):
        z[t] = ar_coef * z[t - 1] + rng.normal(0.0, np.sqrt(ar_var), size=n)
    X = np.empty((T, 3, n, n))
    X[:, 0] = ones
    X[:, 1] = B
    X[:, 2] = np.abs(z[1:, :, None] - z[1:, None, :])
    return CovariateTensor(X, SIM_STUDY_COVARIATE_NAMES)


def _psd_root(C: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (C + C.T))
    if w.min() < -1e-8 * max(1.0, abs(w).max()):
        raise NumericalError(f"covariance has negative eigenvalue {w.min():.3g}")
    return V * np.sqrt(np.clip(w, 0.0, None))


def draw_latent(mean: np.ndarray, bases, params, spec: StarModelSpec, rng, size: Optional[int] = None):
    """One (or ``size``) draws of A*_t given its mean structure.

    Returns (latent, effects, R); ``effects`` maps effect names to arrays with
    a trailing actor axis.
    """
    n = mean.shape[0]
    lead = () if size is None else (size,)
    send = np.zeros(lead + (n,))
    recv = np.zeros(lead + (n,))
    effects = {}
    R = None
    design = spec.covariance_design
    if spec.directed and design != "none":
        om_root = _psd_root(params.omega)
        sr = rng.standard_normal(lead + (n, 2)) @ om_root.T
        effects["s1"], effects["r1"] = sr[..., 0], sr[..., 1]
        send += effects["s1"]
        recv += effects["r1"]
        if design == "full":
            effects["s2"] = rng.standard_normal(lead + (n,)) @ _psd_root(params.tau_s2 * bases.H_s[1]).T
            effects["r2"] = rng.standard_normal(lead + (n,)) @ _psd_root(params.tau_r2 * bases.H_r[1]).T
            send += effects["s2"]
            recv += effects["r2"]
        R = np.triu(np.sqrt(params.sigma2_R) * rng.standard_normal(lead + (n, n)), 1)
        R = R + np.swapaxes(R, -1, -2)
    elif not spec.directed and design != "none":
        effects["s"] = rng.standard_normal(lead + (n,)) @ _psd_root(params.tau_s * bases.H_s[0]).T
        send += effects["s"]
        recv += effects["s"]
    noise = rng.standard_normal(lead + (n, n))
    if not spec.directed:
        noise = np.triu(noise, 1)
        noise = noise + np.swapaxes(noise, -1, -2)
    latent = mean + send[..., :, None] + recv[..., None, :] + noise
    if R is not None:
        latent = latent + R
    idx = np.arange(n)
    latent[..., idx, idx] = 0.0
    return latent, effects, R


def simulate_star(config: SimConfig, replicate: int = 0):
    """Simulate A_0..A_T; returns (network, covariates, trace)."""
    spec, params, n, T = config.spec, config.params, config.n, config.T
    rng = replicate_rng(config.seed, replicate, 1)
    covariates = config.covariates
    if covariates is None:
        covariates = generate_sim_study_covariates(n, T, config.seed * 1000003 + replicate)
    if covariates.n != n or covariates.T != T:
        raise ValueError("covariates do not match n and T")
    if covariates.p != params.beta.shape[0]:
        raise ValueError(f"beta has {params.beta.shape[0]} entries for {covariates.p} covariates")
    L = spec.lag_depth
    A = np.zeros((T + 1, n, n), dtype=np.int8)
    for t in range(min(L, T + 1)):
        draw = (rng.uniform(size=(n, n)) < config.initial_density).astype(np.int8)
        if not spec.directed:
            draw = np.triu(draw, 1)
            draw = draw + draw.T
        np.fill_diagonal(draw, 0)
        A[t] = draw
    latents = np.zeros((T, n, n))
    means = np.zeros((T, n, n))
    eff_trace: dict = {}
    R_trace = np.zeros((T, n, n)) if spec.directed and spec.has_effects else None
    for t in range(L, T + 1):
        partial = DynamicNetwork(A[: t + 1], directed=spec.directed)
        G, _ = stats_at(partial, spec, t)
        mean = linear_combination(params.beta, covariates.at(t)) + linear_combination(params.theta, G)
        bases = None
        if spec.has_effects:
            bases = bases_at(partial, spec, t)
            if spec.directed and not validate_psd(params, bases).valid:
                raise NumericalError(f"parameters leave the PSD cone at t={t}")
        latent, effects, R = draw_latent(mean, bases, params, spec, rng)
        At = (latent > 0).astype(np.int8)
        np.fill_diagonal(At, 0)
        A[t] = At
        latents[t - 1] = latent
        means[t - 1] = mean
        for k, v in effects.items():
            eff_trace.setdefault(k, np.zeros((T, n)))[t - 1] = v
        if R is not None:
            R_trace[t - 1] = R
    network = DynamicNetwork(A, directed=spec.directed)
    return network, covariates, LatentTrace(latents, means, eff_trace, R_trace)


def simulate_independent_dyads(m: float, tau_s: float, tau_r: float, size: int, rng) -> np.ndarray:
    """Edge indicators 1[m + s + r + E > 0] with independent s, r, E per dyad."""
    s = rng.normal(0.0, np.sqrt(tau_s), size)
    r = rng.normal(0.0, np.sqrt(tau_r), size)
    e = rng.standard_normal(size)
    return (m + s + r + e > 0).astype(np.int8)


# ---------------------------------------------------------------------------
# replicated bias study

TABLE_COLUMNS = ("replicate", "truth_model", "fit_model", "parameter", "true_value", "posterior_mean", "status")


@dataclass(frozen=True)
class StudyConfig:
    n: int = 100
    T: int = 10
    seed: int = 0
    replicates_dependence: int = 100
    replicates_independence: int = 100
    spec: StarModelSpec = field(default_factory=StarModelSpec)
    initial_density: float = 0.05
    workers: int = 1

    def truth(self, truth_model: str) -> ModelParams:
        return sim_study_truth(truth_model == "dependence")


def _truth_spec(base: StarModelSpec, truth_model: str) -> StarModelSpec:
    return base if truth_model == "dependence" else replace(base, covariance_design="none")


def run_replicate(study: StudyConfig, truth_model: str, replicate: int, fit_options: FitOptions, keep_reports: bool = False):
    """Simulate one data set and fit it with the STAR spec and the independence baseline."""
    truth = study.truth(truth_model)
    stream = 0 if truth_model == "dependence" else 1
    config = SimConfig(
        n=study.n,
        T=study.T,
        seed=study.seed * 2 + stream,
        params=truth,
        spec=_truth_spec(study.spec, truth_model),
        initial_density=study.initial_density,
    )
    rows, reports = [], {}
    truth_values = np.r_[truth.beta, truth.theta]
    try:
        network, covariates, _ = simulate_star(config, replicate)
    except StarError as exc:
        return _failed_rows(replicate, truth_model, ("star", "independence"), truth_values, study, exc), reports
    for fit_model, design in (("star", study.spec.covariance_design), ("independence", "none")):
        spec = replace(study.spec, covariance_design=design)
        try:
            report = fit(network, covariates, spec, fit_options)
        except StarError as exc:
            log.warning("replicate %d (%s truth, %s fit) failed: %s", replicate, truth_model, fit_model, exc)
            rows += _failed_rows(replicate, truth_model, (fit_model,), truth_values, study, exc)
            continue
        status = "ok" if report.converged else "not_converged"
        for name, tv, pm in zip(report.names, truth_values, report.coef_mean):
            rows.append(dict(replicate=replicate, truth_model=truth_model, fit_model=fit_model,
                             parameter=name, true_value=float(tv), posterior_mean=float(pm), status=status))
        if keep_reports:
            reports[fit_model] = report
    return rows, reports


def _failed_rows(replicate, truth_model, fit_models, truth_values, study, exc):
    names = SIM_STUDY_COVARIATE_NAMES + study.spec.stat_selection
    return [
        dict(replicate=replicate, truth_model=truth_model, fit_model=fm, parameter=nm,
             true_value=float(tv), posterior_mean=float("nan"), status=f"failed: {exc}")
        for fm in fit_models
        for nm, tv in zip(names, truth_values)
    ]


def _replicate_job(args):
    study, truth_model, k, fit_options = args
    rows, _ = run_replicate(study, truth_model, k, fit_options)
    return rows


def run_sim_study(study: StudyConfig, fit_options: FitOptions = FitOptions()) -> list:
    """Long-format table of posterior means over all replicates, with truth reference rows."""
    jobs = []
    rows = []
    for truth_model, count in (("dependence", study.replicates_dependence), ("independence", study.replicates_independence)):
        if count < 1:
            continue
        truth = study.truth(truth_model)
        names = SIM_STUDY_COVARIATE_NAMES + study.spec.stat_selection
        for nm, tv in zip(names, np.r_[truth.beta, truth.theta]):
            rows.append(dict(replicate=-1, truth_model=truth_model, fit_model="truth", parameter=nm,
                             true_value=float(tv), posterior_mean=float(tv), status="reference"))
        jobs += [(study, truth_model, k, fit_options) for k in range(count)]
    if study.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=study.workers) as pool:
            for chunk in pool.map(_replicate_job, jobs):
                rows += chunk
    else:
        for job in jobs:
            rows += _replicate_job(job)
    return rows
