"""Coordinate-ascent driver for the mean-field STAR posterior."""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from ..errors import NumericalError
from ..model import StarModelSpec
from ..netcore import CovariateTensor, DynamicNetwork
from .design import FitData, prepare
from .state import FitOptions, FitReport, VariationalState
from .updates import update_q1, update_q2, update_q3, update_q4, update_q5, update_q6

log = logging.getLogger(__name__)

VB_INTERVAL_WARNING = (
    "mean-field posterior standard deviations are typically too small; "
    "treat intervals from them as optimistic"
)


def ig_moments(a: float, b: float):
    mean = b / (a - 1) if a > 1 else np.inf
    sd = b / ((a - 1) * np.sqrt(a - 2)) if a > 2 else np.inf
    return float(mean), float(sd)


def iw_moments(a: float, B: np.ndarray):
    """Mean and entrywise SD of a 2x2 inverse Wishart(a, B)."""
    p = B.shape[0]
    mean = B / (a - p - 1)
    d = np.diag(B)
    num = (a - p + 1) * B**2 + (a - p - 1) * np.outer(d, d)
    var = num / ((a - p) * (a - p - 1) ** 2 * (a - p - 3))
    return mean, np.sqrt(var)


def variance_summary(state: VariationalState, data: FitData) -> dict:
    out = {}
    priors = [prior for _, prior in data.blocks]
    if "tau_s2" in priors:
        m, s = ig_moments(state.a_s, state.b_s)
        out["tau_s2"] = {"mean": m, "sd": s, "a": state.a_s, "b": state.b_s}
    if "tau_r2" in priors:
        m, s = ig_moments(state.a_r, state.b_r)
        out["tau_r2"] = {"mean": m, "sd": s, "a": state.a_r, "b": state.b_r}
    if "tau_s" in priors:
        m, s = ig_moments(state.a_s, state.b_s)
        out["tau_s"] = {"mean": m, "sd": s, "a": state.a_s, "b": state.b_s}
    if "omega" in priors:
        m, s = iw_moments(state.a_omega, state.B_omega)
        out["omega"] = {"mean": m.tolist(), "sd": s.tolist(), "a": state.a_omega, "B": state.B_omega.tolist()}
    if data.has_R:
        m, s = ig_moments(state.a_R, state.b_R)
        out["sigma2_R"] = {"mean": m, "sd": s, "a": state.a_R, "b": state.b_R}
    return out


def _check(state: VariationalState, where: str) -> None:
    for name in ("mu_m", "Sigma_m", "E_bar", "mu_eff", "Sigma_eff", "M_R", "b_s", "b_r", "B_omega", "b_R"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise NumericalError(f"non-finite {name} after {where}")


def _watched(state: VariationalState) -> np.ndarray:
    return np.concatenate([state.mu_m.ravel(), state.mu_eff.ravel(), state.M_R.ravel()])


def run(data: FitData, options: FitOptions, init: Optional[VariationalState] = None):
    """Iterate q3 -> q1 -> q4 -> q5 -> q2 -> q6 until the watched means settle."""
    if init is None:
        state = VariationalState.initial(data.T, data.n, data.p, len(data.blocks), data.spec.priors, data.has_R)
    else:
        state = init.copy()
    update_q3(state, data, options.latent_moment)
    _check(state, "q3")
    steps = (
        ("q3", lambda s: update_q3(s, data, options.latent_moment)),
        ("q1", lambda s: update_q1(s, data)),
        ("q4", lambda s: update_q4(s, data, options.jitter)),
        ("q5", lambda s: update_q5(s, data)),
        ("q2", lambda s: update_q2(s, data)),
        ("q6", lambda s: update_q6(s, data)),
    )
    trace = []
    converged = False
    it = 0
    prev = _watched(state)
    for it in range(1, options.max_iterations + 1):
        for name, step in steps:
            step(state)
            _check(state, name)
        cur = _watched(state)
        metric = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
        prev = cur
        if options.trace:
            trace.append(metric)
        if metric < options.tolerance:
            converged = True
            break
    if not converged:
        log.warning("VB stopped after %d iterations without reaching tolerance %g", it, options.tolerance)
    return state, it, converged, trace


def fit(
    network: DynamicNetwork,
    covariates: CovariateTensor,
    spec: StarModelSpec,
    options: FitOptions = FitOptions(),
    init: Optional[VariationalState] = None,
) -> FitReport:
    data = prepare(network, covariates, spec, options.jitter)
    state, it, converged, trace = run(data, options, init)
    return build_report(state, data, options, it, converged, trace)


def build_report(state, data, options, iterations, converged, trace) -> FitReport:
    warnings = [VB_INTERVAL_WARNING]
    if not converged:
        warnings.append(f"not converged after {iterations} iterations")
    if options.latent_moment == "location":
        warnings.append("latent_moment='location' is a debugging mode; estimates ignore the data")
    return FitReport(
        names=data.names,
        coef_mean=state.mu_m.copy(),
        coef_sd=np.sqrt(np.diag(state.Sigma_m)),
        variance_components=variance_summary(state, data),
        iterations=iterations,
        converged=converged,
        trace=trace,
        state=state,
        times=data.times,
        spec=data.spec,
        options=options,
        warnings=warnings,
    )
