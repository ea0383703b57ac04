"""Desk-scale Gibbs sampler for the augmented STAR model.

Used only as a correctness oracle for the variational fitter: it samples the
same latent structure (truncated-normal A*, effects, reciprocal-pair effects,
variance components) from exact full conditionals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import invwishart

from ..errors import ValidationError
from ..model import StarModelSpec
from ..netcore import CovariateTensor, DynamicNetwork
from .design import FitData, prepare
from .truncnorm import sample_truncnorm
from .updates import effect_rhs, likelihood_precision, prior_precision_m

MAX_N = 30
MAX_T = 10


@dataclass
class GibbsSummary:
    names: tuple
    mean: np.ndarray
    sd: np.ndarray
    lower: np.ndarray  # 2.5% quantile
    upper: np.ndarray  # 97.5% quantile
    variance_components: dict
    samples: np.ndarray  # (kept draws, p)


def _mvn_from_precision(prec, rhs, rng):
    L = np.linalg.cholesky(0.5 * (prec + prec.T))
    mean = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    return mean + np.linalg.solve(L.T, rng.standard_normal(rhs.shape[0]))


def gibbs_reference_fit(
    network: DynamicNetwork,
    covariates: CovariateTensor,
    spec: StarModelSpec,
    iterations: int = 20000,
    burn_in: int = 5000,
    seed: int = 0,
    jitter: float = 1e-6,
    enforce_scale_guard: bool = True,
) -> GibbsSummary:
    if enforce_scale_guard and (network.n > MAX_N or network.T > MAX_T):
        raise ValidationError(f"Gibbs oracle limited to n <= {MAX_N}, T <= {MAX_T}")
    if not 0 <= burn_in < iterations:
        raise ValidationError("need 0 <= burn_in < iterations")
    data = prepare(network, covariates, spec, jitter)
    rng = np.random.default_rng(seed)
    return _run(data, iterations, burn_in, rng)


def _run(data: FitData, iterations: int, burn_in: int, rng) -> GibbsSummary:
    pri = data.spec.priors
    T, n, p = data.T, data.n, data.p
    blocks = data.blocks
    K = len(blocks)
    positive = data.vec(data.A) > 0.5
    prec_m = prior_precision_m(data) + data.XtX
    L_m = np.linalg.cholesky(prec_m)
    lik = likelihood_precision(data) if K else None
    idx = np.arange(n)
    iu = np.triu_indices(n, 1)

    beta = np.zeros(p)
    u = np.zeros((T, K, n))
    R = np.zeros((T, n, n))
    tau = {"tau_s2": pri.b_s0 / (pri.a_s0 - 1) if pri.a_s0 > 1 else 1.0,
           "tau_r2": pri.b_r0 / (pri.a_r0 - 1) if pri.a_r0 > 1 else 1.0}
    tau["tau_s"] = tau["tau_s2"]
    omega = pri.B_omega0_array / (pri.a_omega0 - 3)
    sigma2_R = pri.b_R0 / (pri.a_R0 - 1) if pri.a_R0 > 1 else 1.0

    kept = iterations - burn_in
    draws = np.empty((kept, p))
    vc_draws = {k: [] for k in ("tau_s2", "tau_r2", "tau_s", "omega", "sigma2_R")}

    def effects():
        send = np.zeros((T, n))
        recv = np.zeros((T, n))
        for b, (role, _) in enumerate(blocks):
            if role in ("s", "u"):
                send += u[:, b]
            if role in ("r", "u"):
                recv += u[:, b]
        E = send[:, :, None] + recv[:, None, :]
        E[:, idx, idx] = 0.0
        return E

    for it in range(iterations):
        eff = effects()
        loc = data.X @ beta + data.vec(eff + R)
        z = sample_truncnorm(loc, positive, rng)

        resid = z - data.vec(eff + R)
        rhs = np.einsum("tmp,tm->p", data.X, resid)
        mean = np.linalg.solve(L_m.T, np.linalg.solve(L_m, rhs))
        beta = mean + np.linalg.solve(L_m.T, rng.standard_normal(p))

        Z = data.unvec(z)
        mean_struct = data.unvec(data.X @ beta)
        if K:
            res = Z - mean_struct - R
            res[:, idx, idx] = 0.0
            rhs_u = effect_rhs(res, data)
            W = np.linalg.inv(omega) if any(pr == "omega" for _, pr in blocks) else None
            omega_blocks = [b for b, (_, pr) in enumerate(blocks) if pr == "omega"]
            for t in range(T):
                prec = lik.copy()
                for x, a in enumerate(omega_blocks):
                    for y, b in enumerate(omega_blocks):
                        prec[a * n:(a + 1) * n, b * n:(b + 1) * n] += W[x, y] * np.eye(n)
                for b, (_, pr) in enumerate(blocks):
                    if pr != "omega":
                        prec[b * n:(b + 1) * n, b * n:(b + 1) * n] += data.Hinv[pr][t] / tau[pr]
                u[t] = _mvn_from_precision(prec, rhs_u[t], rng).reshape(K, n)
            eff = effects()

        if data.has_R:
            res = Z - mean_struct - eff
            var = 1.0 / (2.0 + 1.0 / sigma2_R)
            pair = var * (res + res.transpose(0, 2, 1)) + np.sqrt(var) * rng.standard_normal((T, n, n))
            R = np.triu(pair, 1)
            R = R + R.transpose(0, 2, 1)
            upper = R[:, iu[0], iu[1]]
            sigma2_R = (pri.b_R0 + 0.5 * np.sum(upper**2)) / rng.gamma(pri.a_R0 + T * n * (n - 1) / 4)

        omega_blocks = [b for b, (_, pr) in enumerate(blocks) if pr == "omega"]
        for b, (_, pr) in enumerate(blocks):
            if pr == "omega":
                continue
            quad = np.einsum("ti,tij,tj->", u[:, b], data.Hinv[pr], u[:, b])
            a0, b0 = (pri.a_r0, pri.b_r0) if pr == "tau_r2" else (pri.a_s0, pri.b_s0)
            tau[pr] = (b0 + 0.5 * quad) / rng.gamma(a0 + n * T / 2)
        if omega_blocks:
            S = np.stack([u[:, omega_blocks[0]].ravel(), u[:, omega_blocks[1]].ravel()])
            scale = pri.B_omega0_array + S @ S.T
            omega = invwishart.rvs(df=pri.a_omega0 + n * T, scale=scale, random_state=rng)

        if it >= burn_in:
            draws[it - burn_in] = beta
            for b, (_, pr) in enumerate(blocks):
                if pr != "omega":
                    vc_draws[pr].append(tau[pr])
            if omega_blocks:
                vc_draws["omega"].append(np.array(omega))
            if data.has_R:
                vc_draws["sigma2_R"].append(sigma2_R)

    vc = {}
    for k, v in vc_draws.items():
        if v:
            arr = np.array(v)
            vc[k] = {"mean": arr.mean(axis=0).tolist(), "sd": arr.std(axis=0, ddof=1).tolist()}
    return GibbsSummary(
        names=data.names,
        mean=draws.mean(axis=0),
        sd=draws.std(axis=0, ddof=1),
        lower=np.quantile(draws, 0.025, axis=0),
        upper=np.quantile(draws, 0.975, axis=0),
        variance_components=vc,
        samples=draws,
    )
