"""Closed-form mean-field updates.

Each ``update_*`` function overwrites the corresponding fields of the state
in place and returns it. Downstream updates consume ``state.E_bar``, the
expected latent matrix under the truncated-normal factor.
"""
from __future__ import annotations

import numpy as np

from ..errors import NumericalError
from .design import FitData
from .state import VariationalState, _sigma2_R_tilde
from .truncnorm import truncnorm_mean


def role_sums(state: VariationalState, data: FitData):
    """Summed sender and receiver effect means, each of shape (T, n)."""
    T, n = data.T, data.n
    send = np.zeros((T, n))
    recv = np.zeros((T, n))
    for b, (role, _) in enumerate(data.blocks):
        if role in ("s", "u"):
            send += state.mu_eff[:, b]
        if role in ("r", "u"):
            recv += state.mu_eff[:, b]
    return send, recv


def effects_matrix(state: VariationalState, data: FitData) -> np.ndarray:
    """s_i + r_j for every modelled dyad, as (T, n, n) with a zero diagonal."""
    send, recv = role_sums(state, data)
    E = send[:, :, None] + recv[:, None, :]
    idx = np.arange(data.n)
    E[:, idx, idx] = 0.0
    return E


def mean_structure(state: VariationalState, data: FitData) -> np.ndarray:
    """<beta, X_t> + <theta, G_t> at the current posterior mean, (T, n, n)."""
    return data.unvec(data.X @ state.mu_m)


def update_q3(state: VariationalState, data: FitData, moment: str = "mean") -> VariationalState:
    loc = data.X @ state.mu_m + data.vec(effects_matrix(state, data)) + data.vec(state.M_R)
    state.M_A = data.unvec(loc)
    if moment == "location":
        state.E_bar = state.M_A.copy()
    else:
        state.E_bar = data.unvec(truncnorm_mean(loc, data.vec(data.A) > 0.5))
    return state


def prior_precision_m(data: FitData) -> np.ndarray:
    pri = data.spec.priors
    p2 = data.p - data.p1
    return np.diag(np.r_[np.full(data.p1, 1.0 / pri.sigma2_beta), np.full(p2, 1.0 / pri.sigma2_theta)])


def update_q1(state: VariationalState, data: FitData) -> VariationalState:
    prec = prior_precision_m(data) + data.XtX
    resid = data.vec(state.E_bar - effects_matrix(state, data) - state.M_R)
    rhs = np.einsum("tmp,tm->p", data.X, resid)
    Sigma, mu = _spd_solve(prec, rhs, "q1")
    state.Sigma_m = Sigma
    state.mu_m = mu
    return state


def likelihood_precision(data: FitData) -> np.ndarray:
    """Data part of the stacked effect precision (same for every t)."""
    n = data.n
    I = np.eye(n)
    Iminus = np.ones((n, n)) - I
    blocks = data.blocks
    K = len(blocks)
    P = np.zeros((K * n, K * n))
    for a, (ra, _) in enumerate(blocks):
        for b, (rb, _) in enumerate(blocks):
            if ra == "u":
                piece = (n - 1) * I + Iminus
            else:
                piece = (n - 1) * I if ra == rb else Iminus
            P[a * n:(a + 1) * n, b * n:(b + 1) * n] = piece
    return P


def prior_precision_eff(state: VariationalState, data: FitData, t: int) -> np.ndarray:
    n = data.n
    K = len(data.blocks)
    P = np.zeros((K * n, K * n))
    W = None
    omega_blocks = [b for b, (_, prior) in enumerate(data.blocks) if prior == "omega"]
    if omega_blocks:
        W = state.a_omega * np.linalg.inv(state.B_omega)
        for x, a in enumerate(omega_blocks):
            for y, b in enumerate(omega_blocks):
                P[a * n:(a + 1) * n, b * n:(b + 1) * n] = W[x, y] * np.eye(n)
    for b, (_, prior) in enumerate(data.blocks):
        if prior == "omega":
            continue
        shape, scale = _ig_params(state, prior)
        P[b * n:(b + 1) * n, b * n:(b + 1) * n] = (shape / scale) * data.Hinv[prior][t]
    return P


def _ig_params(state: VariationalState, prior: str):
    if prior in ("tau_s2", "tau_s"):
        return state.a_s, state.b_s
    if prior == "tau_r2":
        return state.a_r, state.b_r
    raise KeyError(prior)


def effect_residual(state: VariationalState, data: FitData) -> np.ndarray:
    """E_q[A*] minus the mean structure and the reciprocal-pair means (diagonal zero)."""
    R = state.E_bar - mean_structure(state, data) - state.M_R
    idx = np.arange(data.n)
    R[:, idx, idx] = 0.0
    return R


def effect_rhs(resid: np.ndarray, data: FitData) -> np.ndarray:
    """Stacked (T, K*n) linear terms: row sums for sender blocks, column sums for receivers."""
    parts = []
    for role, _ in data.blocks:
        parts.append(resid.sum(axis=2) if role in ("s", "u") else resid.sum(axis=1))
    return np.concatenate(parts, axis=1)


def update_q4(state: VariationalState, data: FitData, jitter: float = 1e-6) -> VariationalState:
    """Joint Gaussian update of the stacked effects, one solve per time step."""
    if not data.blocks:
        return state
    K = len(data.blocks)
    n = data.n
    lik = likelihood_precision(data)
    rhs = effect_rhs(effect_residual(state, data), data)
    mu = np.empty((data.T, K, n))
    Sig = np.empty((data.T, K * n, K * n))
    for t in range(data.T):
        prec = lik + prior_precision_eff(state, data, t)
        Sig[t], m = _spd_solve(prec, rhs[t], f"q4[t={data.times[t]}]", jitter)
        mu[t] = m.reshape(K, n)
    state.mu_eff = mu
    state.Sigma_eff = Sig
    return state


# the undirected effect update is the single-block case of the directed one
update_q4_undirected = update_q4


def update_q5(state: VariationalState, data: FitData) -> VariationalState:
    if not data.has_R:
        return state
    s2 = _sigma2_R_tilde(state.a_R, state.b_R)
    resid = state.E_bar - mean_structure(state, data) - effects_matrix(state, data)
    M = s2 * (resid + resid.transpose(0, 2, 1))
    idx = np.arange(data.n)
    M[:, idx, idx] = 0.0
    state.sigma2_R_tilde = s2
    state.M_R = M
    return state


def update_q2(state: VariationalState, data: FitData) -> VariationalState:
    if not data.blocks:
        return state
    pri = data.spec.priors
    n, T = data.n, data.T
    omega_blocks = []
    for b, (_, prior) in enumerate(data.blocks):
        if prior == "omega":
            omega_blocks.append(b)
            continue
        sl = slice(b * n, (b + 1) * n)
        Hinv = data.Hinv[prior]
        quad = np.einsum("tij,tji->", state.Sigma_eff[:, sl, sl], Hinv)
        quad += np.einsum("ti,tij,tj->", state.mu_eff[:, b], Hinv, state.mu_eff[:, b])
        if prior == "tau_r2":
            state.a_r = pri.a_r0 + n * T / 2
            state.b_r = pri.b_r0 + 0.5 * quad
        else:
            state.a_s = pri.a_s0 + n * T / 2
            state.b_s = pri.b_s0 + 0.5 * quad
    if omega_blocks:
        B = pri.B_omega0_array.copy()
        for x, a in enumerate(omega_blocks):
            for y, b in enumerate(omega_blocks):
                cov = np.einsum("tii->", state.Sigma_eff[:, a * n:(a + 1) * n, b * n:(b + 1) * n])
                B[x, y] += cov + np.sum(state.mu_eff[:, a] * state.mu_eff[:, b])
        state.a_omega = pri.a_omega0 + n * T
        state.B_omega = 0.5 * (B + B.T)
    return state


def update_q6(state: VariationalState, data: FitData) -> VariationalState:
    if not data.has_R:
        return state
    pri = data.spec.priors
    n, T = data.n, data.T
    iu = np.triu_indices(n, 1)
    upper = state.M_R[:, iu[0], iu[1]]
    state.a_R = pri.a_R0 + T * n * (n - 1) / 4
    state.b_R = pri.b_R0 + 0.5 * float(np.sum(state.sigma2_R_tilde + upper**2))
    return state


def _spd_solve(prec: np.ndarray, rhs: np.ndarray, where: str, jitter: float = 0.0):
    """(inverse, inverse @ rhs) of a symmetric positive definite matrix."""
    prec = 0.5 * (prec + prec.T)
    try:
        L = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        try:
            L = np.linalg.cholesky(prec + max(jitter, 1e-12) * np.eye(prec.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"{where}: precision matrix is not positive definite") from exc
    Linv = np.linalg.solve(L, np.eye(prec.shape[0]))
    Sigma = Linv.T @ Linv
    return Sigma, Sigma @ rhs
