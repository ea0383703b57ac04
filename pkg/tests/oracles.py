"""Independent reference implementations used by the tests.

Everything here is written from the model definitions with explicit loops or
dense design matrices, without calling the package code under test.
"""
import mpmath as mp
import numpy as np
from scipy.stats import truncnorm


# ---------------------------------------------------------------------------
# dyad bookkeeping

def dyads(n, directed=True):
    """Modelled dyads in canonical order: column-major off-diagonal, or the upper triangle row by row."""
    if directed:
        return [(i, j) for j in range(n) for i in range(n) if i != j]
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def design_S_R(n, directed=True):
    """Dense incidence matrices mapping sender / receiver vectors onto dyads."""
    D = dyads(n, directed)
    S = np.zeros((len(D), n))
    R = np.zeros((len(D), n))
    for k, (i, j) in enumerate(D):
        S[k, i] = 1.0
        R[k, j] = 1.0
    return S, R


def pair_incidence(n):
    """Directed dyads x unordered pairs (i<j), one 1 per row."""
    D = dyads(n, True)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    P = np.zeros((len(D), len(pairs)))
    for k, (i, j) in enumerate(D):
        P[k, pairs.index((min(i, j), max(i, j)))] = 1.0
    return P, pairs


# ---------------------------------------------------------------------------
# statistics by brute force

def brute_directed_stats(A):
    n = A.shape[0]
    A = A.copy()
    np.fill_diagonal(A, 0)
    out = {k: np.zeros((n, n)) for k in ("out_degree", "in_degree", "stability", "reciprocity",
                                         "transitivity1", "transitivity2", "transitivity3", "cycle")}
    for i in range(n):
        for j in range(n):
            out["out_degree"][i, j] = sum(A[i, h] for h in range(n))
            out["in_degree"][i, j] = sum(A[h, j] for h in range(n))
            out["stability"][i, j] = A[i, j]
            out["reciprocity"][i, j] = A[j, i]
            out["transitivity1"][i, j] = sum(A[i, h] * A[h, j] for h in range(n))
            out["transitivity2"][i, j] = sum(A[i, h] * A[j, h] for h in range(n))
            out["transitivity3"][i, j] = sum(A[h, i] * A[h, j] for h in range(n))
            out["cycle"][i, j] = sum(A[h, i] * A[j, h] for h in range(n))
    return out


def brute_undirected_stats(A):
    n = A.shape[0]
    A = A.copy()
    np.fill_diagonal(A, 0)
    out = {k: np.zeros((n, n)) for k in ("degree", "stability", "triangle")}
    for i in range(n):
        for j in range(n):
            out["degree"][i, j] = sum(A[i, h] for h in range(n)) + sum(A[h, j] for h in range(n))
            out["stability"][i, j] = A[i, j]
            out["triangle"][i, j] = sum(A[i, h] * A[h, j] for h in range(n))
    return out


def brute_shared_neighbour_basis(A, transpose=False):
    """Degree-normalized count of shared out- (or in-) neighbours with self-loops added."""
    n = A.shape[0]
    B = A.copy().astype(float)
    np.fill_diagonal(B, 1.0)
    if transpose:
        B = B.T
    deg = [sum(B[i, h] for h in range(n)) for i in range(n)]
    H = np.zeros((n, n))
    for i in range(n):
        for k in range(n):
            H[i, k] = sum(B[i, h] * B[k, h] for h in range(n)) / np.sqrt(deg[i] * deg[k])
    return H


# ---------------------------------------------------------------------------
# covariance

def scalar_dyad_cov(Ss, Sr, Ssr, s2R, i, j, k, l, s2e=1.0):
    """Role-based additive covariance between dyads (i,j) and (k,l)."""
    v = Ss[i, k] + Sr[j, l] + Ssr[i, l] + Ssr[k, j]
    if (i, j) == (k, l) or (i, j) == (l, k):
        v += s2R
    if (i, j) == (k, l):
        v += s2e
    return v


# ---------------------------------------------------------------------------
# truncated-normal moments

def quad_mean(loc, positive, dps=40):
    """E[X | X > 0] (or X < 0) for X ~ N(loc, 1) by adaptive quadrature.

    The negative side is mapped to the positive one by reflection. The
    constant exp(-loc^2/2) cancels, leaving exp(loc*x - x^2/2) on (0, inf);
    breakpoints follow its scale, 1/|loc| when loc < 0 and 1 around the mode
    otherwise.
    """
    if not positive:
        return -quad_mean(-loc, True, dps)
    with mp.workdps(dps):
        return _quad_pos(mp.mpf(loc))


def _quad_pos(a):
    g = lambda x: mp.exp(a * x - x * x / 2)
    if a < 0:
        s = 1 / max(mp.mpf(1), -a)
        pts = [0, s, 5 * s, 20 * s, 80 * s, mp.inf]
    else:
        pts = sorted({mp.mpf(0), max(mp.mpf(0), a - 10), a, a + 10}) + [mp.inf]
    num = mp.quad(lambda x: x * g(x), pts)
    den = mp.quad(g, pts)
    return float(num / den)


def tn_mean(loc, positive):
    loc = np.asarray(loc, float)
    pos = np.asarray(positive, bool)
    a = np.where(pos, -loc, -np.inf)
    b = np.where(pos, np.inf, -loc)
    return truncnorm.mean(a, b, loc=loc, scale=1.0)


# ---------------------------------------------------------------------------
# variational updates, dense and loop based


def _send_recv(state, blocks):
    T, _, n = state.mu_eff.shape
    s = np.zeros((T, n))
    r = np.zeros((T, n))
    for b, (role, _) in enumerate(blocks):
        if role in ("s", "u"):
            s += state.mu_eff[:, b]
        if role in ("r", "u"):
            r += state.mu_eff[:, b]
    return s, r


def _vec(M, n, directed):
    return np.array([M[i, j] for (i, j) in dyads(n, directed)])


def dense_q3(state, data):
    n, directed = data.n, data.directed
    S, R = design_S_R(n, directed)
    s, r = _send_recv(state, data.blocks)
    loc, Ebar = [], []
    for t in range(data.T):
        l = data.X[t] @ state.mu_m + S @ s[t] + R @ r[t] + _vec(state.M_R[t], n, directed)
        loc.append(l)
        Ebar.append(tn_mean(l, _vec(data.A[t], n, directed) > 0.5))
    return np.array(loc), np.array(Ebar)


def dense_q1(state, data):
    n, directed = data.n, data.directed
    S, R = design_S_R(n, directed)
    s, r = _send_recv(state, data.blocks)
    pri = data.spec.priors
    p = data.p
    prec = np.diag([1 / pri.sigma2_beta] * data.p1 + [1 / pri.sigma2_theta] * (p - data.p1))
    rhs = np.zeros(p)
    for t in range(data.T):
        Xt = data.X[t]
        prec = prec + Xt.T @ Xt
        y = _vec(state.E_bar[t], n, directed) - S @ s[t] - R @ r[t] - _vec(state.M_R[t], n, directed)
        rhs += Xt.T @ y
    Sig = np.linalg.inv(prec)
    return Sig @ rhs, Sig


def effect_design(data):
    S, R = design_S_R(data.n, data.directed)
    parts = {"s": S, "r": R, "u": S + R}
    return np.hstack([parts[role] for role, _ in data.blocks])


def dense_q4(state, data, jitter=1e-6):
    n, directed = data.n, data.directed
    Z = effect_design(data)
    K = len(data.blocks)
    mus, Sigs = [], []
    om = [b for b, (_, pr) in enumerate(data.blocks) if pr == "omega"]
    for t in range(data.T):
        prior = np.zeros((K * n, K * n))
        if om:
            W = state.a_omega * np.linalg.inv(state.B_omega)
            idx = np.concatenate([np.arange(b * n, (b + 1) * n) for b in om])
            prior[np.ix_(idx, idx)] = np.kron(W, np.eye(n))
        for b, (_, pr) in enumerate(data.blocks):
            if pr == "omega":
                continue
            a, bb = (state.a_r, state.b_r) if pr == "tau_r2" else (state.a_s, state.b_s)
            sl = slice(b * n, (b + 1) * n)
            prior[sl, sl] = (a / bb) * np.linalg.inv(data.H[pr][t] + jitter * np.eye(n))
        prec = Z.T @ Z + prior
        y = _vec(state.E_bar[t], n, directed) - data.X[t] @ state.mu_m - _vec(state.M_R[t], n, directed)
        Sig = np.linalg.inv(prec)
        mus.append((Sig @ (Z.T @ y)).reshape(K, n))
        Sigs.append(Sig)
    return np.array(mus), np.array(Sigs)


def dense_q5(state, data):
    n = data.n
    S, R = design_S_R(n, True)
    P, pairs = pair_incidence(n)
    s, r = _send_recv(state, data.blocks)
    ratio = state.b_R / state.a_R
    s2 = ratio / (1 + 2 * ratio)
    out = np.zeros((data.T, n, n))
    for t in range(data.T):
        y = _vec(state.E_bar[t], n, True) - data.X[t] @ state.mu_m - S @ s[t] - R @ r[t]
        pair_means = s2 * (P.T @ y)
        for (i, j), v in zip(pairs, pair_means):
            out[t, i, j] = out[t, j, i] = v
    return out, s2


def dense_q2(state, data, jitter=1e-6):
    pri = data.spec.priors
    n, T = data.n, data.T
    res = {}
    for b, (_, pr) in enumerate(data.blocks):
        if pr == "omega":
            continue
        tot = 0.0
        for t in range(T):
            Hi = np.linalg.inv(data.H[pr][t] + jitter * np.eye(n))
            sl = slice(b * n, (b + 1) * n)
            m = state.mu_eff[t, b]
            tot += np.trace(state.Sigma_eff[t][sl, sl] @ Hi) + m @ Hi @ m
        a0, b0 = (pri.a_r0, pri.b_r0) if pr == "tau_r2" else (pri.a_s0, pri.b_s0)
        res[pr] = (a0 + n * T / 2, b0 + tot / 2)
    om = [b for b, (_, pr) in enumerate(data.blocks) if pr == "omega"]
    if om:
        B = np.array(pri.B_omega0, float)
        for t in range(T):
            for i in range(n):
                ix = [om[0] * n + i, om[1] * n + i]
                m = state.mu_eff[t, om, i]
                B = B + state.Sigma_eff[t][np.ix_(ix, ix)] + np.outer(m, m)
        res["omega"] = (pri.a_omega0 + n * T, B)
    return res


def dense_q6(state, data):
    pri = data.spec.priors
    n, T = data.n, data.T
    tot = 0.0
    for t in range(T):
        for i in range(n):
            for j in range(i + 1, n):
                tot += state.sigma2_R_tilde + state.M_R[t, i, j] ** 2
    return pri.a_R0 + T * n * (n - 1) / 4, pri.b_R0 + tot / 2


# ---------------------------------------------------------------------------
# plain probit VB for the reduction check

def probit_vb(X, y, prior_var, iters=2000, tol=1e-13):
    """Mean-field VB for Bayesian probit regression with N(0, prior_var I) prior."""
    p = X.shape[1]
    Sig = np.linalg.inv(np.eye(p) / prior_var + X.T @ X)
    mu = np.zeros(p)
    for _ in range(iters):
        z = tn_mean(X @ mu, y > 0.5)
        new = Sig @ (X.T @ z)
        if np.max(np.abs(new - mu)) < tol:
            mu = new
            break
        mu = new
    return mu
