import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from starnet.model import StarModelSpec  # noqa: E402
from starnet.netcore import CovariateTensor, DynamicNetwork  # noqa: E402
from starnet.vb.design import prepare  # noqa: E402
from starnet.vb.state import VariationalState  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_network(rng, n, T, directed=True, density=0.3):
    A = (rng.uniform(size=(T + 1, n, n)) < density).astype(np.int8)
    if not directed:
        A = np.triu(A, 1)
        A = A + A.transpose(0, 2, 1)
    for t in range(T + 1):
        np.fill_diagonal(A[t], 0)
    return DynamicNetwork(A, directed=directed)


def random_covariates(rng, n, T, p=2):
    X = rng.normal(size=(T, p, n, n))
    X[:, 0] = 1.0
    return CovariateTensor(X, tuple(f"x{k}" for k in range(p)))


def random_spd(rng, d, scale=1.0):
    G = rng.normal(size=(d, d))
    return scale * (G @ G.T / d + np.eye(d))


def random_problem(rng, n, T, directed=True, design="full"):
    """A prepared fit problem and a random (but valid) variational state for it."""
    spec = StarModelSpec(covariance_design=design) if directed else StarModelSpec.undirected(covariance_design=design)
    net = random_network(rng, n, T, directed)
    cov = random_covariates(rng, n, T)
    data = prepare(net, cov, spec)
    K = len(data.blocks)
    st = VariationalState.initial(data.T, n, data.p, K, spec.priors, data.has_R)
    st.mu_m = rng.normal(scale=0.3, size=data.p)
    st.mu_eff = rng.normal(scale=0.5, size=(data.T, K, n))
    st.Sigma_eff = np.array([random_spd(rng, K * n, 0.1) for _ in range(data.T)])
    E = rng.normal(size=(data.T, n, n))
    if not directed:
        E = np.triu(E, 1) + np.triu(E, 1).transpose(0, 2, 1)
    st.E_bar = E
    if data.has_R:
        M = np.triu(rng.normal(scale=0.3, size=(data.T, n, n)), 1)
        st.M_R = M + M.transpose(0, 2, 1)
        st.a_R, st.b_R = rng.uniform(1, 5), rng.uniform(0.5, 3)
        st.sigma2_R_tilde = rng.uniform(0.05, 0.3)
    st.a_s, st.b_s = rng.uniform(1, 5), rng.uniform(0.5, 3)
    st.a_r, st.b_r = rng.uniform(1, 5), rng.uniform(0.5, 3)
    st.a_omega = rng.uniform(4, 10)
    st.B_omega = random_spd(rng, 2)
    return data, st


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
