import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import invgamma, invwishart

from starnet.model import (
    ModelParams,
    PriorSet,
    StarModelSpec,
    UndirectedModelParams,
    assemble_dyad_covariance,
    dyad_pair_covariance,
    effect_covariances,
    icc_reciprocity,
    marginal_edge_probability,
    offdiag_positions,
    sample_role_based,
    validate_psd,
    variance_ratio_vector,
)
from starnet.netstats import build_H_directed, identity_bases
from oracles import scalar_dyad_cov

SIX_TRUTH = ModelParams(beta=[-2.5, 0.5, -2.0], theta=np.zeros(8), tau_s2=0.2, tau_r2=0.1,
                        omega=[[0.25, 0.1], [0.1, 0.5]], sigma2_R=0.5)


def random_params(rng, n):
    A = (rng.uniform(size=(n, n)) < 0.4).astype(int)
    bases = build_H_directed(A)
    L = rng.normal(size=(2, 2))
    omega = L @ L.T + 0.1 * np.eye(2)
    p = ModelParams(beta=[0.0], theta=[], tau_s2=rng.uniform(0, 1), tau_r2=rng.uniform(0, 1),
                    omega=omega, sigma2_R=rng.uniform(0, 1))
    return p, bases


class TestSpecAndPriors:
    def test_defaults(self):
        pri = PriorSet()
        assert pri.sigma2_beta == 100 and pri.a_omega0 == 4
        assert np.array_equal(pri.B_omega0_array, np.eye(2))

    @pytest.mark.parametrize("kw", [{"a_s0": 0}, {"b_R0": -1}, {"a_omega0": 3}, {"B_omega0": [[1, 2], [2, 1]]}])
    def test_invalid_priors(self, kw):
        with pytest.raises(ValueError):
            PriorSet(**kw)

    def test_design_counts(self):
        assert StarModelSpec().K == (2, 2, 1)
        assert StarModelSpec(covariance_design="identity_only").K == (1, 1, 1)
        assert StarModelSpec(covariance_design="none").K == (0, 0, 0)
        assert not StarModelSpec(covariance_design="none").has_effects
        assert StarModelSpec.undirected().K == (1, 0, 0)

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            StarModelSpec(covariance_design="dense")
        with pytest.raises(ValueError):
            StarModelSpec(stat_selection=("triangle",))
        with pytest.raises(ValueError):
            StarModelSpec(lag_depth=0)

    def test_p2_counts_lags(self):
        assert StarModelSpec(lag_depth=2).p2 == 16


class TestParams:
    def test_omega_entries(self):
        assert SIX_TRUTH.tau_s1 == 0.25 and SIX_TRUTH.tau_r1 == 0.5 and SIX_TRUTH.tau_sr1 == 0.1
        assert SIX_TRUTH.tau_s == (0.25, 0.2) and SIX_TRUTH.tau_r == (0.5, 0.1)
        assert ModelParams.sigma2_eps == 1.0

    def test_round_trip(self):
        back = ModelParams.from_dict(SIX_TRUTH.to_dict())
        assert back.to_dict() == SIX_TRUTH.to_dict()
        u = UndirectedModelParams(beta=[1.0], theta=[0.1, 0.2, 0.3], tau_s=0.4)
        assert UndirectedModelParams.from_dict(u.to_dict()).to_dict() == u.to_dict()

    def test_rejects_negative_variances(self):
        with pytest.raises(ValueError):
            ModelParams(beta=[0.0], theta=[], tau_s2=-0.1)
        with pytest.raises(ValueError):
            UndirectedModelParams(beta=[0.0], theta=[], tau_s=-1)


class TestValidatePSD:
    def test_identity_omega_valid(self):
        p = ModelParams(beta=[0.0], theta=[], omega=np.eye(2))
        assert validate_psd(p, identity_bases(3)).valid

    def test_indefinite_omega(self):
        p = ModelParams(beta=[0.0], theta=[], omega=[[1, 2], [2, 1]])
        rep = validate_psd(p, identity_bases(3))
        assert not rep.valid
        assert rep.min_eigenvalue == pytest.approx(-1.0)

    def test_simulation_truth_valid(self):
        A = np.random.default_rng(0).uniform(size=(10, 10)) < 0.1
        assert validate_psd(SIX_TRUTH, build_H_directed(A.astype(int))).valid

    def test_prior_draws_are_valid(self, rng):
        pri = PriorSet()
        bases = identity_bases(5)
        for _ in range(200):
            omega = invwishart.rvs(df=pri.a_omega0, scale=pri.B_omega0_array, random_state=rng)
            p = ModelParams(beta=[0.0], theta=[], omega=omega,
                            tau_s2=invgamma.rvs(pri.a_s0, scale=pri.b_s0, random_state=rng),
                            tau_r2=invgamma.rvs(pri.a_r0, scale=pri.b_r0, random_state=rng),
                            sigma2_R=invgamma.rvs(pri.a_R0, scale=pri.b_R0, random_state=rng))
            assert validate_psd(p, bases).valid


class TestCovarianceAssembly:
    def test_pure_noise_is_identity(self):
        p = ModelParams(beta=[0.0], theta=[])
        assert np.array_equal(assemble_dyad_covariance(p, identity_bases(4), 4), np.eye(16))

    @given(st.integers(2, 6), st.integers(0, 10**6))
    def test_matches_scalar_formula(self, n, seed):
        rng = np.random.default_rng(seed)
        p, bases = random_params(rng, n)
        C = assemble_dyad_covariance(p, bases, n)
        Ss, Sr, Ssr = effect_covariances(p, bases)
        for a in range(n * n):
            j, i = divmod(a, n)
            for b in range(n * n):
                l, k = divmod(b, n)
                if i == j or k == l:
                    continue
                ref = scalar_dyad_cov(Ss, Sr, Ssr, p.sigma2_R, i, j, k, l)
                assert C[a, b] == pytest.approx(ref, abs=1e-12)
                assert dyad_pair_covariance(p, bases, i, j, k, l) == pytest.approx(ref, abs=1e-12)

    def test_reciprocal_entry_has_pair_variance(self):
        n = 3
        p = ModelParams(beta=[0.0], theta=[], sigma2_R=0.7)
        C = assemble_dyad_covariance(p, identity_bases(n), n)
        ij = 1 * n + 0  # dyad (0,1) in column-major
        ji = 0 * n + 1  # dyad (1,0)
        assert C[ij, ji] == pytest.approx(0.7)
        assert C[ij, ij] == pytest.approx(1.7)

    def test_scale_guard(self):
        with pytest.raises(ValueError):
            assemble_dyad_covariance(SIX_TRUTH, identity_bases(65), 65)

    def test_monte_carlo_small(self, rng):
        n = 3
        p, bases = random_params(rng, n)
        draws = sample_role_based(p, bases, 100_000, rng)
        idx = offdiag_positions(n)
        emp = np.cov(draws[:, idx], rowvar=False)
        C = assemble_dyad_covariance(p, bases, n)[np.ix_(idx, idx)]
        assert np.max(np.abs(emp - C)) < 0.1


class TestScalars:
    def test_marginal_probability(self):
        assert marginal_edge_probability(0.0, 3.0, 2.0) == 0.5
        assert marginal_edge_probability(2.0, 3.0, 1.0) == pytest.approx(0.841344746, abs=1e-9)
        assert marginal_edge_probability(-2.5, 0.0, 1.0) == pytest.approx(0.00620966532, abs=1e-10)
        with pytest.raises(ValueError):
            marginal_edge_probability(0.0, 1.0, 0.0)

    def test_icc(self):
        assert icc_reciprocity(0.0) == 0.0
        assert icc_reciprocity(1.0) == 0.5
        assert icc_reciprocity(0.5) == pytest.approx(1 / 3)

    def test_variance_ratio(self):
        zero = variance_ratio_vector(ModelParams(beta=[0.0], theta=[]))
        assert zero[-1] == 1.0 and not zero[:-1].any()
        v = variance_ratio_vector(SIX_TRUTH)
        assert np.allclose(v, np.array([0.25, 0.2, 0.5, 0.1, 0.5, 1.0]) / 2.55)
        assert v.sum() == pytest.approx(1.0)
