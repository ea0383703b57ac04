import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from starnet import diagnostics as dg
from starnet.errors import ValidationError
from starnet.model import ModelParams, PriorSet, UndirectedModelParams
from starnet.simulate import sim_study_truth
from starnet.vb.state import VariationalState


def degenerate_state(n, T, K, sigma, mean=0.0):
    st_ = VariationalState.initial(T, n, 3, K, PriorSet(), True)
    st_.mu_eff = np.full((T, K, n), mean)
    st_.Sigma_eff = np.array([sigma**2 * np.eye(K * n) for _ in range(T)])
    return st_


class TestChiCdf:
    def test_closed_forms(self):
        assert dg.chi_cdf(2, 1.0, 1.0) == pytest.approx(1 - np.exp(-0.5), abs=1e-12)
        assert dg.chi_cdf(1, 1.0, 1.0) == pytest.approx(2 * norm.cdf(1.0) - 1, abs=1e-12)
        assert dg.chi_cdf(7, 2.0, 0.0) == 0.0

    @given(st.integers(1, 200), st.floats(0.05, 5.0))
    def test_monotone_in_epsilon(self, dim, sigma):
        grid = np.linspace(0, 10 * sigma * np.sqrt(dim), 50)
        p = dg.chi_cdf(dim, sigma, grid)
        assert np.all(np.diff(p) >= 0)
        assert 0 <= p[0] and p[-1] <= 1

    def test_scale_invariance(self):
        eps = np.linspace(0, 5, 11)
        np.testing.assert_allclose(dg.chi_cdf(10, 2.0, 2 * eps), dg.chi_cdf(10, 1.0, eps), atol=1e-14)

    def test_monte_carlo_agreement(self, rng):
        for dim in (1, 2, 10):
            norms = np.linalg.norm(rng.standard_normal((100_000, dim)) * 0.7, axis=1)
            grid = np.quantile(norms, np.linspace(0.01, 0.99, 40))
            emp = np.searchsorted(np.sort(norms), grid, side="right") / norms.size
            assert np.max(np.abs(emp - dg.chi_cdf(dim, 0.7, grid))) < 0.01

    def test_rejects_bad_input(self):
        with pytest.raises(ValidationError):
            dg.chi_cdf(0, 1.0, 1.0)
        with pytest.raises(ValidationError):
            dg.chi_cdf(2, 0.0, 1.0)
        with pytest.raises(ValidationError):
            dg.chi_cdf(2, 1.0, -1.0)


class TestBallCurves:
    def test_endpoints(self):
        state = degenerate_state(5, 3, 4, 0.5, mean=0.1)
        curves = dg.posterior_ball_curves(state, draws=2000, seed=1)
        assert len(curves) == 3
        for c in curves:
            assert c.probabilities[0] == 0.0
            assert c.probabilities[-1] == 1.0
            assert c.label in (1, 2, 3)

    def test_degenerate_state_matches_chi(self):
        n, sigma, draws = 6, 0.8, 10_000
        state = degenerate_state(n, 1, 4, sigma)
        grid = np.linspace(0, 4 * sigma * np.sqrt(4 * n), 60)
        (curve,) = dg.posterior_ball_curves(state, grid, draws=draws, seed=3)
        ref = dg.chi_cdf(4 * n, sigma, grid)
        se = np.sqrt(ref * (1 - ref) / draws)
        # sup over 60 correlated points: allow a little headroom beyond 2 SE where SE is ~0
        assert np.all(np.abs(curve.probabilities - ref) <= 2 * se + 2e-3)

    def test_seeded(self):
        state = degenerate_state(4, 2, 2, 1.0)
        a = dg.sample_effect_norms(state, 1000, seed=9)
        b = dg.sample_effect_norms(state, 1000, seed=9)
        np.testing.assert_array_equal(a, b)

    def test_requires_effects_and_draws(self):
        state = degenerate_state(4, 2, 0, 1.0)
        with pytest.raises(ValidationError, match="no random effects"):
            dg.sample_effect_norms(state, 1000)
        with pytest.raises(ValidationError):
            dg.sample_effect_norms(degenerate_state(4, 2, 2, 1.0), 10)

    def test_curve_invariants(self):
        with pytest.raises(ValidationError):
            dg.BallCurve(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.5, 1.0]), 1)
        with pytest.raises(ValidationError):
            dg.BallCurve(np.array([0.0, 1.0]), np.array([0.6, 0.5]), 1)
        with pytest.raises(ValidationError):
            dg.BallCurve(np.array([0.0, 1.0]), np.array([0.0, 1.5]), 1)

    def test_quantile(self):
        c = dg.BallCurve(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.4, 0.8]), "x")
        assert c.quantile(0.5) == pytest.approx(1.25)
        assert c.quantile(0.0) == 0.0
        assert c.quantile(0.95) == 2.0


class TestComparators:
    def test_default_p_grid(self):
        assert dg.DEFAULT_P_VALUES == (0.05, 0.1, 0.15, 0.2, 0.25, 0.3)

    def test_sigma_formula(self):
        assert dg.comparator_sigma2(0.2, 0.5, 2, 2) == pytest.approx(0.2 * 1.5 / (0.8 * 4))

    def test_larger_p_shifts_right(self):
        curves = dg.comparator_curves(20, 2, 2, 0.3)
        medians = [c.quantile(0.5) for c in curves]
        assert medians == sorted(medians)
        for lo, hi in zip(curves, curves[1:]):
            assert np.all(lo.probabilities >= hi.probabilities - 1e-15)

    def test_dimension_and_labels(self):
        grid = np.linspace(0, 3, 7)
        (c,) = dg.comparator_curves(5, 1, 1, 0.0, [0.5], grid)
        np.testing.assert_allclose(c.probabilities, dg.chi_cdf(10, np.sqrt(0.5), grid))
        assert c.label == 0.5

    def test_rejects_bad_p(self):
        with pytest.raises(ValidationError):
            dg.comparator_sigma2(1.0, 0.0, 1, 1)

    def test_sigma2_R_proxy_is_pair_variance(self, rng):
        M = np.triu(rng.normal(size=(3, 5, 5)), 1)
        M = M + M.transpose(0, 2, 1)
        iu = np.triu_indices(5, 1)
        assert dg.sigma2_R_proxy(M) == pytest.approx(np.var(M[:, iu[0], iu[1]]))

    def test_component_counts(self):
        assert dg.component_counts((("s", "omega"), ("r", "omega"), ("s", "tau_s2"), ("r", "tau_r2"))) == (2, 2)
        assert dg.component_counts((("u", "tau_s"),)) == (1, 0)


class TestAttenuation:
    def test_values(self):
        assert dg.attenuation_factor(ModelParams([0.0], [0.0])) == 1.0
        p = ModelParams([0.0], [0.0], tau_s2=1.0, tau_r2=1.0, sigma2_R=1.0)
        assert dg.attenuation_factor(p) == pytest.approx(2.0)
        assert dg.attenuation_factor(sim_study_truth(True)) == pytest.approx(np.sqrt(2.55), abs=1e-12)
        assert dg.attenuation_factor(sim_study_truth(True)) == pytest.approx(1.597, abs=1e-3)

    def test_undirected(self):
        p = UndirectedModelParams([0.0], [0.0], tau_s=1.5)
        assert dg.attenuation_factor(p) == pytest.approx(2.0)


def test_csv_round_trip(tmp_path):
    grid = np.linspace(0, 2, 5)
    curves = [dg.BallCurve(grid, dg.chi_cdf(3, s, grid), lab) for s, lab in ((0.5, 1), (1.0, 2))]
    comp = dg.comparator_curves(4, 1, 1, 0.2, (0.05, 0.3), grid)
    dg.write_curves_csv(tmp_path / "ball.csv", curves, "posterior")
    dg.write_curves_csv(tmp_path / "comp.csv", comp, "comparator")
    for path, src, kind in ((tmp_path / "ball.csv", curves, "posterior"), (tmp_path / "comp.csv", comp, "comparator")):
        back = dg.read_curves_csv(path)
        assert [k for k, _ in back] == [kind] * len(src)
        for (_, c), ref in zip(back, src):
            assert c.label == ref.label
            np.testing.assert_array_equal(c.epsilon_grid, ref.epsilon_grid)
            np.testing.assert_array_equal(c.probabilities, ref.probabilities)
