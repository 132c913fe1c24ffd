import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectopo.errors import DomainError, ParameterError
from spectopo.families import path
from spectopo.maxcal import (
    Boltzmann,
    GaussianMI,
    SourceModel,
    Vacuum,
    conservation_residual,
    fisher_metric_diag,
    fixed_point_solve,
    geometric_term,
    hessian_and_gap,
    jacobian_analysis,
    leakage_diagnostic,
    scalar_fixed_point_oracle,
    source_eval,
    stability_report,
)
from spectopo.spectral import eigendecompose

H_STAR = 0.1547423


@pytest.fixture(scope="module")
def p8():
    model = GaussianMI(2.0, 1.0, 1.0)
    return model, fixed_point_solve(np.ones(8), model)


class TestTerms:
    def test_gaussian_source(self):
        assert source_eval(GaussianMI(), [0.1547])[0] == pytest.approx(1 / 1.1547, abs=1e-12)
        assert source_eval(GaussianMI(), [0.1547])[0] == pytest.approx(0.8661, abs=1e-4)

    def test_vacuum_and_boltzmann(self):
        assert not source_eval(Vacuum(), np.ones(4)).any()
        assert source_eval(Boltzmann(1.0), [0.3], [1.0])[0] == 0.0

    def test_geometric_term(self):
        assert geometric_term([1 / math.e], [1.0])[0] == pytest.approx(0.0, abs=1e-15)
        assert geometric_term([2.0], [2.0])[0] == -1.0
        assert geometric_term([0.1547], [1.0])[0] == pytest.approx(-math.log(0.1547) - 1, abs=1e-15)
        assert geometric_term([0.1547], [1.0])[0] == pytest.approx(0.8662, abs=1e-4)

    def test_fisher(self):
        np.testing.assert_allclose(fisher_metric_diag([1.0, 0.5]), [0.5, 2.0])
        assert fisher_metric_diag([0.1547])[0] == pytest.approx(20.89, abs=1e-2)

    @pytest.mark.parametrize("bad", [[0.0], [-1.0], [np.nan]])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            geometric_term(bad, [1.0])
        with pytest.raises(DomainError):
            fisher_metric_diag(bad)

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            GaussianMI(sigma2=0)
        with pytest.raises(ParameterError):
            GaussianMI(mu2=-1)
        with pytest.raises(ParameterError):
            GaussianMI(w=[-1.0])
        with pytest.raises(ParameterError):
            Boltzmann(kT=0)
        with pytest.raises(ParameterError):
            fixed_point_solve([1.0], GaussianMI(), tol=0)
        with pytest.raises(ParameterError):
            fixed_point_solve([1.0], GaussianMI(), damping=1.5)
        with pytest.raises(ParameterError):
            fixed_point_solve([1.0, 1.0], GaussianMI(), lambdas=[0.0])

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.0, 10.0), st.floats(0.05, 10.0), st.floats(0.0, 5.0), st.floats(1e-3, 10.0))
    def test_derivative_matches_finite_difference(self, mu2, sigma2, w, h):
        m = GaussianMI(mu2, sigma2, w)
        eps = 1e-6 * max(h, 1e-3)
        fd = (m.evaluate(np.array([h + eps]), None) - m.evaluate(np.array([h - eps]), None)) / (2 * eps)
        an = m.diag_derivative(np.array([h]), None)
        assert an[0] == pytest.approx(fd[0], rel=1e-6, abs=1e-12)


class TestFixedPoint:
    def test_p8(self, p8):
        _, rep = p8
        assert rep.converged
        np.testing.assert_allclose(rep.h_star, H_STAR, atol=5e-7)
        assert rep.residual_inf <= 1e-12

    def test_oracle_agreement(self, p8):
        _, rep = p8
        oracle = scalar_fixed_point_oracle()
        assert oracle == pytest.approx(math.exp(-1 - 1 / (1 + oracle)), abs=1e-15)
        assert np.max(np.abs(rep.h_star - oracle)) <= 1e-12

    def test_vacuum_one_step(self):
        h0 = np.array([0.5, 1.0, 3.0])
        rep = fixed_point_solve(h0, Vacuum(), max_iter=1)
        assert np.array_equal(rep.h_star, h0 * np.exp(-1.0))
        assert fixed_point_solve(h0, Vacuum()).iterations == 2

    def test_boltzmann_restriction(self):
        lam = np.linspace(0.0, 6.0, 41)
        for kT, Z in ((1.0, 1.0), (0.5, 3.0), (2.5, 0.2)):
            m = Boltzmann(kT, Z)
            rep = fixed_point_solve(m.prior(lam.size), m, lam)
            np.testing.assert_allclose(rep.h_star, np.exp(-lam / kT) / Z, rtol=0, atol=1e-12)

    def test_non_convergence_reported(self):
        rep = fixed_point_solve(np.ones(3), GaussianMI(), max_iter=3)
        assert not rep.converged and rep.iterations == 3

    def test_damping_reaches_same_point(self, p8):
        rep = fixed_point_solve(np.ones(8), GaussianMI(), damping=0.5)
        np.testing.assert_allclose(rep.h_star, p8[1].h_star, atol=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.0, 8.0), st.floats(0.1, 5.0), st.lists(st.floats(0.0, 3.0), min_size=1, max_size=12))
    def test_residual_small(self, mu2, sigma2, w):
        m = GaussianMI(mu2, sigma2, np.array(w))
        rep = fixed_point_solve(np.ones(len(w)), m)
        assert rep.converged and rep.residual_inf <= 1e-12


class TestStability:
    def test_jacobian_p8(self, p8):
        model, rep = p8
        j = jacobian_analysis(rep, model)
        assert j.spectral_radius == pytest.approx(0.116048, abs=1e-6)
        assert j.trace == pytest.approx(0.92839, abs=1e-5)
        assert j.det_abs < 1

    def test_single_mode(self):
        m = GaussianMI()
        rep = fixed_point_solve([1.0], m)
        assert jacobian_analysis(rep, m).DF[0, 0] == pytest.approx(2 * 0.1547 / (2 * 1.1547**2), abs=1e-4)

    def test_mu2_zero_trace_exact(self):
        m = GaussianMI(0.0, 1.0, 1.0)
        assert jacobian_analysis(fixed_point_solve(np.ones(8), m), m).trace == 0.0

    def test_hessian_and_residual_p8(self, p8):
        model, rep = p8
        hes = hessian_and_gap(rep, model)
        D = conservation_residual(rep, model)
        np.testing.assert_allclose(hes.H_diag, -5.71241, atol=1e-5)
        assert hes.gap == pytest.approx(5.71241, abs=1e-5)
        assert np.max(np.abs(D - hes.H_diag)) <= 1e-12
        assert leakage_diagnostic(rep, model, 8) == pytest.approx(8 * 5.71241, abs=1e-3)
        assert leakage_diagnostic(rep, model, 0) == 0.0
        with pytest.raises(ParameterError):
            leakage_diagnostic(rep, model, 9)

    def test_vacuum_residual_is_minus_e(self):
        rep = fixed_point_solve(np.ones(5), Vacuum())
        D = conservation_residual(rep, Vacuum())
        assert np.max(np.abs(D + math.e)) <= 1e-12
        assert np.max(np.abs(hessian_and_gap(rep, Vacuum()).H_diag + math.e)) <= 1e-12

    def test_marginal_source_gives_zero_gap(self):
        # dT/dh = -1/h exactly cancels the geometric curvature
        class Exact(SourceModel):
            def evaluate(self, h, lambdas):
                return -np.log(h)

            def diag_derivative(self, h, lambdas):
                return -1.0 / np.asarray(h)

        rep = fixed_point_solve(np.ones(3), Vacuum())
        rep = type(rep)(rep.h_star, rep.iterations, 0.0, True, rep.h0, rep.lambdas)
        hes = hessian_and_gap(rep, Exact())
        assert np.all(hes.H_diag == 0.0) and hes.gap == 0.0
        assert leakage_diagnostic(rep, Exact(), 3) == 0.0

    def test_non_separable_column_sums(self):
        class Coupled(SourceModel):
            separable = False

            def evaluate(self, h, lambdas):
                return 0.1 * np.full_like(h, np.sum(h))

            def jacobian(self, h, lambdas):
                return np.full((h.size, h.size), 0.1)

        m = Coupled()
        rep = fixed_point_solve(np.ones(4), m)
        D = conservation_residual(rep, m)
        np.testing.assert_allclose(D, -1.0 / rep.h_star - 0.4, atol=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.0, 10.0), st.floats(0.05, 10.0), st.lists(st.floats(0.0, 4.0), min_size=1, max_size=10),
           st.floats(0.1, 3.0))
    def test_D_equals_H_random(self, mu2, sigma2, w, h0):
        m = GaussianMI(mu2, sigma2, np.array(w))
        rep = fixed_point_solve(np.full(len(w), h0), m)
        st_ = stability_report(rep, m)
        assert np.all(np.abs(st_.D - st_.H_diag) <= 1e-12 * np.maximum(1, np.abs(st_.H_diag)))
        if mu2 * max(w) > 1e-200:  # below that the product underflows
            assert st_.trace_DF > 0
        if mu2 == 0:
            assert st_.trace_DF == 0

    def test_no_conservation_below_threshold(self):
        # mu2 * w < 8 sigma2: the residual stays bounded away from zero
        worst = np.inf
        for mu2 in np.linspace(0.0, 3.9, 14):
            for sigma2 in (0.5, 1.0, 2.0):
                for w in np.linspace(0.0, 4 * sigma2 / max(mu2, 1e-9) * 1.99, 6):
                    if mu2 * w >= 8 * sigma2:
                        continue
                    m = GaussianMI(mu2, sigma2, w)
                    rep = fixed_point_solve(np.ones(3), m)
                    worst = min(worst, np.min(np.abs(conservation_residual(rep, m))))
        assert worst > 0.5


def test_boltzmann_on_laplacian_spectrum():
    lam = eigendecompose(path(12).laplacians.L0, 12).eigenvalues
    m = Boltzmann(0.7, 2.0)
    rep = fixed_point_solve(m.prior(12), m, lam)
    np.testing.assert_allclose(rep.h_star, np.exp(-lam / 0.7) / 2.0, atol=1e-12, rtol=0)
