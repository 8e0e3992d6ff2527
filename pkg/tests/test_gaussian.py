import math

import numpy as np
import pytest

from igachan.errors import DomainError
from igachan.gaussian import (
    DiagGaussian,
    GaussianExpectation,
    GaussianNatural,
    expectation_to_natural,
    kl_divergence,
    m_project_to_diag,
    natural_to_expectation,
)

from conftest import random_spd_natural


class TestConversions:
    def test_zero_mean_identity(self):
        p = GaussianNatural(np.zeros(2), -np.eye(2))
        e = natural_to_expectation(p)
        assert np.allclose(e.mu, 0, atol=1e-15)
        assert np.allclose(e.M, np.eye(2), atol=1e-15)

    def test_scalar_forced_values(self):
        # theta = 1, Theta = -2  ->  mu = 0.5, M = mu^2 + 1/2 = 0.75
        p = GaussianNatural(np.array([1.0]), np.array([[-2.0]]))
        e = natural_to_expectation(p)
        assert abs(e.mu[0] - 0.5) < 1e-15
        assert abs(e.M[0, 0] - 0.75) < 1e-15

    def test_expectation_to_natural_identity(self):
        p = GaussianExpectation(np.zeros(3), np.eye(3))
        q = expectation_to_natural(p)
        assert np.allclose(q.theta, 0, atol=1e-15)
        assert np.allclose(q.Theta, -np.eye(3), atol=1e-15)

    def test_expectation_to_natural_scalar(self):
        p = GaussianExpectation(np.array([0.5]), np.array([[0.75]]))
        q = expectation_to_natural(p)
        assert abs(q.theta[0] - 1.0) < 1e-14
        assert abs(q.Theta[0, 0] + 2.0) < 1e-14

    @pytest.mark.parametrize("trial", range(5))
    def test_round_trip(self, rng, trial):
        theta, Theta = random_spd_natural(rng, 8)
        p = GaussianNatural(theta, Theta)
        q = expectation_to_natural(natural_to_expectation(p))
        assert np.abs(q.theta - p.theta).max() <= 1e-12 * np.abs(p.theta).max()
        assert np.abs(q.Theta - p.Theta).max() <= 1e-12 * np.abs(p.Theta).max()

    def test_round_trip_moderately_conditioned(self, rng):
        # at an eigenvalue spread of 1e6 the double inversion loses about
        # kappa * eps ~ 2e-10 relative accuracy; assert the achievable bound
        n = 8
        q_mat, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        spec = np.logspace(0, 6, n)
        prec = (q_mat * spec) @ q_mat.conj().T
        p = GaussianNatural(rng.standard_normal(n), -(prec + prec.conj().T) / 2)
        q = expectation_to_natural(natural_to_expectation(p))
        assert np.abs(q.Theta - p.Theta).max() <= 1e-9 * np.abs(p.Theta).max()
        assert np.abs(q.theta - p.theta).max() <= 1e-9 * max(np.abs(p.theta).max(), 1.0)

    def test_rejects_indefinite(self):
        with pytest.raises(DomainError, match="eigenvalue"):
            GaussianNatural(np.zeros(2), np.diag([1.0, -1.0]))

    def test_rejects_non_hermitian(self):
        bad = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(DomainError, match="Hermitian"):
            GaussianNatural(np.zeros(2), -bad)


class TestKl:
    def test_self_divergence_zero(self, rng):
        theta, Theta = random_spd_natural(rng, 5)
        p = GaussianNatural(theta, Theta)
        assert abs(kl_divergence(p, p)) <= 1e-12

    def test_scalar_closed_form(self):
        # CN(0,1) vs CN(0,2): log(2) - 1/2
        p1 = GaussianNatural(np.zeros(1), -np.eye(1))
        p0 = GaussianNatural(np.zeros(1), -0.5 * np.eye(1))
        assert abs(kl_divergence(p1, p0) - (math.log(2.0) - 0.5)) <= 1e-12

    def test_nonnegative(self, rng):
        for _ in range(10):
            p1 = GaussianNatural(*random_spd_natural(rng, 6))
            p0 = GaussianNatural(*random_spd_natural(rng, 6))
            assert kl_divergence(p1, p0) >= -1e-12

    def test_monte_carlo_oracle(self, rng):
        # sample from P1, average the log-density ratio, compare at 3 SE
        n, draws = 6, 120_000
        p1 = GaussianNatural(*random_spd_natural(rng, n))
        p0 = GaussianNatural(*random_spd_natural(rng, n))
        exact = kl_divergence(p1, p0)

        Sigma1 = np.linalg.inv(-p1.Theta)
        mu1 = Sigma1 @ p1.theta
        L = np.linalg.cholesky((Sigma1 + Sigma1.conj().T) / 2)
        z = (rng.standard_normal((draws, n)) + 1j * rng.standard_normal((draws, n)))
        x = mu1[None, :] + (z / np.sqrt(2)) @ L.T

        def log_unnorm(p, xs):
            quad = np.einsum("ij,jk,ik->i", xs.conj(), p.Theta, xs).real
            return 2 * np.real(xs @ p.theta.conj()) + quad

        # normalization constants via the covariance form
        def log_norm(p):
            prec = -p.Theta
            sign, logdet = np.linalg.slogdet(prec)
            mu = np.linalg.solve(prec, p.theta)
            return n * np.log(np.pi) - logdet + float(np.real(np.vdot(mu, prec @ mu)))

        samples = (log_unnorm(p1, x) - log_norm(p1)) - (log_unnorm(p0, x) - log_norm(p0))
        est = samples.mean()
        se = samples.std(ddof=1) / np.sqrt(draws)
        assert abs(est - exact) <= 3 * se

    def test_dimension_mismatch(self, rng):
        p1 = GaussianNatural(*random_spd_natural(rng, 3))
        p0 = GaussianNatural(*random_spd_natural(rng, 4))
        with pytest.raises(DomainError):
            kl_divergence(p1, p0)


class TestMProjection:
    def test_idempotent_on_diagonal_points(self, rng):
        lam = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        Lam = rng.uniform(0.5, 2.0, 4)
        d = DiagGaussian(lam, Lam)
        proj = m_project_to_diag(d.as_natural())
        assert np.abs(proj.mean - d.mean).max() <= 1e-13
        assert np.abs(proj.variance - d.variance).max() <= 1e-13

    def test_correlated_pair(self):
        # mu = 0, Sigma = [[1, .5], [.5, 1]] projects to unit variances
        Sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
        p = expectation_to_natural(GaussianExpectation(np.zeros(2), Sigma))
        proj = m_project_to_diag(p)
        assert np.abs(proj.lam).max() <= 1e-14
        assert np.abs(proj.Lam - 1.0).max() <= 1e-14

    def test_moment_preservation(self, rng):
        p = GaussianNatural(*random_spd_natural(rng, 6))
        e = natural_to_expectation(p)
        proj = m_project_to_diag(p)
        assert np.abs(proj.mean - e.mu).max() <= 1e-12
        assert np.abs(proj.variance - np.real(np.diag(e.Sigma))).max() <= 1e-12

    def test_local_minimality(self, rng):
        # perturbing any projected coordinate strictly increases the divergence
        p = GaussianNatural(*random_spd_natural(rng, 6))
        proj = m_project_to_diag(p)
        base = kl_divergence(p, proj.as_natural())
        delta = 1e-3
        for i in range(proj.dim):
            for d_lam, d_Lam in [(delta, 0), (-delta, 0), (1j * delta, 0),
                                 (-1j * delta, 0), (0, delta), (0, -delta)]:
                lam = proj.lam.copy()
                Lam = proj.Lam.copy()
                lam[i] += d_lam * max(1.0, abs(lam[i]))
                Lam[i] *= 1.0 + d_Lam
                perturbed = DiagGaussian(lam, Lam)
                assert kl_divergence(p, perturbed.as_natural()) > base

    def test_diag_requires_positive_precision(self):
        with pytest.raises(DomainError):
            DiagGaussian(np.zeros(2), np.array([1.0, 0.0]))
