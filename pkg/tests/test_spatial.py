"""Tests for sites, correlation kernels, Gaussian algebra, observations and kriging."""
from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import multivariate_normal, poisson

from seqeb.errors import ConfigError, DataError, DomainError, FactorizationError, SingularityWarning
from seqeb.spatial.covariates import CovariateBuilder
from seqeb.spatial.factory import create_family, create_kernel
from seqeb.spatial.gaussian import factorize, mvn_logpdf, mvn_sample
from seqeb.spatial.kernels import ExponentialKernel, SiteSet, build_correlation, cross_correlation
from seqeb.spatial.observation import (
    GaussianFamily,
    ObservationBatch,
    ObservationModel,
    PoissonFamily,
    batch_loglik,
    obs_loglik,
)
from seqeb.spatial.prediction import conditional_field


class TestSiteSet:
    """Test site layouts."""

    def test_one_dimensional_coords(self) -> None:
        """Test that a flat coordinate vector becomes a column."""
        sites = SiteSet(np.array([0.0, 0.5, 1.0]))

        assert sites.coords.shape == (3, 1)
        assert sites.ids == ("0", "1", "2")
        assert sites.distances[0, 2] == pytest.approx(1.0)

    def test_equidistant(self) -> None:
        """Test the study layout of equally spaced sites."""
        sites = SiteSet.equidistant(11)

        assert sites.n == 11
        assert sites.dim == 1
        assert sites.distances[0, 1] == pytest.approx(0.1)

    def test_ids_length_checked(self) -> None:
        """Test that ids must match the coordinates."""
        with pytest.raises(DomainError):
            SiteSet(np.zeros((2, 2)), ("a",))

    def test_duplicates_and_subset(self) -> None:
        """Test duplicate detection and subsetting."""
        sites = SiteSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), ("a", "b", "c"))

        assert sites.has_duplicates()
        assert not sites.subset([0, 1]).has_duplicates()
        assert sites.subset([1, 2]).ids == ("b", "c")


class TestCorrelation:
    """Test R(phi)."""

    def test_exponential_entries(self) -> None:
        """Test R_ij = exp(-d_ij / phi) with a unit diagonal."""
        sites = SiteSet.equidistant(3)
        R = build_correlation(sites, 0.4)

        assert np.allclose(np.diag(R), 1.0)
        assert R[0, 1] == pytest.approx(np.exp(-0.5 / 0.4))
        assert R[0, 2] == pytest.approx(np.exp(-1.0 / 0.4))
        assert np.array_equal(R, R.T)

    @pytest.mark.parametrize("phi", [0.0, -0.1, float("nan")])
    def test_nonpositive_phi(self, phi: float) -> None:
        """Test that phi must be positive."""
        with pytest.raises(DomainError):
            build_correlation(SiteSet.equidistant(3), phi)

    def test_duplicates_warn(self) -> None:
        """Test that coincident sites warn and a nugget restores definiteness."""
        sites = SiteSet(np.array([0.0, 0.0, 1.0]))

        with pytest.warns(SingularityWarning):
            R = build_correlation(sites, 0.4)
        with pytest.raises(FactorizationError) as exc_info:
            factorize(R)
        assert exc_info.value.pivot >= 1

        with pytest.warns(SingularityWarning):
            R = build_correlation(sites, 0.4, nugget=1e-6)
        assert factorize(R).n == 3

    def test_cross_correlation(self) -> None:
        """Test cross-correlations between two site sets."""
        a = SiteSet(np.array([0.0]))
        b = SiteSet(np.array([0.2, 0.6]))

        C = cross_correlation(a, b, 0.4, ExponentialKernel())
        assert C.shape == (1, 2)
        assert C[0, 1] == pytest.approx(np.exp(-1.5))


class TestFactorization:
    """Test Cholesky factorization and Gaussian densities."""

    def test_reconstruction(self) -> None:
        """Test that L L' reproduces R on the study layout."""
        R = build_correlation(SiteSet.equidistant(11), 0.4)
        fac = factorize(R, phi=0.4)

        assert np.max(np.abs(fac.reconstruct() - R)) < 1e-10
        assert fac.logdet == pytest.approx(np.linalg.slogdet(R)[1], abs=1e-10)
        assert np.allclose(fac.whitener @ fac.lower, np.eye(11))

    def test_solve_matches_dense(self, rng: np.random.Generator) -> None:
        """Test R^-1 v for a vector and for matrix columns against a dense reference."""
        R = build_correlation(SiteSet.equidistant(11), 0.4)
        fac = factorize(R, phi=0.4)
        V = rng.normal(size=(11, 4))

        assert np.allclose(fac.solve(V), np.linalg.inv(R) @ V)
        assert np.allclose(R @ fac.solve(V[:, 0]), V[:, 0])

    def test_not_symmetric(self) -> None:
        """Test rejection of an asymmetric matrix."""
        with pytest.raises(DomainError, match="symmetric"):
            factorize(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_not_square(self) -> None:
        """Test rejection of a non-square matrix."""
        with pytest.raises(DomainError):
            factorize(np.ones((2, 3)))

    def test_logpdf_matches_dense(self, rng: np.random.Generator) -> None:
        """Test the log density against a dense reference."""
        R = build_correlation(SiteSet.equidistant(11), 0.4)
        fac = factorize(R)
        mean = rng.normal(size=11)
        x = rng.normal(size=(5, 11))

        expected = multivariate_normal.logpdf(x, mean=mean, cov=0.7 * R)
        assert np.allclose(mvn_logpdf(x, mean, 0.7, fac), expected, rtol=0, atol=1e-9)
        assert mvn_logpdf(x[0], mean, 0.7, fac) == pytest.approx(expected[0], abs=1e-9)

    def test_logpdf_stationary_at_mean(self) -> None:
        """Test a vanishing finite-difference gradient at the mean."""
        fac = factorize(build_correlation(SiteSet.equidistant(4), 0.3))
        mean = np.array([0.1, -0.2, 0.3, 0.0])
        h = 1e-5
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            grad = (mvn_logpdf(mean + e, mean, 1.0, fac) - mvn_logpdf(mean - e, mean, 1.0, fac)) / (2 * h)
            assert abs(grad) < 1e-6

    def test_sample_zero_scale(self, rng: np.random.Generator) -> None:
        """Test that sigma2 = 0 returns the mean exactly."""
        fac = factorize(build_correlation(SiteSet.equidistant(3), 0.4))
        mean = np.array([1.0, 2.0, 3.0])

        assert np.array_equal(mvn_sample(mean, 0.0, fac, rng), mean)
        assert mvn_sample(mean, 0.0, fac, rng, size=4).shape == (4, 3)

    def test_sample_covariance(self, rng: np.random.Generator) -> None:
        """Test that draws have covariance sigma2 R."""
        R = build_correlation(SiteSet.equidistant(3), 0.4)
        draws = mvn_sample(np.zeros(3), 2.0, factorize(R), rng, size=40000)

        assert np.allclose(np.cov(draws.T), 2.0 * R, atol=0.06)

    def test_negative_scale(self, rng: np.random.Generator) -> None:
        """Test that a negative scale is rejected."""
        fac = factorize(np.eye(2))
        with pytest.raises(DomainError):
            mvn_logpdf(np.zeros(2), np.zeros(2), -1.0, fac)


class TestObservations:
    """Test observation families and likelihoods."""

    def test_poisson_loglik(self) -> None:
        """Test the canonical form against the Poisson pmf."""
        x = np.array([0.2, -0.5, 1.0])
        y = np.array([1.0, 0.0, 4.0])
        tau = np.array([1.0, 2.0, 3.0])
        batch = ObservationBatch(t=1, y=y, tau=tau, mask=np.ones(3, dtype=bool))

        expected = poisson.logpmf(y, tau * np.exp(x)).sum()
        assert batch_loglik(batch, x, PoissonFamily()) == pytest.approx(expected, abs=1e-12)

    def test_gaussian_loglik(self) -> None:
        """Test the identity-link family y ~ N(tau x, tau)."""
        x = np.array([0.3, -1.0])
        y = np.array([0.5, -2.5])
        tau = np.array([1.0, 2.0])
        batch = ObservationBatch(t=1, y=y, tau=tau, mask=np.ones(2, dtype=bool))

        expected = sum(
            multivariate_normal.logpdf(y[i], mean=tau[i] * x[i], cov=tau[i]) for i in range(2)
        )
        assert batch_loglik(batch, x, GaussianFamily()) == pytest.approx(expected, abs=1e-12)

    def test_masked_sites_contribute_nothing(self) -> None:
        """Test masking and additivity over disjoint masks."""
        x = np.array([0.1, 0.2, 0.3, 0.4])
        y = np.array([[2.0, 0.0, 1.0, 5.0]])
        model = ObservationModel(family=PoissonFamily(), tau=np.ones((1, 4)), mask=np.ones((1, 4), dtype=bool))
        left = np.array([True, True, False, False])

        full = obs_loglik(y[0], x, model, 1)
        assert obs_loglik(y[0], x, model, 1, left) + obs_loglik(y[0], x, model, 1, ~left) == pytest.approx(full)
        assert obs_loglik(y[0], x, model, 1, np.zeros(4, dtype=bool)) == 0.0

    def test_batch_zeroes_masked_values(self) -> None:
        """Test that masked entries are stored as zero and their exposure ignored."""
        batch = ObservationBatch(t=2, y=np.array([3.0, 7.0]), tau=np.array([1.0, 0.0]), mask=np.array([True, False]))

        assert list(batch.y) == [3.0, 0.0]
        assert batch.n_observed == 1
        assert ObservationBatch.empty(3, 2).n_observed == 0

    def test_zero_exposure_where_observed(self) -> None:
        """Test that an observed site needs positive exposure."""
        with pytest.raises(DataError):
            ObservationBatch(t=1, y=np.array([1.0]), tau=np.array([0.0]), mask=np.array([True]))

    @pytest.mark.parametrize("bad", [-1.0, 1.5])
    def test_poisson_validate(self, bad: float) -> None:
        """Test that counts must be nonnegative integers."""
        with pytest.raises(DataError):
            PoissonFamily().validate(np.array([0.0, bad]), np.array([True, True]))
        PoissonFamily().validate(np.array([0.0, bad]), np.array([True, False]))


class TestCovariates:
    """Test design matrices."""

    def test_columns(self) -> None:
        """Test intercept, distance and time columns."""
        coords = np.array([[3.0, 4.0], [0.0, 1.0]])
        design = CovariateBuilder.from_names(["intercept", "distance", "time"], coords, (0.0, 0.0), time_scale=0.5)
        G = design(4)

        assert design.m == 3
        assert design.names == ["intercept", "distance", "time"]
        assert np.allclose(G[:, 0], 1.0)
        assert np.allclose(G[:, 1], [5.0, 1.0])
        assert np.allclose(G[:, 2], 2.0)

    def test_for_sites(self) -> None:
        """Test the same design at prediction targets."""
        design = CovariateBuilder.from_names(["intercept", "distance"], np.array([[1.0, 0.0]]))
        other = design.for_sites(np.array([[0.0, 2.0], [0.0, 0.0]]))

        assert np.allclose(other(0)[:, 1], [2.0, 0.0])

    def test_unknown_term(self) -> None:
        """Test rejection of unknown terms."""
        with pytest.raises(ConfigError):
            CovariateBuilder.from_names(["slope"], np.zeros((2, 1)))

    def test_duplicate_term(self) -> None:
        """Test rejection of repeated terms."""
        with pytest.raises(ConfigError):
            CovariateBuilder.from_names(["intercept", "intercept"], np.zeros((2, 1)))


class TestConditionalField:
    """Test kriging at unmonitored locations."""

    def test_matches_joint_gaussian(self) -> None:
        """Test mean and variance against conditioning the dense joint."""
        monitored = SiteSet(np.array([0.0, 1.0]))
        target = SiteSet(np.array([0.5]))
        joint = build_correlation(SiteSet(np.array([0.0, 1.0, 0.5])), 0.4)
        sigma2, beta = 1.3, np.array([0.2])
        x = np.array([0.9, -0.4])

        cond = conditional_field(
            x, monitored, target, beta, sigma2, 0.4, np.ones((2, 1)), np.ones((1, 1)), kernel=ExponentialKernel()
        )

        S = sigma2 * joint
        gain = S[2, :2] @ np.linalg.inv(S[:2, :2])
        assert cond.mean[0] == pytest.approx(0.2 + gain @ (x - 0.2), abs=1e-8)
        assert cond.cov[0, 0] == pytest.approx(S[2, 2] - gain @ S[:2, 2], abs=1e-8)

    def test_coincident_target(self) -> None:
        """Test that a target on a monitored site returns that value with zero variance."""
        monitored = SiteSet(np.array([0.0, 1.0]))
        targets = SiteSet(np.array([1.0, 0.3]))
        x = np.array([0.5, 2.0])

        cond = conditional_field(x, monitored, targets, np.array([0.0]), 1.0, 0.4, np.ones((2, 1)), np.ones((2, 1)))
        assert cond.mean[0] == 2.0
        assert cond.sd[0] == 0.0
        assert cond.sd[1] > 0.0

    def test_decorrelation_limit(self) -> None:
        """Test that a tiny range returns the trend far from the data."""
        monitored = SiteSet(np.array([0.0, 0.1]))
        target = SiteSet(np.array([5.0]))

        cond = conditional_field(
            np.array([3.0, -3.0]), monitored, target, np.array([1.0]), 1.0, 1e-6, np.ones((2, 1)), np.ones((1, 1))
        )
        assert cond.mean[0] == pytest.approx(1.0)
        assert cond.sd[0] == pytest.approx(1.0)


class TestFactory:
    """Test kernel and family lookup."""

    def test_create_kernel(self) -> None:
        """Test case-insensitive kernel lookup."""
        assert isinstance(create_kernel("Exponential"), ExponentialKernel)
        with pytest.raises(ConfigError, match="Unsupported kernel"):
            create_kernel("matern")

    def test_create_family(self) -> None:
        """Test family lookup."""
        assert isinstance(create_family("poisson"), PoissonFamily)
        assert isinstance(create_family("GAUSSIAN"), GaussianFamily)
        with pytest.raises(ConfigError):
            create_family("binomial")
