"""Tests for grids, reverse logistic regression, Bayes factors and estimates."""
from __future__ import annotations

import logging

import numpy as np
import pytest

from seqeb.config import RunConfig
from seqeb.eb.bayes_factor import mixture_bayes_factor, simplified_bayes_factor
from seqeb.eb.estimate import BayesFactorTable, credible_interval, estimate_phi, reweight_and_estimate
from seqeb.eb.grid import GridSpec
from seqeb.eb.reverse_logistic import reverse_logistic_fit
from seqeb.errors import ConfigError, DomainError, NumericalError
from seqeb.model import ModelSpec
from seqeb.simkit.oracle import conditional_marginal_loglik
from seqeb.spatial.kernels import SiteSet
from seqeb.suffstats.accumulators import Theta, path_stats


class TestGridSpec:
    """Test grid construction."""

    def test_build(self) -> None:
        """Test snapping coarse points onto the fine grid."""
        grid = GridSpec.linspace(0.2, 0.8, 7, [0.3, 0.5], 0.5, [2, 3])

        assert grid.J == 7
        assert list(grid.coarse_index) == [1, 3]
        assert grid.reference == 1
        assert grid.reference_fine_index == 3
        assert grid.total_chains == 5
        assert np.allclose(grid.lambdas, [0.4, 0.6])
        assert list(grid.labels()) == [0, 0, 1, 1, 1]

    def test_scalar_chain_count_broadcasts(self) -> None:
        """Test that one chain count applies to every component."""
        grid = GridSpec.linspace(0.2, 0.8, 7, [0.3, 0.5, 0.7], 0.3, 4)
        assert list(grid.chains) == [4, 4, 4]

    def test_restricted_to_reference(self) -> None:
        """Test the single-component grid used by the simplified estimator."""
        grid = GridSpec.linspace(0.2, 0.8, 7, [0.3, 0.5], 0.5, [2, 3]).restricted_to_reference()

        assert grid.K == 1
        assert grid.reference == 0
        assert grid.reference_phi == pytest.approx(0.5)
        assert list(grid.chains) == [3]

    @pytest.mark.parametrize(
        "fine, coarse, reference, chains, message",
        [
            ([0.0, 0.5, 1.0], [0.5], 0.5, 1, "positive"),
            ([0.5, 0.3], [0.5], 0.5, 1, "ascending"),
            ([0.2, 0.4, 0.6], [0.41], 0.41, 1, "not on the fine grid"),
            ([0.2, 0.4, 0.6], [0.4, 0.4], 0.4, 1, "duplicate"),
            ([0.2, 0.4, 0.6], [0.2, 0.4], 0.6, 1, "not one of the coarse points"),
            ([0.2, 0.4, 0.6], [0.2, 0.4], 0.2, [1, 2, 3], "entries"),
            ([0.2, 0.4, 0.6], [0.2], 0.2, 0, ">= 1"),
        ],
    )
    def test_invalid(self, fine: list, coarse: list, reference: float, chains: object, message: str) -> None:
        """Test that grid problems are collected into a ConfigError."""
        with pytest.raises(ConfigError) as exc_info:
            GridSpec.build(fine, coarse, reference, chains)  # type: ignore[arg-type]
        assert any(message in p for p in exc_info.value.problems)


def _gaussian_pool(rng: np.random.Generator, means: np.ndarray, log_c: np.ndarray, per: int) -> tuple[np.ndarray, np.ndarray]:
    """Draws from N(mu_k, 1) with unnormalized log densities log c_k - (x - mu_k)^2 / 2."""
    labels = np.repeat(np.arange(means.size), per)
    x = rng.normal(means[labels], 1.0)
    loglik = log_c[None, :] - 0.5 * (x[:, None] - means[None, :]) ** 2
    return loglik, labels


class TestReverseLogistic:
    """Test the normalizing-constant ratio estimator."""

    def test_recovers_known_constants(self, rng: np.random.Generator) -> None:
        """Test that log b matches the known log normalizing-constant ratios."""
        means = np.array([0.0, 0.5, 1.0])
        log_c = np.array([0.0, 0.7, -1.2])
        loglik, labels = _gaussian_pool(rng, means, log_c, 4000)

        result = reverse_logistic_fit(loglik, labels, reference=0)

        assert result.log_b[0] == 0.0
        assert np.allclose(result.log_b, log_c - log_c[0], atol=0.1)

    def test_reference_choice(self, rng: np.random.Generator) -> None:
        """Test that changing the reference shifts log b by a constant."""
        means = np.array([0.0, 0.5])
        log_c = np.array([0.3, -0.4])
        loglik, labels = _gaussian_pool(rng, means, log_c, 2000)

        at0 = reverse_logistic_fit(loglik, labels, reference=0).log_b
        at1 = reverse_logistic_fit(loglik, labels, reference=1).log_b

        assert at1[1] == 0.0
        assert np.allclose(at0 - at0[1], at1, atol=1e-8)

    def test_single_component(self) -> None:
        """Test that one component needs no regression."""
        result = reverse_logistic_fit(np.zeros((5, 1)), np.zeros(5, dtype=int))

        assert list(result.log_b) == [0.0]
        assert result.iterations == 0

    def test_non_finite_row(self) -> None:
        """Test that a non-finite log-likelihood is rejected with its row."""
        loglik = np.zeros((4, 2))
        loglik[2, 1] = np.nan

        with pytest.raises(NumericalError, match="row 2"):
            reverse_logistic_fit(loglik, np.array([0, 0, 1, 1]))

    def test_misaligned(self) -> None:
        """Test shape checking."""
        with pytest.raises(DomainError):
            reverse_logistic_fit(np.zeros((4, 2)), np.zeros(3, dtype=int))


class TestBayesFactors:
    """Test the mixture and simplified estimators."""

    def test_reference_is_zero(self, rng: np.random.Generator) -> None:
        """Test that the reference column is pinned at zero."""
        loglik_fine = rng.normal(size=(6, 5))
        coarse_index = np.array([1, 3])

        out = mixture_bayes_factor(loglik_fine, loglik_fine[:, coarse_index], np.array([0.0, 0.2]), np.array([3, 3]), reference_index=1)

        assert out[1] == 0.0
        assert np.all(np.isfinite(out))

    def test_single_component_matches_simplified(self, rng: np.random.Generator) -> None:
        """Test that K = 1 reduces the mixture estimator to the simplified one."""
        loglik_fine = rng.normal(size=(8, 4))
        ref = 2

        mixture = mixture_bayes_factor(loglik_fine, loglik_fine[:, [ref]], np.zeros(1), np.array([8]))
        simplified = simplified_bayes_factor(loglik_fine, loglik_fine[:, ref])

        assert np.allclose(mixture, simplified)
        assert simplified[ref] == pytest.approx(0.0)

    def test_single_column(self, rng: np.random.Generator) -> None:
        """Test that a 1-D evaluation column yields a float."""
        loglik = rng.normal(size=(4, 2))
        out = mixture_bayes_factor(loglik[:, 0], loglik, np.zeros(2), np.array([2, 2]))
        assert isinstance(out, float)

    def test_vanishing_denominator(self) -> None:
        """Test that a chain with zero likelihood everywhere is reported."""
        loglik = np.full((2, 2), -np.inf)
        with pytest.raises(NumericalError):
            mixture_bayes_factor(loglik, loglik, np.zeros(2), np.array([1, 1]))


class TestEstimate:
    """Test the argmax, credible interval and reweighting."""

    def test_gaussian_interval(self) -> None:
        """Test the 99% interval of a Gaussian-shaped Bayes factor curve."""
        phis = np.linspace(0.01, 2.0, 2001)
        log_bf = -0.5 * ((phis - 1.0) / 0.1) ** 2

        phi_hat, (lo, hi) = estimate_phi(phis, log_bf, 0.99)

        assert phi_hat == pytest.approx(1.0, abs=1e-3)
        assert lo == pytest.approx(1.0 - 2.5758 * 0.1, abs=1e-3)
        assert hi == pytest.approx(1.0 + 2.5758 * 0.1, abs=1e-3)

    def test_single_point(self) -> None:
        """Test that a one-point grid gives a degenerate interval."""
        assert credible_interval(np.array([0.4]), np.array([0.0])) == (0.4, 0.4)

    def test_ties_go_to_smaller_phi(self) -> None:
        """Test the tie-breaking rule of the argmax."""
        phi_hat, _ = estimate_phi(np.array([0.2, 0.3, 0.4, 0.5]), np.array([0.0, 1.0, 1.0, 0.0]))
        assert phi_hat == pytest.approx(0.3)

    def test_flat_table_warns(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test the warning and the grid-wide interval of a flat table."""
        phis = np.linspace(0.2, 0.8, 7)

        with caplog.at_level(logging.WARNING, logger="seqeb.eb.estimate"):
            phi_hat, (lo, hi) = estimate_phi(phis, np.zeros(7))

        assert "flat" in caplog.text
        assert phi_hat == pytest.approx(0.2)
        assert lo < phis[1] and hi > phis[-2]

    def test_non_finite_rejected(self) -> None:
        """Test that infinite log Bayes factors are rejected."""
        with pytest.raises(DomainError):
            estimate_phi(np.array([0.2, 0.3]), np.array([0.0, np.inf]))

    @pytest.mark.parametrize("level", [0.0, 1.0, 1.5])
    def test_bad_level(self, level: float) -> None:
        """Test that the credible level must lie strictly inside (0, 1)."""
        with pytest.raises(DomainError):
            credible_interval(np.array([0.2, 0.3]), np.zeros(2), level)

    def test_reweight_single_component(self, rng: np.random.Generator) -> None:
        """Test that phi_hat at the only coarse point gives equal weights."""
        loglik = rng.normal(size=(5, 4))
        xs = rng.normal(size=(5, 3))
        thetas = rng.normal(size=(5, 3))

        est = reweight_and_estimate(loglik, np.array([2]), np.ones(1), np.zeros(4), 2, xs, thetas)

        assert np.allclose(est.weights, 0.2)
        assert est.ess == pytest.approx(5.0)
        assert np.allclose(est.x_hat, xs.mean(axis=0))
        assert np.allclose(est.theta_hat, thetas.mean(axis=0))

    def test_reweight_normalized(self, rng: np.random.Generator, caplog: pytest.LogCaptureFixture) -> None:
        """Test weights sum to one and the low-ESS warning."""
        loglik = rng.normal(scale=5.0, size=(10, 6))
        log_bf = rng.normal(size=6)

        with caplog.at_level(logging.WARNING, logger="seqeb.eb.estimate"):
            est = reweight_and_estimate(
                loglik, np.array([1, 4]), np.array([0.5, 0.5]), log_bf, 3,
                np.zeros((10, 2)), np.zeros((10, 3)), ess_floor=1.0,
            )

        assert est.weights.sum() == pytest.approx(1.0)
        assert np.all(est.weights >= 0.0)
        assert 1.0 <= est.ess <= 10.0
        assert "below the floor" in caplog.text


class TestBayesFactorTable:
    """Test the per-step table."""

    def test_rows(self) -> None:
        """Test long-format rows flag the coarse points."""
        table = BayesFactorTable(
            t=3,
            phis=np.array([0.2, 0.3, 0.4]),
            log_bf=np.array([0.0, 1.0, 0.5]),
            coarse_phis=np.array([0.2, 0.4]),
            coarse_log_b=np.array([0.0, 0.1]),
            phi_hat=0.3,
            ci=(0.2, 0.4),
        )

        rows = table.rows()
        assert [r["coarse"] for r in rows] == [1, 0, 1]
        assert rows[1] == {"t": 3, "phi": 0.3, "log_bf": 1.0, "coarse": 0}
        assert table.phi_hat_index == 1


def _posterior_paths(model: ModelSpec, phi: float, theta: Theta, y: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draws of x_{0:T} given Poisson counts with unit exposure, by rejection from the prior."""
    T, n = y.shape
    steps = np.arange(T + 1)
    v = np.cumsum(theta.alpha ** (2.0 * steps))
    A = theta.alpha ** np.abs(np.subtract.outer(steps, steps)) * v[np.minimum.outer(steps, steps)]
    cov = theta.sigma2 * np.kron(A, model.correlation(phi))
    mean = (model.designs(T) @ theta.beta).ravel()
    counts = y.ravel()
    bound = np.sum(np.where(counts > 0, counts * np.log(np.maximum(counts, 1.0)) - counts, 0.0))
    kept: list[np.ndarray] = []
    total = 0
    while total < size:
        z = rng.multivariate_normal(mean, cov, size=20 * size)
        x = z[:, n:]
        accept = np.log(rng.uniform(size=z.shape[0])) < x @ counts - np.exp(x).sum(axis=1) - bound
        kept.append(z[accept])
        total += int(accept.sum())
    return np.concatenate(kept)[:size].reshape(size, T + 1, n)


class TestMixtureAgainstExact:
    """Test the pooled Bayes factor estimate against quadrature marginal likelihoods."""

    @pytest.mark.slow
    def test_poisson_bayes_factors(self) -> None:
        """Test that the mixture estimate of log B(phi) agrees with the oracle for exact posterior draws."""
        model = ModelSpec.from_config(RunConfig.from_dict({}), SiteSet.equidistant(2))
        theta = Theta(alpha=0.5, beta=np.array([0.4]), sigma2=0.8)
        y = np.array([[2.0, 1.0], [0.0, 3.0]])
        fine = np.array([0.2, 0.3, 0.45, 0.6, 0.8])
        coarse_index = np.array([1, 3])
        chains = np.array([2000, 2000])
        labels = np.repeat(np.arange(2), chains)
        facs = model.factorizations(fine)
        whiteners = np.stack([f.whitener for f in facs])
        logdets = np.array([f.logdet for f in facs])
        Gs = model.designs(y.shape[0])

        exact = np.array([
            conditional_marginal_loglik(y, phi, model, theta.alpha, theta.sigma2, beta=theta.beta) for phi in fine
        ])
        exact -= exact[1]

        rng = np.random.default_rng(41)
        estimates = []
        for _ in range(8):
            paths = np.concatenate([
                _posterior_paths(model, fine[j], theta, y, int(size), rng) for j, size in zip(coarse_index, chains)
            ])
            loglik = np.stack([path_stats(x, Gs, whiteners, fine, logdets).loglik(theta) for x in paths])
            log_b = reverse_logistic_fit(loglik[:, coarse_index], labels, reference=0).log_b
            estimates.append(mixture_bayes_factor(loglik, loglik[:, coarse_index], log_b, chains, reference_index=1))
        estimates = np.array(estimates)

        mean = estimates.mean(axis=0)
        se = estimates.std(axis=0, ddof=1) / np.sqrt(len(estimates))
        assert mean[1] == 0.0
        assert np.all(np.abs(mean - exact) <= 3.0 * se + 0.01)
