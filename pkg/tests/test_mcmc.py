"""Tests for the offline MCMC baseline."""
from __future__ import annotations

import logging

import numpy as np
import pytest

from seqeb.baseline.mcmc import McmcResult, OfflineSampler, run_offline, sample_phi
from seqeb.config import RunConfig
from seqeb.errors import DomainError
from seqeb.model import ModelSpec
from seqeb.simkit.oracle import latent_moments
from seqeb.simkit.simulate import SimulatedData
from seqeb.spatial.kernels import SiteSet
from seqeb.suffstats.accumulators import Theta

from .conftest import TINY_CONFIG


def _config(**mcmc: object) -> RunConfig:
    return RunConfig.from_dict({**TINY_CONFIG, "mcmc": {"burn_in": 10, "thin": 1, "samples": 20, **mcmc}})


class TestRunOffline:
    """Test the sampler's bookkeeping."""

    def test_draw_counts(self, tiny_model: ModelSpec, tiny_data: SimulatedData) -> None:
        """Test that exactly ``samples`` draws are kept after burn-in and thinning."""
        config = _config(thin=3)
        result = run_offline(tiny_data.y, tiny_model, config.mcmc, np.random.default_rng(1), tau=tiny_data.tau, keep_draws=True)

        assert result.size == 20
        assert result.beta.shape == (20, 1)
        assert result.x_mean.shape == (13, 3)
        assert result.x_draws is not None and result.x_draws.shape == (20, 13, 3)
        assert set(result.acceptance) == {"x", "phi"}
        assert np.all(result.phi > 0.0)
        assert np.all(result.sigma2 > 0.0)
        frame = result.to_frame()
        assert list(frame.columns) == ["draw", "alpha", "beta_0", "sigma2", "phi"]
        assert result.theta_samples().shape == (20, 3)

    def test_fixed_parameters(self, tiny_model: ModelSpec, tiny_data: SimulatedData) -> None:
        """Test that fixed alpha, sigma2 and phi are never moved."""
        config = _config(fixed_alpha=0.5, fixed_sigma2=0.7, fixed_phi=0.4)
        result = run_offline(tiny_data.y, tiny_model, config.mcmc, np.random.default_rng(2))

        assert np.all(result.alpha == 0.5)
        assert np.all(result.sigma2 == 0.7)
        assert np.all(result.phi == 0.4)
        assert "phi" not in result.acceptance
        assert result.phi_mode() == 0.4

    def test_deterministic(self, tiny_model: ModelSpec, tiny_data: SimulatedData) -> None:
        """Test that the same generator seed gives the same draws."""
        config = _config()
        a = run_offline(tiny_data.y, tiny_model, config.mcmc, np.random.default_rng(5))
        b = run_offline(tiny_data.y, tiny_model, config.mcmc, np.random.default_rng(5))

        assert np.array_equal(a.theta_samples(), b.theta_samples())
        assert np.array_equal(a.x_mean, b.x_mean)

    def test_bad_shape(self, tiny_model: ModelSpec) -> None:
        """Test that y must have one column per site."""
        with pytest.raises(DomainError):
            run_offline(np.zeros((4, 2)), tiny_model, _config().mcmc, np.random.default_rng(0))

    def test_missing_entries_ignored(self, tiny_model: ModelSpec, tiny_data: SimulatedData) -> None:
        """Test that masked entries may hold any value."""
        mask = np.ones_like(tiny_data.mask)
        mask[3, 1] = False
        y = tiny_data.y.astype(float)
        y[3, 1] = -5.0

        result = run_offline(y, tiny_model, _config().mcmc, np.random.default_rng(0), mask=mask)
        assert np.all(np.isfinite(result.x_mean))

    def test_acceptance_warning(self, tiny_model: ModelSpec, tiny_data: SimulatedData, caplog: pytest.LogCaptureFixture) -> None:
        """Test the warning when acceptance ends outside the target band."""
        config = _config(accept_low=0.99, accept_high=1.0, fixed_phi=0.4)

        with caplog.at_level(logging.WARNING, logger="seqeb.baseline.mcmc"):
            run_offline(tiny_data.y, tiny_model, config.mcmc, np.random.default_rng(0))

        assert "acceptance" in caplog.text


class TestPosterior:
    """Test the sampler's target distribution."""

    def test_gaussian_family_latent_mean(self) -> None:
        """Test the latent posterior mean against the closed-form linear-Gaussian answer."""
        config = RunConfig.from_dict({
            "model": {"family": "gaussian"},
            "prior": {"q0": 1.0},
            "mcmc": {"burn_in": 300, "thin": 2, "samples": 4000, "fixed_alpha": 0.5, "fixed_sigma2": 1.0, "fixed_phi": 0.4},
        })
        model = ModelSpec.from_config(config, SiteSet(np.array([0.0])))
        y = np.array([[1.2], [-0.4], [0.8]])

        result = run_offline(y, model, config.mcmc, np.random.default_rng(17))

        mean, S = latent_moments(model, 0.4, 3, 0.5)
        precision = np.linalg.inv(S) + np.eye(3)
        expected = np.linalg.solve(precision, y.ravel() + np.linalg.solve(S, mean))
        assert np.allclose(result.x_mean[1:, 0], expected, atol=0.2)

    def test_sweep_keeps_residual_solves_current(self, tiny_model: ModelSpec, tiny_data: SimulatedData) -> None:
        """Test that the incremental updates of R^-1 e_t during a sweep match a fresh dense solve."""
        theta = Theta(alpha=0.4, beta=np.array([0.1]), sigma2=0.5)
        x = np.random.default_rng(2).normal(size=(tiny_data.T + 1, tiny_model.n))
        sampler = OfflineSampler(tiny_data.y, tiny_data.tau, tiny_data.mask, tiny_model, _config().mcmc, theta, 0.4, x)

        sampler.x_sweep(np.random.default_rng(3))

        assert not np.array_equal(sampler.x, x)
        eta = sampler.x - np.einsum("snm,m->sn", sampler.Gs, theta.beta)
        r = eta.copy()
        r[1:] -= theta.alpha * eta[:-1]
        expected = r @ np.linalg.inv(tiny_model.correlation(0.4))
        assert np.allclose(sampler.Pr, expected)

    @pytest.mark.slow
    def test_acceptance_band(self, tiny_model: ModelSpec, tiny_data: SimulatedData) -> None:
        """Test that adaptation brings acceptance near the target band."""
        config = _config(burn_in=2000, samples=500, thin=2)
        result = run_offline(tiny_data.y, tiny_model, config.mcmc, np.random.default_rng(3))

        assert 0.1 <= result.acceptance["x"] <= 0.5
        assert 0.1 <= result.acceptance["phi"] <= 0.5


class TestSamplePhi:
    """Test the phi-only kernel."""

    def test_draws(self, tiny_model: ModelSpec, tiny_data: SimulatedData) -> None:
        """Test that phi draws are positive and move."""
        theta = Theta(alpha=0.5, beta=np.array([1.0]), sigma2=1.0)
        draws = sample_phi(tiny_data.x, theta, tiny_model, _config().mcmc, np.random.default_rng(4), size=200)

        assert draws.shape == (200,)
        assert np.all(draws > 0.0)
        assert np.unique(draws).size > 1


class TestMcmcResult:
    """Test result helpers."""

    def test_interval(self) -> None:
        """Test equal-tailed quantile intervals."""
        values = np.linspace(0.0, 1.0, 101)
        result = McmcResult(
            alpha=values, beta=values[:, None], sigma2=values + 1.0, phi=values + 0.1,
            x_mean=np.zeros((1, 1)), x_var=np.zeros((1, 1)), acceptance={}, steps={},
        )

        lo, hi = result.interval(values, 0.9)
        assert lo == pytest.approx(0.05)
        assert hi == pytest.approx(0.95)
        assert 0.1 <= result.phi_mode() <= 1.1
