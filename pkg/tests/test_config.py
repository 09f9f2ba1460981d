"""Tests for config loading and validation."""
from __future__ import annotations

import os
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from seqeb.config import EstimatorKind, RunConfig, load_config
from seqeb.config_file import _find_config_file, get_config_value, load_config_file
from seqeb.errors import ConfigError
from seqeb.proposal.fit import ProposalMode


class TestDefaults:
    """Test the built-in defaults."""

    def test_defaults_without_file(self, mock_env_clean: None) -> None:
        """Test that no file and no env yields the simulation-study settings."""
        config = load_config()

        assert config.seed == 20240101
        assert config.monte_carlo.chains == (100,)
        assert config.monte_carlo.particles == 100
        assert config.monte_carlo.gibbs_iters == 50
        assert config.proposal.mode is ProposalMode.MEAN_ONLY
        assert config.eb.estimator is EstimatorKind.MIXTURE
        assert config.eb.ci_level == 0.99

    def test_default_grid(self, mock_env_clean: None) -> None:
        """Test that the default coarse points sit on the default fine grid."""
        grid = load_config().grid_spec()

        assert grid.J == 41
        assert grid.K == 6
        assert grid.reference_phi == pytest.approx(0.23)
        assert np.allclose(grid.coarse, [0.23, 0.335, 0.44, 0.545, 0.65, 0.755])

    def test_default_prior(self, mock_env_clean: None) -> None:
        """Test the conjugate prior defaults."""
        prior = load_config().prior

        assert (prior.a0, prior.s0, prior.q0, prior.c0) == (0.0, 0.1, 0.01, 3.0)
        assert prior.r0 == pytest.approx(1.0 / 3.0)


class TestFileLoading:
    """Test reading seqeb.toml."""

    def test_load_explicit_file(self, mock_env_clean: None, write_toml: Path) -> None:
        """Test loading a config file by path."""
        config = load_config(write_toml)

        assert config.seed == 7
        assert config.grid.fine_count == 7
        assert config.monte_carlo.chains == (2,)
        assert config.grid_spec().total_chains == 4

    def test_missing_explicit_file(self, mock_env_clean: None, tmp_path: Path) -> None:
        """Test error when an explicit path does not exist."""
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.toml")

    def test_invalid_toml(self, mock_env_clean: None, tmp_path: Path) -> None:
        """Test error on a malformed file."""
        path = tmp_path / "seqeb.toml"
        path.write_text("seed = [unclosed", encoding="utf-8")

        with pytest.raises(ConfigError, match="not valid TOML"):
            load_config(path)

    def test_discovered_file_is_used(self, tmp_path: Path, sample_config_toml: str) -> None:
        """Test that the file found by discovery is loaded."""
        path = tmp_path / "seqeb.toml"
        path.write_text(sample_config_toml, encoding="utf-8")

        with patch("seqeb.config_file._find_config_file", return_value=path):
            assert load_config_file() == load_config_file(path)

    def test_find_config_file_in_cwd(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test discovery of seqeb.toml in the working directory."""
        (tmp_path / "seqeb.toml").write_text("seed = 1\n", encoding="utf-8")
        monkeypatch.chdir(tmp_path)

        found = _find_config_file()
        assert found is not None
        assert found.resolve() == (tmp_path / "seqeb.toml").resolve()


class TestEnvironmentOverrides:
    """Test environment variable precedence."""

    def test_env_seed_overrides_file(self, mock_env_clean: None, write_toml: Path) -> None:
        """Test that SEQEB_SEED beats the file."""
        os.environ["SEQEB_SEED"] = "99"

        assert load_config(write_toml).seed == 99

    def test_env_proposal_mode(self, mock_env_clean: None) -> None:
        """Test selecting the proposal mode from the environment."""
        os.environ["SEQEB_PROPOSAL_MODE"] = "mean_skew"

        assert load_config().proposal.mode is ProposalMode.MEAN_SKEW

    def test_env_ignored_by_from_dict(self, mock_env_clean: None) -> None:
        """Test that from_dict only reads the environment when asked."""
        os.environ["SEQEB_WORKERS"] = "4"

        assert RunConfig.from_dict({}).workers == 1
        assert RunConfig.from_dict({}, env=True).workers == 4

    def test_bad_env_value(self, mock_env_clean: None) -> None:
        """Test that an unparsable env value is reported as a problem."""
        os.environ["SEQEB_SEED"] = "many"

        with pytest.raises(ConfigError) as exc_info:
            load_config()
        assert any("seed" in p for p in exc_info.value.problems)


class TestValidation:
    """Test collected validation problems."""

    def test_unknown_keys(self) -> None:
        """Test that unknown top-level and block keys are rejected."""
        with pytest.raises(ConfigError) as exc_info:
            RunConfig.from_dict({"sead": 1, "grid": {"fine_mx": 0.9}})
        problems = exc_info.value.problems
        assert "unknown key 'sead'" in problems
        assert "unknown key 'grid.fine_mx'" in problems

    def test_all_problems_reported(self) -> None:
        """Test that several independent problems are listed together."""
        with pytest.raises(ConfigError) as exc_info:
            RunConfig.from_dict({
                "workers": 0,
                "model": {"nugget": -1.0},
                "eb": {"ci_level": 1.5},
            })
        assert len(exc_info.value.problems) >= 3

    def test_coarse_off_grid(self) -> None:
        """Test that a coarse point must lie on the fine grid."""
        with pytest.raises(ConfigError) as exc_info:
            RunConfig.from_dict({"grid": {"coarse": [0.231, 0.335], "reference": 0.335}})
        assert any("not on the fine grid" in p for p in exc_info.value.problems)

    def test_reference_must_be_coarse(self) -> None:
        """Test that the reference must be one of the coarse points."""
        with pytest.raises(ConfigError) as exc_info:
            RunConfig.from_dict({"grid": {"reference": 0.44, "coarse": [0.23, 0.335]}})
        assert any("reference" in p for p in exc_info.value.problems)

    def test_chain_counts_per_component(self) -> None:
        """Test per-component chain counts must match the coarse grid."""
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"monte_carlo": {"chains": [10, 20]}})

        config = RunConfig.from_dict({
            "grid": {"coarse": [0.23, 0.335], "reference": 0.23},
            "monte_carlo": {"chains": [10, 20]},
        })
        assert list(config.grid_spec().chains) == [10, 20]

    def test_unknown_covariate(self) -> None:
        """Test that covariate terms are checked."""
        with pytest.raises(ConfigError) as exc_info:
            RunConfig.from_dict({"model": {"covariates": ["intercept", "elevation"]}})
        assert any("elevation" in p for p in exc_info.value.problems)

    def test_bad_prior(self) -> None:
        """Test that an invalid prior is reported."""
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"prior": {"c0": -1.0}})

    def test_acceptance_band(self) -> None:
        """Test the MCMC acceptance band ordering."""
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"mcmc": {"accept_low": 0.5, "accept_high": 0.4}})


class TestPriorAliases:
    """Test the d0/e0 spellings of the inverse-gamma hyperparameters."""

    def test_aliases(self) -> None:
        """Test that d0 and e0 map onto c0 and r0."""
        prior = RunConfig.from_dict({"prior": {"d0": 4.0, "e0": 0.5}}).prior

        assert prior.c0 == 4.0
        assert prior.r0 == 0.5

    def test_alias_conflict(self) -> None:
        """Test that giving both spellings is an error."""
        with pytest.raises(ConfigError) as exc_info:
            RunConfig.from_dict({"prior": {"d0": 4.0, "c0": 3.0}})
        assert any("both given" in p for p in exc_info.value.problems)


class TestRoundTrip:
    """Test to_dict / from_dict."""

    def test_round_trip(self, tiny_config: RunConfig) -> None:
        """Test that a serialized config parses back to the same values."""
        again = RunConfig.from_dict(tiny_config.to_dict())

        assert again.to_dict() == tiny_config.to_dict()
        assert again.grid_spec().total_chains == tiny_config.grid_spec().total_chains

    def test_simplified_estimator_grid(self) -> None:
        """Test that the simplified estimator keeps only the reference component."""
        config = RunConfig.from_dict({"eb": {"estimator": "simplified"}})
        grid = config.grid_spec()

        assert grid.K == 1
        assert grid.reference_phi == pytest.approx(0.23)

    def test_init_beta_broadcast(self) -> None:
        """Test that a scalar init.beta is broadcast over the covariates."""
        config = RunConfig.from_dict({
            "model": {"covariates": ["intercept", "distance"], "reference": [0.0, 0.0]},
            "init": {"beta": 0.5},
        })
        assert list(config.init_beta()) == [0.5, 0.5]


class TestGetConfigValue:
    """Test get_config_value helper."""

    def test_nested_key(self) -> None:
        """Test dotted keys reach into tables."""
        assert get_config_value({"grid": {"fine_count": 9}}, "grid.fine_count") == 9

    def test_env_precedence(self, mock_env_clean: None) -> None:
        """Test env var beats the file value."""
        os.environ["SEQEB_TEST_VALUE"] = " 3 "

        assert get_config_value({"seed": 1}, "seed", "SEQEB_TEST_VALUE") == "3"

    def test_default(self) -> None:
        """Test default when the key is absent."""
        assert get_config_value({}, "grid.reference", default=0.23) == 0.23
