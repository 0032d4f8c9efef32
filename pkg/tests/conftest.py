"""Pytest configuration and shared fixtures."""

import numpy as np
import pytest
from click.testing import CliRunner

from odesr.core.config import DataConfig, GeneratorConfig, RunConfig, TrainConfig
from odesr.data.fixtures import write_fixture_set


@pytest.fixture
def runner():
    """Create CLI test runner."""
    return CliRunner()


@pytest.fixture
def rng():
    """Seeded generator for random test data."""
    return np.random.default_rng(1234)


@pytest.fixture
def fixture_dir(tmp_path):
    """Ten synthetic 32x32 PNGs (nine train, one val under the default split)."""
    root = tmp_path / "images"
    write_fixture_set(root, count=10, size=32, seed=0)
    return root


@pytest.fixture
def tiny_ode_config():
    """A small augmented time-dependent ODE generator."""
    return GeneratorConfig(filters=4, augment_channels=2, time_dependent=True, ode_layers=2)


@pytest.fixture
def tiny_rrdb_config():
    """A small one-group RRDB generator."""
    return GeneratorConfig(filters=4, core="rrdb", rrdb_blocks=1, growth=2)


@pytest.fixture
def tiny_run_config(tmp_path, tiny_ode_config):
    """A run that trains the tiny ODE generator for two epochs on 16-pixel patches."""
    return RunConfig(
        train=TrainConfig(
            learning_rate=1e-3,
            batch_size=8,
            max_epochs=2,
            seed=7,
            generator=tiny_ode_config,
        ),
        data=DataConfig(patch_size=16, augment=True),
        out_dir=str(tmp_path / "run"),
    )
