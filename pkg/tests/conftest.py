import numpy as np
import pytest

from fpdrift import (
    CrossCorrelation,
    ExperimentConfig,
    Grid,
    HurstParams,
    SdeSpec,
    drift_model,
    euler_additive,
    sample_fbm_bundle,
)


def solution_bundle(model="model2", h=0.9, horizon=0.75, sigma=1.0, x0=5.0,
                    theta0=1.0, steps=20, n=10, seed=0):
    """Simulate one solution bundle with the given settings."""
    grid = Grid(horizon=horizon, steps=steps)
    hurst = HurstParams(h=h)
    rng = np.random.default_rng(seed)
    noise = sample_fbm_bundle(hurst, grid, CrossCorrelation.identity(n), rng)
    spec = SdeSpec(x0=x0, theta0=theta0, sigma=sigma, drift=drift_model(model),
                   hurst=hurst, grid=grid)
    return euler_additive(spec, noise)


def model2_config(**kwargs):
    defaults = dict(model="model2", hurst=0.9, horizon=0.75, sigma=1.0,
                    replications=5, n_max=10, seed=123)
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


# One line per acceptance criterion, printed in the terminal summary so the
# verdicts are visible even when every test passes.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Tests import this module as "tests.conftest" while pytest loads it as a
    # plugin under another name; resolve the shared instance explicitly.
    from tests.conftest import ACCEPTANCE_LINES as lines
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
