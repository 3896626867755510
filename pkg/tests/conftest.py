import os
from pathlib import Path

import numpy as np
import pytest

from heavytail.simulation import Family, ModelSpec, sample_model

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"

_acceptance_lines: list[str] = []


@pytest.fixture
def acceptance_log():
    """Append a one-line verdict for the terminal summary."""
    return _acceptance_lines.append


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pareto_sample():
    return sample_model(ModelSpec(Family.STRICT_PARETO, gamma=0.5, scale=3.0), 400, seed=11)


def secura_path() -> Path | None:
    env = os.environ.get("HEAVYTAIL_SECURA")
    if env:
        return Path(env)
    default = DATA / "secura.txt"
    return default if default.exists() else None
