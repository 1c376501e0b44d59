import os
import subprocess
import sys

import pytest

from coresig.simulate import SimConfig, simulate
from coresig.stats import AnalysisAccumulator


@pytest.fixture(scope="session")
def medium_config() -> SimConfig:
    """A 10-minute default-parameter run: every transaction family active,
    small enough to regenerate freely."""
    return SimConfig(duration_us=600_000_000)


@pytest.fixture(scope="session")
def medium_records(medium_config):
    return list(simulate(medium_config))


@pytest.fixture(scope="session")
def medium_analysis(medium_records) -> AnalysisAccumulator:
    acc = AnalysisAccumulator()
    for record in medium_records:
        acc.add(record)
    return acc


def run_cli(*args: str, input_text=None, cwd=None, env=None) -> subprocess.CompletedProcess:
    """Run the CLI in a fresh interpreter (determinism must hold across
    processes, so in-process invocation would prove too little)."""
    full_env = None
    if env is not None:
        full_env = dict(os.environ)
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "coresig.cli", *args],
        capture_output=True,
        text=True,
        input=input_text,
        cwd=cwd,
        env=full_env,
    )
