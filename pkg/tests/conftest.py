import numpy as np
import pytest

from rbmflock import backend
from rbmflock.dynamics import Ensemble

ACCEPTANCE_LINES = []


@pytest.fixture(params=sorted(backend.available()))
def each_backend(request):
    """Run the test once per available pairwise backend."""
    with backend.use(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_ensemble(rng, n=8, d=1, t=0.0) -> Ensemble:
    return Ensemble(rng.uniform(0, 2, (n, d)), rng.uniform(-1, 1, (n, d)), t)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
