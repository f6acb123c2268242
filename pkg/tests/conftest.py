import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hsliouville.core_ops import TruncatedMatrix

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_matrix(rng, n, scale=1.0):
    return TruncatedMatrix(scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))))


def hs_dist(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
