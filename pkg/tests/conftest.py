import numpy as np
import pytest

from poisbin.distributions import BernoulliVector


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def half():
    return BernoulliVector((0.5,))


def random_vectors(count, max_n, seed=7, low=1):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(low, max_n + 1))
        out.append(BernoulliVector(tuple(rng.random(n))))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip(":").rstrip("ab")), s)):
            terminalreporter.write_line(line)
