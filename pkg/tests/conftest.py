import numpy as np
import pytest

from progbayes.data import TrialData

ACCEPTANCE_LINES = []


def random_trial(rng, n=None, p=None, beta0=None, beta1=None, beta2=None, sigma=None):
    """Linear-model trial with an exact treated count."""
    n = int(rng.integers(10, 501)) if n is None else n
    if p is None:
        n_t = int(rng.integers(2, n - 1))
    else:
        n_t = int(round(p * n))
    w = np.zeros(n, dtype=int)
    w[rng.permutation(n)[:n_t]] = 1
    m = rng.normal(rng.uniform(-5, 5), rng.uniform(0.5, 3), size=n)
    beta0 = rng.normal() if beta0 is None else beta0
    beta1 = rng.normal() if beta1 is None else beta1
    beta2 = rng.uniform(0.2, 2) if beta2 is None else beta2
    sigma = rng.uniform(0.1, 5) if sigma is None else sigma
    y = beta0 + beta1 * w + beta2 * m + sigma * rng.normal(size=n)
    return TrialData(y, w, m)


@pytest.fixture
def rng():
    return np.random.default_rng(20201215)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
