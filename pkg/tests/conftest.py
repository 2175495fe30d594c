import sys

import numpy as np
import pytest

from noonsim.config import load_config
from noonsim.scenarios import Experiment


@pytest.fixture(scope="session")
def default_data():
    return load_config()


@pytest.fixture(scope="session")
def experiment(default_data):
    return Experiment(default_data)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unitary(n, rng):
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_isometry(rows, cols, rng):
    return random_unitary(rows, rng)[:, :cols]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(mod.RESULTS, key=lambda n: int(n.split()[0])):
        passed, detail = mod.RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
