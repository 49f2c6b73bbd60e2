import time

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_matrix(rng, d, norm=None):
    X = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if norm is not None:
        X = norm * X / np.linalg.norm(X, 2)
    return X


def random_frame(rng, d, k):
    Q, _ = np.linalg.qr(random_matrix(rng, d))
    return Q[:, :k]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_SESSION = {}
RUNTIME_LIMIT = 300.0


def pytest_sessionstart(session):
    _SESSION["start"] = time.perf_counter()


def pytest_sessionfinish(session, exitstatus):
    _SESSION["elapsed"] = time.perf_counter() - _SESSION.get("start", time.perf_counter())
    if _SESSION["elapsed"] > RUNTIME_LIMIT and exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    elapsed = _SESSION.get("elapsed", 0.0)
    ok = elapsed <= RUNTIME_LIMIT
    terminalreporter.write_line(
        f"ACCEPTANCE 9 (runtime): {'PASS' if ok else 'FAIL'} - session took {elapsed:.1f}s (<= {RUNTIME_LIMIT:.0f}s)"
    )
