import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def random_weights(rng, n, p=0.6, low=0.1, high=1.0):
    """Random symmetric nonnegative zero-diagonal weight matrix."""
    U = rng.uniform(low, high, (n, n)) * (rng.random((n, n)) < p)
    W = np.triu(U, 1)
    return W + W.T


def dense_laplacian(W):
    return np.diag(W.sum(axis=1)) - W


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call":
        return
    detail = ""
    if report.failed:
        detail = str(call.excinfo.value).strip().splitlines()[0] if call.excinfo else "failed"
    _criteria.append((mark.args[0], mark.args[1], report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid, text, outcome, detail in sorted(_criteria, key=lambda c: c[0]):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"[{status}] {cid}: {text}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
