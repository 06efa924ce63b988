import numpy as np
import pytest

from schmidtkit.sampling import rng_for

# filled by tests/test_acceptance.py, echoed once at the end of the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def rng(request):
    return rng_for(1234, request.node.name)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def assert_close(a, b, tol):
    a, b = np.asarray(a), np.asarray(b)
    assert a.shape == b.shape, (a.shape, b.shape)
    err = float(np.max(np.abs(a - b))) if a.size else 0.0
    assert err <= tol, f"max deviation {err:.3e} > {tol:.1e}"
