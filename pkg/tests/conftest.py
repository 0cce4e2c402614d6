import numpy as np
import pytest

from mixnorm import _quadkernel_py

try:
    from mixnorm import _quadkernel
except ImportError:  # extension not built
    _quadkernel = None

BACKENDS = {"python": _quadkernel_py.mixture_logpdf}
if _quadkernel is not None:
    BACKENDS["compiled"] = _quadkernel.mixture_logpdf

# filled by test_acceptance; echoed in the terminal summary
ACCEPTANCE_LINES = {}


@pytest.fixture(params=sorted(BACKENDS))
def kernel(request):
    return BACKENDS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pd(rng, p, cond=10.0):
    """Random symmetric positive definite matrix with bounded condition number."""
    q, _ = np.linalg.qr(rng.normal(size=(p, p)))
    eig = np.exp(rng.uniform(0.0, np.log(cond), size=p))
    m = (q * eig) @ q.T
    return 0.5 * (m + m.T)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
