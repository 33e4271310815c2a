import numpy as np
import pytest

from modelnorm.domains import DomainKind
from modelnorm.inner import BPFactor, build
from modelnorm.rational import MatRational

KINDS = list(DomainKind)

# pass/fail lines collected by test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def bp(kind, m, factors, constant=None):
    """Blaschke-Potapov product from ``[(alpha, v), ...]``."""
    const = np.eye(m) if constant is None else constant
    return build(kind, m, const, [BPFactor(a, v) for a, v in factors])


def poly(*coeffs):
    return MatRational.polynomial(list(coeffs))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=KINDS, ids=lambda k: k.value)
def kind(request):
    return request.param


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
