import numpy as np
import pytest
from hypothesis import settings

from stpbp import theory
from stpbp.tef import ParameterError, TefParams

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_ACCEPTANCE = {}


def random_valid_params(rng, a0=2, two_phase_share=0.8):
    """Draw TefParams accepted by the theory module (kappa1 > kappa2 > 0, rho*m_bar > 1, a0 < a_bar)."""
    while True:
        k1 = 10 ** rng.uniform(-4.5, -2.5)
        k2 = k1 * rng.uniform(0.05, 0.8)
        m = rng.uniform(2.0, 40.0)
        if rng.random() < two_phase_share:
            a_bar = rng.uniform(0.1, 0.9) * m / k1
        else:
            a_bar = rng.uniform(1.05, 2.0) * m / k1
        rho = rng.uniform(max(1.5 / m, 0.05), 1.0)
        p = TefParams(m, k1, k2, a_bar, rho)
        try:
            theory.check_params(p, a0)
        except ParameterError:
            continue
        return p


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def acceptance(request):
    """Record a criterion's measured value; printed in the terminal summary."""
    key = request.node.nodeid
    _ACCEPTANCE[key] = {"name": request.node.name, "detail": ""}

    def note(detail):
        _ACCEPTANCE[key]["detail"] = detail

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    entry = _ACCEPTANCE.get(item.nodeid)
    if entry is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        entry["outcome"] = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for entry in _ACCEPTANCE.values():
        terminalreporter.write_line(
            f"{entry.get('outcome', 'NOT RUN'):7s} {entry['name']}: {entry['detail']}")
