import numpy as np
import pytest

from bosonic_ising.model import fig2_instance, fig3b_instance

_criteria = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fig2():
    return fig2_instance(1)


@pytest.fixture
def four_site():
    return fig3b_instance(1)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and rep.when == "call" or marker and rep.when == "setup" and rep.failed:
        _criteria.append((marker.args[0] if marker.args else item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _criteria:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
