import pytest

from heston_xpand.bench import figure_params
from heston_xpand.model import HestonParams

_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.fixture
def fig1() -> HestonParams:
    return figure_params(1)


@pytest.fixture
def fig2() -> HestonParams:
    return figure_params(2)


@pytest.fixture
def fig4() -> HestonParams:
    return figure_params(4)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    label = props.get("criterion", report.nodeid.split("::")[-1])
    _ACCEPTANCE.append((label, "PASS" if report.passed else "FAIL", props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{outcome} {label}: {detail}")
