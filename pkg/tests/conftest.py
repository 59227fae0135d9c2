import pytest
from hypothesis import settings

from nilcurv.families import make_osserman_metric, make_szabo_metric
from nilcurv.tensorcalc import MetricSpec

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# coordinate indices of the 4-dimensional frame (x, u, v, y)
X, U, V, Y = range(4)


@pytest.fixture(scope="session")
def g2():
    return make_szabo_metric(2)


@pytest.fixture(scope="session")
def g3():
    return make_szabo_metric(3)


@pytest.fixture(scope="session")
def gt2():
    return make_osserman_metric(2)


@pytest.fixture(scope="session")
def flat4():
    return MetricSpec.from_entries(("x", "u", "v", "y"), {(0, 3): 1, (1, 2): 1})


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str = ""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
