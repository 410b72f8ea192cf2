import pytest

from auction_lab.dist import Exponential, Lognormal, Uniform


@pytest.fixture
def unif():
    return Uniform(0.0, 1.0)


@pytest.fixture
def logn():
    return Lognormal(1.0, 1.0, 1.0)


@pytest.fixture
def expo():
    return Exponential(1.0)


ALL_KINDS = [Uniform(0.0, 1.0), Lognormal(1.0, 1.0, 1.0), Exponential(1.0)]


@pytest.fixture(params=ALL_KINDS, ids=lambda d: d.kind)
def any_dist(request):
    return request.param


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
