import pytest

from mandelbrot_area.engine import EXACT, FLOAT, compute_stream


@pytest.fixture(scope="session")
def exact_300():
    return compute_stream(301, EXACT)


@pytest.fixture(scope="session")
def float_10k():
    return compute_stream(10_001, FLOAT)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
