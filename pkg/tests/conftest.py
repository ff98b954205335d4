import pytest

from selberg_lab.primes import table_for

_ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)
    return line


@pytest.fixture(scope="session")
def table10():
    return table_for(10)


@pytest.fixture(scope="session")
def table100():
    return table_for(100)


@pytest.fixture(scope="session")
def table1e4():
    return table_for(10_000)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def batch_x100_T1e6():
    from selberg_lab.dirpoly import PolyConfig, sample_poly

    return sample_poly(PolyConfig(x=100, T=1e6, n_samples=10**6, seed=7), table_for(100))
