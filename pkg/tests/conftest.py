import numpy as np
import pytest

from trapion.state import ChainSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def spec1():
    return ChainSpec(n_ions=1, fock_cutoff=6)


@pytest.fixture
def spec2():
    return ChainSpec(n_ions=2, fock_cutoff=6)


@pytest.fixture
def spec3():
    return ChainSpec(n_ions=3, fock_cutoff=5)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
