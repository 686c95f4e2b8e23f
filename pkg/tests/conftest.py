import numpy as np
import pytest

from laotest import HypothesisSet, three_binary_hypotheses


@pytest.fixture
def H3() -> HypothesisSet:
    return three_binary_hypotheses()


@pytest.fixture
def H2() -> HypothesisSet:
    return HypothesisSet(three_binary_hypotheses().dists[:2])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
