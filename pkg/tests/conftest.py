import numpy as np
import pytest

from twrelay.model import ChannelSet, ScenarioParams


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_channels(rng, K, M, N):
    return ChannelSet(h=cn(rng, 2 * K, M, N), f=cn(rng, M, 2 * K, N))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy():
    """K = M = N_R = 1 hand example: h = (1, 2), f = (1, 1), W = 1, p = (4, 1)."""
    ch = ChannelSet(h=np.array([1.0, 2.0]).reshape(2, 1, 1), f=np.ones((1, 2, 1)))
    sp = ScenarioParams(
        P_U_max=10.0, P_sumU_max=20.0, P_A_max=9.0, P_sumR_max=9.0, r=np.zeros(1),
    )
    W = np.ones((1, 1, 1), dtype=complex)
    p = np.array([4.0, 1.0])
    return ch, sp, p, W


CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA):
            terminalreporter.write_line(line)
