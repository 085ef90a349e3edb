import numpy as np
import pytest

from chaokey.keystream import derive_key
from chaokey.system import REFERENCE_INIT, SystemParams, simulate


@pytest.fixture(scope="session")
def photo512():
    data = pytest.importorskip("skimage.data")
    return np.ascontiguousarray(data.astronaut())


@pytest.fixture(scope="session")
def photo256(photo512):
    return np.ascontiguousarray(photo512[::2, ::2])


@pytest.fixture(scope="session")
def photo_key(photo256):
    return derive_key(photo256)


@pytest.fixture(scope="session")
def chaotic_u1():
    """u1 at the reference parameters, one sample per 0.1 time units."""
    traj = simulate(REFERENCE_INIT, SystemParams(), 1e-3, 10_000, 50_000, stride=100)
    return traj.component(0).copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
