import numpy as np
import pytest
from hypothesis import settings

from magframe.frame import FrameSpec, frame_matrix
from magframe.geometry import UniformGrid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def spec1():
    """Default d = 1 frame: L = 8, M = 512, N = 7, K = 64."""
    return FrameSpec(UniformGrid(1, 8.0, 512), 7, 64)


@pytest.fixture(scope="session")
def G1(spec1):
    return frame_matrix(spec1)


@pytest.fixture(scope="session")
def small_spec():
    """Cheap d = 1 frame for unit tests."""
    return FrameSpec(UniformGrid(1, 6.0, 256), 4, 24)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=lambda k: int(k[2:])):
        terminalreporter.write_line(mod.RESULTS[key])
