import hypothesis
import numpy as np
import pytest

from partimax.tiling import TileCodingConfig, build
from partimax.verify import SMALL_TILING

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def full_coder():
    return build(TileCodingConfig())


@pytest.fixture(scope="session")
def small_coder():
    # 6 tilings, 20 boxes
    return build(SMALL_TILING)


@pytest.fixture(scope="session")
def grid_coder():
    # plain 4 x 3 grid, 12 boxes
    return build(TileCodingConfig(390, 290, 100, 100, 100, 100))


def make_particles(xy, v=(0.0, 0.0)):
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    out = np.zeros((len(xy), 4))
    out[:, :2] = xy
    out[:, 2:] = v
    return out


# acceptance tests append (label, passed, detail); printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
