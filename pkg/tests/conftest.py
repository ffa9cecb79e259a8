import numpy as np
import pytest

from helisoliton.curve import build_generating_curve
from helisoliton.integrator import integrate_trajectory
from helisoliton.phase import SolitonParams


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def traj_h1():
    return integrate_trajectory((0.0, 0.0, 0.0), SolitonParams(1.0), span=(-20, 20), tol=(1e-12, 1e-12))


@pytest.fixture(scope="session")
def curve_h1(traj_h1):
    return build_generating_curve(traj_h1)


@pytest.fixture(scope="session")
def traj_h2():
    return integrate_trajectory((0.0, 0.0, 0.0), SolitonParams(2.0), span=(-20, 20), tol=(1e-12, 1e-12))


@pytest.fixture(scope="session")
def curve_h2(traj_h2):
    return build_generating_curve(traj_h2)
