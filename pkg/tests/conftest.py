import numpy as np
import pytest

from mcflab.grid import DomainSpec, build_grid
from mcflab.metrics import make_metric
from mcflab.operators import ContactAngle


@pytest.fixture(scope="session")
def euclid():
    return make_metric("euclidean")


@pytest.fixture(scope="session")
def grim_grid(euclid):
    """Unit-half-width grim reaper interval at moderate resolution."""
    return build_grid(DomainSpec.interval(-1.0, 1.0, 100), euclid)


@pytest.fixture(scope="session")
def grim_phi():
    return ContactAngle.constant(-np.sin(1.0))


@pytest.fixture(scope="session")
def hyperbolic_ball_grid():
    """Geodesic ball of radius 2 on the rotationally symmetric chart."""
    return build_grid(DomainSpec.polar(2.0, 24, 36),
                      make_metric("hyperbolic_polar"))
