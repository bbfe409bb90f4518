import math
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.geometry.domain import Aperture, BoundaryTag, build_domain  # noqa: E402
from src.geometry.mesh import generate_mesh, rectangle_mesh  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run production-size acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


DIRICHLET_SIDES = {
    "left": BoundaryTag.WALL_OUTER,
    "right": BoundaryTag.TRUNCATION,
    "bottom": BoundaryTag.WALL_OUTER,
    "top": BoundaryTag.WALL_INNER,
}

CYLINDER_SIDES = {
    "left": BoundaryTag.AXIS,
    "right": BoundaryTag.TRUNCATION,
    "bottom": BoundaryTag.WALL_OUTER,
    "top": BoundaryTag.WALL_INNER,
}


def flat_weight(a, b):
    return np.ones_like(a)


def radial_weight(a, b):
    return np.asarray(a, dtype=float)


@pytest.fixture
def aperture_80():
    return Aperture.from_theta(math.radians(80.0))


@pytest.fixture
def aperture_85():
    return Aperture.from_theta(math.radians(85.0))


@pytest.fixture
def coarse_mesh_80(aperture_80):
    """Cheap graded mesh, about a thousand nodes"""
    return generate_mesh(build_domain(aperture_80, aperture_80.tip_s + 12.0), h=1.0, grading=2.0)


@pytest.fixture
def unit_square_mesh():
    return rectangle_mesh(1.0, 1.0, 8, 8, DIRICHLET_SIDES)
