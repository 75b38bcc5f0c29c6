"""Shared small configurations used across the suite."""

from fractions import Fraction

import pytest

from secpoly.geometry import PointConfig

Q = Fraction


@pytest.fixture(scope="session")
def square():
    return PointConfig.build(2, [("a", (0, 0)), ("b", (1, 0)),
                                 ("c", (1, 1)), ("d", (0, 1))])


@pytest.fixture(scope="session")
def tri_interior():
    # triangle with one interior point
    return PointConfig.build(2, [("a", (0, 0)), ("b", (3, 0)),
                                 ("c", (0, 3)), ("o", (1, 1))])


@pytest.fixture(scope="session")
def pentagon():
    return PointConfig.build(2, [("a", (0, 0)), ("b", (3, 0)), ("c", (4, 2)),
                                 ("d", (2, 4)), ("e", (-1, 2))])


@pytest.fixture(scope="session")
def sheared_square_inf():
    # convex position, pairwise distinct x, vertical infinity direction
    return PointConfig.build(2, [("a", (0, 0)), ("b", (3, 1)),
                                 ("c", (4, 4)), ("d", (1, 3))],
                             infinity=(0, 1))


@pytest.fixture(scope="session")
def segment_inf():
    # two finite points plus infinity: the smallest unbounded configuration
    return PointConfig.build(2, [("a", (0, 0)), ("b", (2, 1))], infinity=(0, 1))


@pytest.fixture(scope="session")
def tetra_interior():
    # 3-simplex with an interior point
    return PointConfig.build(3, [("a", (0, 0, 0)), ("b", (4, 0, 0)),
                                 ("c", (0, 4, 0)), ("d", (0, 0, 4)),
                                 ("o", (1, 1, 1))])
