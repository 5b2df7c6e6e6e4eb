import numpy as np
import pytest

from diffnormals import PointCloud, build_index, radius_search
from diffnormals.errors import InvalidRadiusError

from oracles import brute_radius


def test_empty_index_returns_nothing():
    index = build_index(PointCloud(np.empty((0, 3))))
    assert radius_search(index, (0, 0, 0), 10.0).size == 0


def test_single_point_found():
    index = build_index(PointCloud([[1.0, 2.0, 3.0]]))
    for r in (1e-9, 0.5, 100.0):
        assert radius_search(index, (1, 2, 3), r).tolist() == [0]


def test_boundary_is_inclusive():
    cloud = PointCloud([[0.5, 0, 0], [0, 1.0, 0], [0, 0, 1.5]])
    assert sorted(radius_search(build_index(cloud), (0, 0, 0), 1.0).tolist()) == [0, 1]


@pytest.mark.parametrize("r", [0.0, -1.0, float("nan"), float("inf")])
def test_invalid_radius(r):
    index = build_index(PointCloud([[0.0, 0, 0]]))
    with pytest.raises(InvalidRadiusError):
        radius_search(index, (0, 0, 0), r)


def test_unit_cube_matches_brute_force(rng):
    pts = rng.uniform(0, 1, size=(1000, 3))
    index = build_index(PointCloud(pts))
    for _ in range(100):
        q = rng.uniform(-0.1, 1.1, 3)
        r = rng.uniform(0.01, 0.5)
        assert set(radius_search(index, q, r).tolist()) == brute_radius(pts, q, r)


def test_results_are_sorted(rng):
    pts = rng.normal(size=(500, 3))
    index = build_index(PointCloud(pts))
    for _ in range(50):
        got = radius_search(index, rng.normal(size=3), 1.0)
        assert np.all(np.diff(got) > 0)


def test_batch_search_agrees(rng):
    pts = rng.normal(size=(300, 3))
    index = build_index(PointCloud(pts))
    qs = rng.normal(size=(20, 3))
    for q, got in zip(qs, index.radius_search_many(qs, 0.7)):
        assert set(got.tolist()) == brute_radius(pts, q, 0.7)
