import numpy as np
import pytest

from diffnormals import PointCloud, VoxelGridSpec, voxel_downsample
from diffnormals.cloud import voxel_downsample_indices

from oracles import occupied_voxel_count


def test_cube_corners_collapse_to_one():
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], float)
    out = voxel_downsample(PointCloud(corners), VoxelGridSpec(2.0, (-0.5, -0.5, -0.5)))
    assert len(out) == 1


def test_fine_grid_is_identity(rng):
    pts = rng.uniform(0, 10, size=(200, 3))
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    min_gap = d[np.triu_indices(len(pts), 1)].min()
    out = voxel_downsample(PointCloud(pts), VoxelGridSpec(min_gap / 2))
    np.testing.assert_array_equal(out.points, pts)


def test_occupancy_matches_hash_grid(rng):
    pts = rng.uniform(0, 10, size=(10_000, 3))
    spec = VoxelGridSpec(1.0, (0, 0, 0))
    assert len(voxel_downsample(PointCloud(pts), spec)) == occupied_voxel_count(pts, 1.0, (0, 0, 0))


def test_default_origin_is_min_corner(rng):
    pts = rng.uniform(-3.3, 7.1, size=(2000, 3))
    out = voxel_downsample(PointCloud(pts), VoxelGridSpec(0.7))
    assert len(out) == occupied_voxel_count(pts, 0.7, pts.min(axis=0))


def test_representative_is_nearest_to_centroid():
    pts = np.array([[0.1, 0.1, 0.1], [0.5, 0.5, 0.5], [0.9, 0.9, 0.9], [0.45, 0.5, 0.5]])
    idx = voxel_downsample_indices(PointCloud(pts), VoxelGridSpec(1.0, (0, 0, 0)))
    assert idx.tolist() == [1]


def test_ties_take_lowest_index():
    pts = np.array([[0.2, 0.5, 0.5], [0.8, 0.5, 0.5]])
    idx = voxel_downsample_indices(PointCloud(pts), VoxelGridSpec(1.0, (0, 0, 0)))
    assert idx.tolist() == [0]


def test_output_points_are_members_in_order(rng):
    pts = rng.normal(size=(3000, 3))
    idx = voxel_downsample_indices(PointCloud(pts), VoxelGridSpec(0.5))
    assert np.all(np.diff(idx) > 0)


def test_attributes_follow(rng):
    pts = rng.normal(size=(100, 3))
    cloud = PointCloud(pts, {"id": np.arange(100)})
    out = voxel_downsample(cloud, VoxelGridSpec(1.0))
    np.testing.assert_array_equal(out.points, pts[out.attribute("id")])


def test_bad_voxel_len():
    with pytest.raises(ValueError):
        VoxelGridSpec(0.0)


def test_empty_cloud():
    assert len(voxel_downsample(PointCloud(np.empty((0, 3))), VoxelGridSpec(1.0))) == 0
