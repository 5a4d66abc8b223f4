#! /usr/bin/env python
# Tests of the camera model, plane sampling and warp grids
import numpy as np
import pytest

from scipy.spatial.transform import Rotation

from sweeptool.geometry import (CameraIntrinsics, CameraPose, sample_planes,
                                project_pixel, compute_warp_grid,
                                project_depth_map, scale_intrinsics,
                                PlaneHypothesisSet)


K = CameraIntrinsics(100.0, 100.0, 50.0, 50.0, 101, 101)


def test_inverse_planes():
    planes = sample_planes(64, 0.5)
    assert planes.depths[-1] == pytest.approx(0.5)
    assert planes.depths[0] == pytest.approx(32.0)
    assert np.all(np.diff(planes.depths) < 0)
    assert len(planes) == 64


def test_single_plane():
    assert list(sample_planes(1, 2.0).depths) == [2.0]


def test_uniform_planes():
    planes = sample_planes(5, 1.0, mode='uniform', dMax=3.0)
    np.testing.assert_allclose(planes.depths, [3.0, 2.5, 2.0, 1.5, 1.0])


@pytest.mark.parametrize('L, dMin', [(0, 0.5), (4, 0.0), (4, -1.0)])
def test_planes_invalid(L, dMin):
    with pytest.raises(ValueError):
        sample_planes(L, dMin)


def test_planes_invalid_mode():
    with pytest.raises(ValueError):
        sample_planes(4, 0.5, mode='log')


def test_project_identity():
    x, y, z, valid = project_pixel((50, 50), 3.7, K, CameraPose.identity())
    assert (x, y) == (50.0, 50.0)
    assert valid


def test_project_translation_x():
    pose = CameraPose(np.eye(3), (0.1, 0.0, 0.0))
    x, y, z, valid = project_pixel((50, 50), 2.0, K, pose)
    assert x == pytest.approx(55.0, abs=1e-12)
    assert y == pytest.approx(50.0, abs=1e-12)
    assert z == pytest.approx(2.0)


def test_project_translation_z():
    pose = CameraPose(np.eye(3), (0.0, 0.0, -0.5))
    x, y, z, valid = project_pixel((60, 50), 2.0, K, pose)
    assert x == pytest.approx(50.0 + 10.0 * 2.0 / 1.5, abs=1e-12)
    assert z == pytest.approx(1.5)


def test_project_behind_camera():
    pose = CameraPose(np.eye(3), (0.0, 0.0, -5.0))
    x, y, z, valid = project_pixel((50, 50), 2.0, K, pose)
    assert not valid
    assert np.isnan(x)


def test_pose_validation():
    with pytest.raises(ValueError):
        CameraPose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(ValueError):
        CameraPose(2.0 * np.eye(3), np.zeros(3))


def test_pose_center():
    pose = CameraPose(np.eye(3), (0.1, -0.2, 0.3))
    np.testing.assert_allclose(pose.center(), [-0.1, 0.2, -0.3])


def test_world_to_camera_conversion():
    # Two cameras 0.2 m apart along x, both looking down +z
    pose = CameraPose.fromWorldToCamera(np.eye(3), (0.0, 0.0, 0.0),
                                        np.eye(3), (-0.2, 0.0, 0.0))
    np.testing.assert_allclose(pose.t, [-0.2, 0.0, 0.0])
    np.testing.assert_allclose(pose.R, np.eye(3))


def test_warp_grid_identity():
    planes = sample_planes(4, 0.5)
    grid = compute_warp_grid(CameraIntrinsics(4.0, 4.0, 2.0, 2.0, 5, 4),
                             CameraPose.identity(), planes)
    ys, xs = np.mgrid[0:4, 0:5]
    assert grid.shape == (4, 4, 5)
    for l in range(4):
        assert np.array_equal(grid.coords[l, ..., 0], xs)
        assert np.array_equal(grid.coords[l, ..., 1], ys)
    assert np.all(grid.inBounds)


def test_warp_grid_matches_pixel_projection():
    pose = CameraPose(np.eye(3), (0.1, 0.0, 0.0))
    planes = sample_planes(8, 0.25)
    grid = compute_warp_grid(K, pose, planes)
    l = 6
    for (x, y) in [(0, 0), (50, 50), (100, 7), (33, 90)]:
        px, py, z, valid = project_pixel((x, y), planes.depths[l], K, pose)
        assert grid.coords[l, y, x, 0] == pytest.approx(px, abs=1e-9)
        assert grid.coords[l, y, x, 1] == pytest.approx(py, abs=1e-9)


def test_warp_grid_row_shift():
    pose = CameraPose(np.eye(3), (0.1, 0.0, 0.0))
    grid = project_depth_map(K, pose, np.full((101, 101), 2.0))
    shift = grid.coords[0, 50, :, 0] - np.arange(101)
    np.testing.assert_allclose(shift, 5.0, atol=1e-9)
    assert not np.any(grid.inBounds[0, :, 96:])
    assert np.all(grid.inBounds[0, :, :96])


def test_warp_grid_out_of_bounds():
    small = CameraIntrinsics(4.0, 4.0, 1.5, 1.5, 4, 4)
    pose = CameraPose(np.eye(3), (10.0, 0.0, 0.0))
    grid = compute_warp_grid(small, pose, sample_planes(2, 1.0))
    assert not np.any(grid.inBounds)


def test_scale_intrinsics():
    K0 = CameraIntrinsics(100.0, 100.0, 49.5, 49.5, 100, 100)
    assert scale_intrinsics(K0, 1.0) == K0
    K1 = scale_intrinsics(K0, 0.25)
    assert K1.fx == pytest.approx(25.0)
    assert K1.cx == pytest.approx(12.0)
    assert K1.width == 25
    K2 = scale_intrinsics(K1, 4.0)
    for a, b in [(K2.fx, K0.fx), (K2.fy, K0.fy), (K2.cx, K0.cx), (K2.cy, K0.cy)]:
        assert abs(a - b) < 1e-12
    with pytest.raises(ValueError):
        scale_intrinsics(K0, 0.0)


def test_scale_intrinsics_corner_principal_point():
    K0 = CameraIntrinsics(20.0, 20.0, 0.0, 0.0, 32, 32)
    K1 = scale_intrinsics(K0, 0.25)
    assert (K1.width, K1.height) == (8, 8)
    assert K1.cx == pytest.approx(-0.375, abs=1e-12)
    K2 = scale_intrinsics(K1, 4.0)
    for a, b in [(K2.fx, K0.fx), (K2.fy, K0.fy), (K2.cx, K0.cx), (K2.cy, K0.cy)]:
        assert abs(a - b) < 1e-12
    assert (K2.width, K2.height) == (32, 32)


def test_scale_intrinsics_rounds_half_up():
    K0 = CameraIntrinsics(10.0, 10.0, 4.5, 6.5, 10, 14)
    K1 = scale_intrinsics(K0, 0.25)
    # 2.5 and 3.5 pixels both round up
    assert (K1.width, K1.height) == (3, 4)


@pytest.mark.parametrize('cx, cy', [(-0.5, 0.0), (31.5, 31.5), (0.0, -0.5)])
def test_principal_point_edges(cx, cy):
    K0 = CameraIntrinsics(20.0, 20.0, cx, cy, 32, 32)
    assert (K0.cx, K0.cy) == (cx, cy)


@pytest.mark.parametrize('cx, cy', [(-0.6, 0.0), (31.6, 0.0), (0.0, 32.0)])
def test_principal_point_outside(cx, cy):
    with pytest.raises(ValueError):
        CameraIntrinsics(20.0, 20.0, cx, cy, 32, 32)


def _random_camera(rng):
    f = rng.uniform(20.0, 200.0)
    size = int(rng.integers(16, 128))
    K0 = CameraIntrinsics(f, f * rng.uniform(0.9, 1.1),
                          rng.uniform(0, size - 1), rng.uniform(0, size - 1),
                          size, size)
    R = Rotation.from_rotvec(rng.normal(0.0, 0.2, size=3)).as_matrix()
    return K0, CameraPose(R, rng.normal(0.0, 0.2, size=3))


def _homography(K0, pose, d):
    # Induced by the fronto-parallel plane z = d of the reference camera
    n = np.array([0.0, 0.0, 1.0])
    Kinv = np.linalg.inv(K0.K)
    return K0.K.dot(pose.R + np.outer(pose.t, n) / d).dot(Kinv)


def test_warp_oracle_random_cameras():
    rng = np.random.default_rng(2024)
    checked = 0
    for i in range(1000):
        K0, pose = _random_camera(rng)
        d = rng.uniform(0.5, 10.0)
        u = rng.uniform(0, K0.width - 1, size=2)
        h = _homography(K0, pose, d).dot([u[0], u[1], 1.0])
        x, y, z, valid = project_pixel(u, d, K0, pose)
        assert valid == (h[2] * d > 1e-9)
        if h[2] * d < 0.1:
            continue
        assert x == pytest.approx(h[0] / h[2], abs=1e-9)
        assert y == pytest.approx(h[1] / h[2], abs=1e-9)
        assert z == pytest.approx(h[2] * d, abs=1e-9)
        checked += 1
    assert checked > 900


def test_warp_grid_oracle_random_cameras():
    rng = np.random.default_rng(7)
    for i in range(20):
        K0, pose = _random_camera(rng)
        depths = np.sort(rng.uniform(1.0, 8.0, size=3))[::-1]
        grid = compute_warp_grid(K0, pose, PlaneHypothesisSet(depths, depths[-1],
                                                              'inverse'))
        ys, xs = np.mgrid[0:K0.height, 0:K0.width]
        lattice = np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)])
        for l, d in enumerate(depths):
            h = _homography(K0, pose, d).dot(lattice)
            front = h[2] * d > 0.1
            expected = (h[:2] / h[2]).T.reshape(K0.height, K0.width, 2)
            np.testing.assert_allclose(grid.coords[l][front.reshape(ys.shape)],
                                       expected[front.reshape(ys.shape)],
                                       rtol=0, atol=1e-9)


@pytest.mark.parametrize('seed', range(5))
def test_epipolar_collinearity(seed):
    rng = np.random.default_rng(seed)
    K0, pose = _random_camera(rng)
    u = rng.uniform(0, K0.width - 1, size=2)
    tx = np.array([[0.0, -pose.t[2], pose.t[1]],
                   [pose.t[2], 0.0, -pose.t[0]],
                   [-pose.t[1], pose.t[0], 0.0]])
    Kinv = np.linalg.inv(K0.K)
    line = Kinv.T.dot(tx).dot(pose.R).dot(Kinv).dot([u[0], u[1], 1.0])
    for d in sample_planes(16, 0.5).depths:
        x, y, z, valid = project_pixel(u, d, K0, pose)
        if not valid:
            continue
        residual = abs(line.dot([x, y, 1.0])) / np.hypot(line[0], line[1])
        assert residual < 1e-6


@pytest.mark.parametrize('seed', range(5))
def test_projection_inverse_round_trip(seed):
    rng = np.random.default_rng(100 + seed)
    K0, pose = _random_camera(rng)
    back = pose.inverse()
    np.testing.assert_allclose(back.inverse().R, pose.R, atol=1e-12)
    np.testing.assert_allclose(back.inverse().t, pose.t, atol=1e-12)
    for i in range(20):
        u = rng.uniform(0, K0.width - 1, size=2)
        d = rng.uniform(1.0, 5.0)
        x, y, z, valid = project_pixel(u, d, K0, pose)
        if not valid or z < 0.1:
            continue
        x2, y2, z2, valid2 = project_pixel((x, y), z, K0, back)
        assert valid2
        assert x2 == pytest.approx(u[0], abs=1e-9)
        assert y2 == pytest.approx(u[1], abs=1e-9)
        assert z2 == pytest.approx(d, abs=1e-9)


@pytest.mark.parametrize('L, dMin', [(2, 0.5), (8, 0.25), (64, 0.5), (100, 1.3)])
def test_inverse_depth_spacing(L, dMin):
    inverse = 1.0 / sample_planes(L, dMin).depths
    np.testing.assert_allclose(np.diff(inverse), 1.0 / (L * dMin), rtol=0,
                               atol=1e-12)


@pytest.mark.parametrize('scale', [0.5, 2.0, 7.3])
def test_sweep_scale_covariance(scale):
    rng = np.random.default_rng(3)
    K0, pose = _random_camera(rng)
    planes = sample_planes(8, 0.5)
    grid = compute_warp_grid(K0, pose, planes)
    scaled = compute_warp_grid(K0, CameraPose(pose.R, pose.t * scale),
                               sample_planes(8, 0.5 * scale))
    np.testing.assert_array_equal(grid.inBounds, scaled.inBounds)
    inside = grid.inBounds
    assert np.any(inside)
    np.testing.assert_allclose(scaled.coords[inside], grid.coords[inside],
                               rtol=0, atol=1e-9)
