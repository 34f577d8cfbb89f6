import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthboot.errors import ConfigurationError
from depthboot.frames import DepthFrame
from depthboot.geometry import (
    OPTICAL_TO_BASE,
    CameraModel,
    PointCloud,
    RigidTransform,
    back_project,
    height_band_filter,
    mount_extrinsic,
    project,
    rot_z,
    transform_points,
)


def _cam(**kw):
    args = dict(fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480)
    args.update(kw)
    return CameraModel(**args)


def test_principal_point_ray():
    cam = _cam(width=9, height=7, cx=4.0, cy=3.0)
    depth = np.zeros((7, 9))
    depth[3, 4] = 2.0
    cloud = back_project(DepthFrame(depth), cam)
    np.testing.assert_array_equal(cloud.points, [[0.0, 0.0, 2.0]])
    assert cloud.pixel_index.tolist() == [3 * 9 + 4]


def test_pinhole_hand_value():
    cam = _cam()
    depth = np.zeros((480, 640))
    depth[240, 420] = 1.0
    cloud = back_project(DepthFrame(depth), cam)
    np.testing.assert_allclose(cloud.points, [[0.2, 0.0, 1.0]], atol=1e-15)


def test_all_invalid_frame_gives_empty_cloud():
    cloud = back_project(DepthFrame(np.zeros((480, 640))), _cam())
    assert len(cloud) == 0 and cloud.points.shape == (0, 3)


def test_back_project_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        back_project(DepthFrame(np.ones((10, 10))), _cam())


def test_mask_restricts_points():
    cam = _cam(width=4, height=3, cx=1.0, cy=1.0)
    mask = np.zeros((3, 4), bool)
    mask[0, 0] = mask[2, 3] = True
    cloud = back_project(DepthFrame(np.ones((3, 4))), cam, mask)
    assert cloud.pixel_index.tolist() == [0, 11]


def test_round_trip_random(rng):
    cam = _cam()
    depth = rng.uniform(0.1, 8.0, (480, 640))
    depth[rng.random((480, 640)) < 0.3] = 0.0
    cloud = back_project(DepthFrame(depth), cam)
    u, v, z = project(cloud.points, cam)
    uu, vv = cam.pixel_grid()
    idx = cloud.pixel_index
    assert np.max(np.abs(u - uu.reshape(-1)[idx])) < 1e-6
    assert np.max(np.abs(v - vv.reshape(-1)[idx])) < 1e-6
    assert np.max(np.abs(z - depth.reshape(-1)[idx])) < 1e-6


def test_identity_transform():
    pts = np.array([[1.0, 2.0, 3.0], [-4.0, 0.5, 0.0]])
    out = transform_points(PointCloud(pts, "camera"), RigidTransform.identity())
    np.testing.assert_array_equal(out.points, pts)
    assert out.frame == "base"


def test_pure_translation():
    T = RigidTransform(np.eye(3), [0.0, 0.0, 1.0])
    np.testing.assert_array_equal(T.apply(np.array([[1.0, 2.0, 3.0]])), [[1.0, 2.0, 4.0]])


def test_yaw_quarter_turn():
    T = RigidTransform(rot_z(math.pi / 2), np.zeros(3))
    np.testing.assert_allclose(T.apply(np.array([[1.0, 0.0, 0.0]])), [[0.0, 1.0, 0.0]], atol=1e-12)


def test_rejects_non_rotation():
    with pytest.raises(ConfigurationError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(ConfigurationError):
        RigidTransform(2 * np.eye(3), np.zeros(3))


def test_optical_axis_maps_to_base_forward():
    ext = mount_extrinsic(0.1, 0.0, 0.45)
    # optical z forward, x right, y down
    np.testing.assert_allclose(ext.apply(np.array([[0.0, 0.0, 1.0]])), [[1.1, 0.0, 0.45]], atol=1e-15)
    np.testing.assert_allclose(OPTICAL_TO_BASE @ [1.0, 0.0, 0.0], [0.0, -1.0, 0.0])
    np.testing.assert_allclose(OPTICAL_TO_BASE @ [0.0, 1.0, 0.0], [0.0, 0.0, -1.0])


def test_positive_pitch_looks_down():
    ext = mount_extrinsic(0.0, 0.0, 0.45, pitch=0.2)
    fwd = ext.rotation @ [0.0, 0.0, 1.0]
    assert fwd[2] < 0 and fwd[0] > 0


angles = st.floats(-math.pi, math.pi)
coords = st.floats(-10, 10)


@settings(max_examples=200, deadline=None)
@given(angles, angles, angles, coords, coords, coords)
def test_inverse_composition(a, b, c, x, y, z):
    from depthboot.geometry import rot_x, rot_y

    T = RigidTransform(rot_z(a) @ rot_y(b) @ rot_x(c), [x, y, z])
    pts = np.random.default_rng(0).uniform(-5, 5, (50, 3))
    back = T.inverse().apply(T.apply(pts))
    assert np.max(np.abs(back - pts)) < 1e-9
    np.testing.assert_allclose(T.compose(T.inverse()).matrix(), np.eye(4), atol=1e-9)


def test_height_band_defaults_and_bounds():
    pts = np.array([[0, 0, 0.04], [0, 0, 0.05], [0, 0, 1.0], [0, 0, 2.0], [0, 0, 2.0001]])
    out = height_band_filter(PointCloud(pts, "base"))
    assert out.points[:, 2].tolist() == [0.05, 1.0, 2.0]


def test_height_band_hundred_points(rng):
    z = rng.uniform(0, 4, 100)
    pts = np.c_[np.zeros(100), np.zeros(100), z]
    kept = height_band_filter(PointCloud(pts, "base"))
    assert len(kept) == sum(1 for v in z if 0.05 <= v <= 2.0)


def test_height_band_brute_force_1e5(rng):
    pts = rng.uniform(-1, 3, (100_000, 3))
    # exact bound values must survive
    pts[:10, 2] = 0.05
    pts[10:20, 2] = 2.0
    kept = height_band_filter(PointCloud(pts, "base", np.arange(100_000)))
    expected = [i for i in range(len(pts)) if 0.05 <= pts[i, 2] <= 2.0]
    assert kept.pixel_index.tolist() == expected


def test_height_band_idempotent(rng):
    cloud = PointCloud(rng.uniform(-1, 3, (1000, 3)), "base")
    once = height_band_filter(cloud)
    twice = height_band_filter(once)
    np.testing.assert_array_equal(once.points, twice.points)


def test_height_band_rejects_empty_interval():
    with pytest.raises(ConfigurationError):
        height_band_filter(PointCloud(np.zeros((1, 3)), "base"), 1.0, 1.0)


def test_camera_dict_round_trip():
    cam = _cam(extrinsic=mount_extrinsic(0.1, 0.0, 0.45, 0.1))
    again = CameraModel.from_dict(cam.to_dict())
    np.testing.assert_array_equal(again.extrinsic.matrix(), cam.extrinsic.matrix())
    assert (again.fx, again.width) == (cam.fx, cam.width)
