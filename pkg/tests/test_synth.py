import math

import numpy as np
import pytest

from depthboot.errors import ScenarioError
from depthboot.geometry import CameraModel, mount_extrinsic
from depthboot.synth import (
    Box,
    CorridorScene,
    HallucinationPatch,
    LearnedDepthModel,
    LidarModel,
    Pedestrian,
    ReflectivePatch,
    ToFModel,
    cast_rays,
    render_gt_depth,
    render_learned_depth,
    render_lidar_scan,
    render_semantic_labels,
    render_tof_frame,
)
from depthboot.synth.scene import CLASS_ID


def _wall_facing(distance=3.0, **scene_kw):
    # robot at x = 1, end wall `distance` ahead; the wall fills the whole image
    scene = CorridorScene(length=1.0 + distance, width=20.0, wall_height=20.0, floor=False, **scene_kw)
    cam = CameraModel(50.0, 50.0, 50.0, 40.0, 100, 80, mount_extrinsic(0.0, 0.0, 5.0))
    return scene, cam, (1.0, 0.0, 0.0)


def test_orthogonal_wall_depth():
    scene, cam, pose = _wall_facing(3.0)
    gt = render_gt_depth(scene, pose, cam)
    assert abs(gt.depth[40, 50] - 3.0) < 1e-9
    # z-depth is constant across a fronto-parallel wall
    assert np.max(np.abs(gt.depth - 3.0)) < 1e-9


def test_empty_scene_renders_zero():
    cam = CameraModel(50.0, 50.0, 50.0, 40.0, 100, 80, mount_extrinsic(0.0, 0.0, 1.0))
    gt = render_gt_depth(CorridorScene.empty(), (1.0, 0.0, 0.0), cam)
    assert not gt.depth.any()
    labels = render_semantic_labels(CorridorScene.empty(), (1.0, 0.0, 0.0), cam)
    assert (labels == CLASS_ID["other"]).all()


def test_box_front_face_depth():
    box = Box((2.5, -0.5, 0.5), (3.0, 0.5, 1.5), "furniture")
    scene = CorridorScene.empty(length=10.0, width=4.0, wall_height=3.0, obstacles=(box,))
    cam = CameraModel(50.0, 50.0, 50.0, 40.0, 100, 80, mount_extrinsic(0.0, 0.0, 1.0))
    gt = render_gt_depth(scene, (1.0, 0.0, 0.0), cam)
    # face spans |y|, |z - 1| <= 0.5 at 1.5 m, i.e. +-16 pixels around the center
    np.testing.assert_allclose(gt.depth[30:51, 40:61], 1.5, atol=1e-6)
    assert gt.depth[0, 0] == 0.0


def test_pose_outside_corridor():
    scene, cam, _ = _wall_facing()
    with pytest.raises(ScenarioError):
        render_gt_depth(scene, (-1.0, 0.0, 0.0), cam)


def test_tof_clean_passthrough():
    scene, cam, pose = _wall_facing(3.0)
    gt = render_gt_depth(scene, pose, cam)
    tof = render_tof_frame(gt, scene, pose, cam, ToFModel(), seed=0)
    np.testing.assert_array_equal(tof.depth, gt.depth)
    assert (tof.confidence == 1.0).all()


def test_tof_patch_covering_78_percent():
    # column u sees the wall at y = -3 (u - 50) / 50; y >= -1.65 keeps u <= 77
    patch = ReflectivePatch((3.99, -1.65, -10.0), (4.01, 10.0, 30.0), 1.0)
    scene, cam, pose = _wall_facing(3.0, reflective_patches=(patch,))
    gt = render_gt_depth(scene, pose, cam)
    tof = render_tof_frame(gt, scene, pose, cam, ToFModel(), seed=0)
    assert abs(tof.invalid_fraction() - 0.78) <= 0.01


def test_tof_half_dropout_binomial():
    patch = ReflectivePatch((0.0, -10.0, -10.0), (10.0, 10.0, 30.0), 0.5)
    scene, cam, pose = _wall_facing(3.0, reflective_patches=(patch,))
    gt = render_gt_depth(scene, pose, cam)
    tof = render_tof_frame(gt, scene, pose, cam, ToFModel(), seed=42)
    n = gt.depth.size
    assert abs(tof.invalid_fraction() - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_tof_range_cutoff():
    scene, cam, pose = _wall_facing(6.0)
    gt = render_gt_depth(scene, pose, cam)
    tof = render_tof_frame(gt, scene, pose, cam, ToFModel(d_max=5.0), seed=0)
    assert not tof.depth.any() and (tof.confidence < 0.5).all()


def test_tof_determinism_and_coverage():
    patch = ReflectivePatch((0.0, -10.0, -10.0), (10.0, 10.0, 30.0), 0.4)
    scene, cam, pose = _wall_facing(3.0, reflective_patches=(patch,))
    gt = render_gt_depth(scene, pose, cam)
    gt.depth[:10] = 0.0
    model = ToFModel(sigma=0.02)
    a = render_tof_frame(gt, scene, pose, cam, model, seed=np.random.SeedSequence([1, 2]))
    b = render_tof_frame(gt, scene, pose, cam, model, seed=np.random.SeedSequence([1, 2]))
    assert a.depth.tobytes() == b.depth.tobytes()
    assert a.confidence.tobytes() == b.confidence.tobytes()
    assert np.all(gt.depth[a.depth > 0] > 0)


def test_invalidity_monotone_in_p_drop():
    fractions = []
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        patch = ReflectivePatch((0.0, -10.0, -10.0), (10.0, 10.0, 30.0), p)
        scene, cam, pose = _wall_facing(3.0, reflective_patches=(patch,))
        gt = render_gt_depth(scene, pose, cam)
        fractions.append(render_tof_frame(gt, scene, pose, cam, ToFModel(), seed=9).invalid_fraction())
    assert fractions == sorted(fractions)
    assert fractions[0] == 0.0 and fractions[-1] == 1.0


def test_frozen_pattern_without_intermittency():
    patch = ReflectivePatch((0.0, -10.0, -10.0), (10.0, 10.0, 30.0), 0.5)
    scene, cam, pose = _wall_facing(3.0, reflective_patches=(patch,))
    gt = render_gt_depth(scene, pose, cam)
    model = ToFModel(intermittency=0.0, pattern_seed=3)
    a = render_tof_frame(gt, scene, pose, cam, model, seed=1)
    b = render_tof_frame(gt, scene, pose, cam, model, seed=2)
    np.testing.assert_array_equal(a.confidence, b.confidence)


def test_learned_exact_scale():
    scene, cam, pose = _wall_facing(3.0)
    gt = render_gt_depth(scene, pose, cam)
    rel = render_learned_depth(gt, LearnedDepthModel(s_true=2.0), seed=0)
    np.testing.assert_array_equal(rel.depth, gt.depth / 2.0)


def test_learned_hallucination_offset():
    scene, cam, pose = _wall_facing(3.0)
    gt = render_gt_depth(scene, pose, cam)
    model = LearnedDepthModel(hallucinations=(HallucinationPatch(10, 5, 20, 15, -0.5),))
    rel = render_learned_depth(gt, model, seed=0)
    diff = rel.depth - gt.depth
    np.testing.assert_allclose(diff[5:15, 10:20], -0.5, atol=1e-12)
    diff[5:15, 10:20] = 0.0
    assert not diff.any()


def test_learned_median_ratio_noisy():
    scene, cam, pose = _wall_facing(3.0)
    gt = render_gt_depth(scene, pose, cam)
    rel = render_learned_depth(gt, LearnedDepthModel(s_true=3.0, sigma=0.05), seed=5)
    assert abs(np.median(gt.depth / rel.depth) / 3.0 - 1.0) < 0.01


def test_learned_fills_holes():
    scene, cam, pose = _wall_facing(3.0)
    gt = render_gt_depth(scene, pose, cam)
    gt.depth[:, :30] = 0.0
    rel = render_learned_depth(gt, LearnedDepthModel(), seed=0)
    assert (rel.depth > 0).all()


def test_lidar_centered_perpendicular():
    scene = CorridorScene(length=10.0, width=2.0)
    model = LidarModel(angle_min=-math.pi / 2, angle_increment=math.pi / 2, num_beams=3)
    scan = render_lidar_scan(scene, (5.0, 0.0, 0.0), model)
    assert scan.ranges[0] == pytest.approx(1.0, abs=1e-12)
    assert scan.ranges[2] == pytest.approx(1.0, abs=1e-12)
    assert scan.ranges[1] == pytest.approx(5.0, abs=1e-12)


def test_lidar_misses_above_plane_box():
    box = Box((2.0, -0.5, 0.5), (2.5, 0.5, 1.5))
    scene = CorridorScene.empty(length=10.0, width=4.0, obstacles=(box,))
    scan = render_lidar_scan(scene, (1.0, 0.0, 0.0), LidarModel(angle_min=0.0, num_beams=1))
    assert np.isnan(scan.ranges[0])


def test_lidar_sees_through_glass():
    glass = Box((3.0, -1.0, 0.0), (3.05, 1.0, 2.0), "glass")
    scene = CorridorScene(length=5.0, width=2.0, obstacles=(glass,))
    scan = render_lidar_scan(scene, (1.0, 0.0, 0.0), LidarModel(angle_min=0.0, num_beams=1))
    assert scan.ranges[0] == pytest.approx(4.0, abs=1e-12)


def test_glass_never_shortens_ranges(rng):
    for _ in range(20):
        lo = rng.uniform([1.0, -0.9, 0.0], [8.0, 0.5, 0.1])
        hi = lo + rng.uniform([0.05, 0.05, 0.2], [1.0, 0.4, 1.5])
        hi[1] = min(hi[1], 0.99)
        opaque = CorridorScene(length=10.0, width=2.0, obstacles=(Box(tuple(lo), tuple(hi), "furniture"),))
        clear = CorridorScene(length=10.0, width=2.0, obstacles=(Box(tuple(lo), tuple(hi), "glass"),))
        pose = (0.5, 0.0, float(rng.uniform(-1, 1)))
        a = render_lidar_scan(opaque, pose, LidarModel()).ranges
        b = render_lidar_scan(clear, pose, LidarModel()).ranges
        a, b = np.nan_to_num(a, nan=np.inf), np.nan_to_num(b, nan=np.inf)
        assert np.all(b >= a)


def test_labels_split_at_horizon():
    scene = CorridorScene(length=6.0, width=10.0, wall_height=5.0)
    cam = CameraModel(30.0, 30.0, 20.0, 15.0, 40, 30, mount_extrinsic(0.0, 0.0, 0.45))
    labels = render_semantic_labels(scene, (1.0, 0.0, 0.0), cam)
    col = labels[:, 20]
    for v in range(30):
        # floor hit distance along the central column vs the end wall 5 m ahead
        floor_hit = 0.45 * 30.0 / (v - 15.0) if v > 15 else math.inf
        expected = "floor" if floor_hit < 5.0 else "wall"
        assert col[v] == CLASS_ID[expected], v


def test_pedestrian_pixels_labeled_person():
    ped = Pedestrian(((0.0, 3.0, 0.0),))
    scene = CorridorScene.empty(length=10.0, width=4.0, pedestrians=(ped,))
    cam = CameraModel(30.0, 30.0, 20.0, 15.0, 40, 30, mount_extrinsic(0.0, 0.0, 1.0))
    labels = render_semantic_labels(scene, (1.0, 0.0, 0.0), cam)
    gt = render_gt_depth(scene, (1.0, 0.0, 0.0), cam)
    assert labels[15, 20] == CLASS_ID["person"]
    assert (labels[gt.depth > 0] == CLASS_ID["person"]).all()
    assert gt.depth[15, 20] == pytest.approx(2.0 - 0.22, abs=1e-9)


def test_pedestrian_moves_along_waypoints():
    ped = Pedestrian(((0.0, 1.0, 0.0), (2.0, 3.0, 1.0)))
    assert ped.position(1.0) == (2.0, 0.5)
    assert ped.position(5.0) == (3.0, 1.0)


def test_cast_rays_class_and_miss():
    scene = CorridorScene(length=4.0, width=2.0)
    t, cls = cast_rays(scene, np.array([1.0, 0.0, 1.0]), np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
    assert t[0] == pytest.approx(3.0) and cls[0] == CLASS_ID["wall"]
    assert np.isinf(t[1]) and cls[1] == CLASS_ID["other"]


def test_scene_validation():
    with pytest.raises(ScenarioError):
        CorridorScene(length=2.0, width=2.0, obstacles=(Box((1.0, 0.5, 0.0), (1.5, 1.5, 1.0)),))
    with pytest.raises(ScenarioError):
        Box((0, 0, 0), (1, 1, 1), "sofa")
    with pytest.raises(ScenarioError):
        ReflectivePatch((0, 0, 0), (1, 1, 1), 1.5)
