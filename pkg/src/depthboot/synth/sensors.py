"""Synthetic sensors rendered from a :class:`CorridorScene`.

Poses are planar ``(x, y, yaw)`` triples of the robot base in the world.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ScenarioError
from ..frames import CONF_DROPPED, CONF_VALID, DepthFrame, LidarScan
from ..geometry import CameraModel, RigidTransform
from .scene import GLASS, OTHER, CorridorScene, cast_rays

DEFAULT_RANGE_MAX = 20.0


@dataclass(frozen=True)
class ToFModel:
    """Time-of-flight camera failure model.

    Surfaces inside a reflective patch drop out with the patch's ``p_drop``.
    Each pixel carries a persistent dropout draw seeded by ``pattern_seed``;
    every frame a pixel's draw is renewed with probability ``intermittency``
    (1 gives an independent pattern per frame, 0 a frozen one).
    """

    sigma: float = 0.0
    d_max: float = 5.0
    intermittency: float = 1.0
    pattern_seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ScenarioError("ToF sigma must be >= 0")
        if not 0.0 <= self.intermittency <= 1.0:
            raise ScenarioError("intermittency must be in [0, 1]")


@dataclass(frozen=True)
class HallucinationPatch:
    """Image rectangle ``[u0, u1) x [v0, v1)`` whose depth is shifted by ``offset`` meters."""

    u0: int
    v0: int
    u1: int
    v1: int
    offset: float


@dataclass(frozen=True)
class LearnedDepthModel:
    """Stand-in for a monocular network producing relative depth.

    The prediction equals metric depth divided by ``s_true``, so the median
    ratio against valid ToF pixels recovers ``s_true``.
    """

    s_true: float = 1.0
    sigma: float = 0.0
    smoothing_radius: int = 0
    hallucinations: tuple[HallucinationPatch, ...] = ()
    fallback_depth: float = 10.0

    def __post_init__(self):
        if self.s_true <= 0:
            raise ScenarioError("s_true must be > 0")
        if self.sigma < 0:
            raise ScenarioError("learned sigma must be >= 0")
        if self.smoothing_radius < 0:
            raise ScenarioError("smoothing_radius must be >= 0")


@dataclass(frozen=True)
class LidarModel:
    angle_min: float = -np.pi
    angle_increment: float = 2 * np.pi / 360
    num_beams: int = 360
    scan_height: float = 0.18
    range_max: float = 12.0

    def angles(self) -> np.ndarray:
        return self.angle_min + self.angle_increment * np.arange(self.num_beams)


def camera_to_world(pose, cam: CameraModel) -> RigidTransform:
    return RigidTransform.from_pose2d(*pose).compose(cam.extrinsic)


def _camera_rays(pose, cam):
    T = camera_to_world(pose, cam)
    dirs = cam.rays() @ T.rotation.T
    return T.translation, dirs


def render_gt_depth(
    scene: CorridorScene, pose, cam: CameraModel, t: float = 0.0, range_max: float = DEFAULT_RANGE_MAX
) -> DepthFrame:
    """Ray-cast z-depth; pixels with no surface within ``range_max`` get 0."""
    scene.check_pose(pose)
    origin, dirs = _camera_rays(pose, cam)
    depth, _ = cast_rays(scene, origin, dirs, t)
    # rays have unit optical z, so the ray parameter is the z-depth
    dist = depth * np.linalg.norm(dirs, axis=-1)
    depth = np.where(np.isfinite(depth) & (dist <= range_max), depth, 0.0)
    return DepthFrame(depth, np.ones_like(depth), t)


def render_semantic_labels(
    scene: CorridorScene, pose, cam: CameraModel, t: float = 0.0, range_max: float = DEFAULT_RANGE_MAX
) -> np.ndarray:
    """Class id of the first surface hit per pixel; misses are ``other``."""
    origin, dirs = _camera_rays(pose, cam)
    depth, cls = cast_rays(scene, origin, dirs, t)
    dist = depth * np.linalg.norm(dirs, axis=-1)
    return np.where(np.isfinite(depth) & (dist <= range_max), cls, OTHER).astype(np.uint8)


def surface_points(gt: DepthFrame, pose, cam: CameraModel) -> np.ndarray:
    """World-frame hit point per pixel, shape (H, W, 3); NaN where gt has no return."""
    T = camera_to_world(pose, cam)
    pts = (cam.rays() * gt.depth[..., None]) @ T.rotation.T + T.translation
    pts[gt.depth <= 0] = np.nan
    return pts


def render_tof_frame(
    gt: DepthFrame,
    scene: CorridorScene,
    pose,
    cam: CameraModel,
    model: ToFModel,
    seed,
) -> DepthFrame:
    """Degrade ground truth with reflective dropout, range cutoff and noise."""
    rng = np.random.default_rng(seed)
    shape = gt.shape
    pts = surface_points(gt, pose, cam)
    p_drop = np.where(gt.depth > 0, scene.reflectivity(np.nan_to_num(pts)), 0.0)

    draw = np.random.default_rng(model.pattern_seed).random(shape)
    renew = rng.random(shape) < model.intermittency
    draw = np.where(renew, rng.random(shape), draw)
    dropped = draw < p_drop

    noise = rng.normal(0.0, 1.0, shape) * model.sigma
    valid = (gt.depth > 0) & (gt.depth <= model.d_max) & ~dropped
    depth = np.where(valid, np.maximum(gt.depth + noise, 1e-6), 0.0)
    conf = np.where(valid, CONF_VALID, CONF_DROPPED)
    return DepthFrame(depth, conf, gt.timestamp)


def _fill_missing(depth: np.ndarray, fallback: float) -> np.ndarray:
    missing = depth <= 0
    if not missing.any():
        return depth
    if missing.all():
        return np.full_like(depth, fallback)
    _, (iy, ix) = ndimage.distance_transform_edt(missing, return_indices=True)
    return depth[iy, ix]


def render_learned_depth(gt: DepthFrame, model: LearnedDepthModel, seed) -> DepthFrame:
    """Dense relative-depth prediction derived from ground truth.

    Pixels without a ground-truth return take the nearest surface depth so the
    output never has holes.
    """
    rng = np.random.default_rng(seed)
    metric = _fill_missing(gt.depth, model.fallback_depth)
    factor = 1.0 + rng.normal(0.0, 1.0, metric.shape) * model.sigma
    rel = metric / model.s_true * np.maximum(factor, 0.05)
    if model.smoothing_radius > 0:
        rel = ndimage.uniform_filter(rel, size=2 * model.smoothing_radius + 1, mode="nearest")
    floor_rel = 0.01 / model.s_true
    for patch in model.hallucinations:
        region = (slice(patch.v0, patch.v1), slice(patch.u0, patch.u1))
        rel[region] = np.maximum(rel[region] + patch.offset / model.s_true, floor_rel)
    return DepthFrame(rel, np.ones_like(rel), gt.timestamp)


def render_lidar_scan(scene: CorridorScene, pose, model: LidarModel, t: float = 0.0) -> LidarScan:
    """Planar scan at ``model.scan_height``; glass is transparent to the beam."""
    scene.check_pose(pose)
    x, y, yaw = pose
    ang = model.angles() + yaw
    dirs = np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=-1)
    origin = np.array([x, y, model.scan_height])
    rng_, _ = cast_rays(scene, origin, dirs, t, skip_classes=(GLASS,))
    ranges = np.where(rng_ <= model.range_max, rng_, np.nan)
    return LidarScan(model.angle_min, model.angle_increment, ranges, model.scan_height, model.range_max, t)
