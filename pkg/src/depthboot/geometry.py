"""Pinhole camera model, rigid transforms and point-cloud filtering.

Conventions: the camera optical frame has x right, y down, z forward. The
robot base frame has x forward, y left, z up with z = 0 on the floor. Pixel
``(u, v)`` addresses the pixel center; there is no distortion model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .frames import DepthFrame

ORTHO_TOL = 1e-9

# Columns are the optical x, y, z axes expressed in the base frame.
OPTICAL_TO_BASE = np.array(
    [
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
)


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class RigidTransform:
    """``p' = rotation @ p + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if R.shape != (3, 3):
            raise ConfigurationError(f"rotation must be 3x3, got {R.shape}")
        if np.max(np.abs(R @ R.T - np.eye(3))) > ORTHO_TOL or abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise ConfigurationError("rotation must be orthonormal with det +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls()

    @classmethod
    def from_pose2d(cls, x: float, y: float, yaw: float) -> RigidTransform:
        """Base-to-world transform of a planar robot pose."""
        return cls(rot_z(yaw), np.array([x, y, 0.0]))

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def inverse(self) -> RigidTransform:
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def compose(self, other: RigidTransform) -> RigidTransform:
        """``self ∘ other``: apply ``other`` first."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T


def mount_extrinsic(x=0.0, y=0.0, z=0.0, pitch=0.0, yaw=0.0) -> RigidTransform:
    """Camera-to-base transform for a camera mounted at ``(x, y, z)``.

    Positive ``pitch`` tilts the optical axis toward the floor.
    """
    R = rot_z(yaw) @ rot_y(pitch) @ OPTICAL_TO_BASE
    return RigidTransform(R, np.array([x, y, z], dtype=np.float64))


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    extrinsic: RigidTransform = field(default_factory=RigidTransform)

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigurationError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigurationError("principal point must lie inside the image")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def pixel_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Column and row index arrays, each shaped (height, width)."""
        v, u = np.mgrid[0 : self.height, 0 : self.width]
        return u.astype(np.float64), v.astype(np.float64)

    def rays(self) -> np.ndarray:
        """Per-pixel optical-frame ray directions with unit z, shape (H, W, 3)."""
        u, v = self.pixel_grid()
        return np.stack([(u - self.cx) / self.fx, (v - self.cy) / self.fy, np.ones_like(u)], axis=-1)

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
            "extrinsic": {
                "rotation": self.extrinsic.rotation.tolist(),
                "translation": self.extrinsic.translation.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> CameraModel:
        ext = d.get("extrinsic")
        extrinsic = RigidTransform(ext["rotation"], ext["translation"]) if ext else RigidTransform()
        return cls(d["fx"], d["fy"], d["cx"], d["cy"], int(d["width"]), int(d["height"]), extrinsic)


@dataclass
class PointCloud:
    """Points in meters, tagged with the frame they are expressed in.

    ``pixel_index`` optionally keeps the flat image index each point came
    from, so per-pixel attributes survive transforms and filters.
    """

    points: np.ndarray
    frame: str = "camera"
    pixel_index: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise ConfigurationError("point coordinates must be finite")
        if self.frame not in ("camera", "base", "world"):
            raise ConfigurationError(f"unknown frame tag {self.frame!r}")
        if self.pixel_index is not None:
            self.pixel_index = np.asarray(self.pixel_index, dtype=np.int64).reshape(-1)
            if self.pixel_index.size != len(self.points):
                raise ConfigurationError("pixel_index length must match point count")

    def __len__(self) -> int:
        return len(self.points)

    def subset(self, keep: np.ndarray) -> PointCloud:
        idx = None if self.pixel_index is None else self.pixel_index[keep]
        return PointCloud(self.points[keep], self.frame, idx)


def back_project(frame: DepthFrame, cam: CameraModel, mask: np.ndarray | None = None) -> PointCloud:
    """Lift every pixel with finite positive depth into the camera frame.

    ``mask`` further restricts which pixels are lifted.
    """
    if frame.shape != (cam.height, cam.width):
        raise ConfigurationError(
            f"frame is {frame.width}x{frame.height}, camera is {cam.width}x{cam.height}"
        )
    d = frame.depth
    keep = np.isfinite(d) & (d > 0)
    if mask is not None:
        keep &= np.asarray(mask, dtype=bool)
    v, u = np.nonzero(keep)
    z = d[v, u]
    pts = np.stack([(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z], axis=1)
    return PointCloud(pts, "camera", v * cam.width + u)


def project(points: np.ndarray, cam: CameraModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Camera-frame points to ``(u, v, depth)``; the inverse of back_project."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    z = p[:, 2]
    return cam.fx * p[:, 0] / z + cam.cx, cam.fy * p[:, 1] / z + cam.cy, z


def transform_points(cloud: PointCloud, T: RigidTransform, frame: str = "base") -> PointCloud:
    return PointCloud(T.apply(cloud.points), frame, cloud.pixel_index)


def height_band_filter(cloud: PointCloud, h_min: float = 0.05, h_max: float = 2.0) -> PointCloud:
    """Keep points with ``h_min <= z <= h_max`` (both bounds inclusive)."""
    if h_min >= h_max:
        raise ConfigurationError(f"height band needs h_min < h_max, got [{h_min}, {h_max}]")
    z = cloud.points[:, 2]
    return cloud.subset((z >= h_min) & (z <= h_max))
