"""Analytic corridor scenes and an exact vectorised ray caster.

The corridor runs along world +x from ``x = 0`` to ``x = length`` and spans
``|y| <= width / 2``. Floor, side walls and end walls are zero-thickness
axis-aligned rectangles; obstacles are axis-aligned boxes; pedestrians are
a torso cylinder standing on a thinner leg cylinder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ScenarioError

CLASS_NAMES = ("floor", "wall", "person", "furniture", "glass", "other")
CLASS_ID = {name: i for i, name in enumerate(CLASS_NAMES)}
FLOOR, WALL, PERSON, FURNITURE, GLASS, OTHER = range(6)

_EPS = 1e-9
_INSIDE_TOL = 1e-6


def class_id(name: str) -> int:
    try:
        return CLASS_ID[name]
    except KeyError:
        raise ScenarioError(f"unknown semantic class {name!r}; expected one of {CLASS_NAMES}") from None


@dataclass(frozen=True)
class Box:
    """Axis-aligned box obstacle with a semantic class."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    cls: str = "furniture"

    def __post_init__(self):
        class_id(self.cls)
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ScenarioError(f"box has hi < lo: {self.lo} {self.hi}")


@dataclass(frozen=True)
class ReflectivePatch:
    """World region whose surfaces drop ToF returns with probability ``p_drop``."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    p_drop: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p_drop <= 1.0:
            raise ScenarioError(f"p_drop must be in [0, 1], got {self.p_drop}")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lo) - _INSIDE_TOL
        hi = np.asarray(self.hi) + _INSIDE_TOL
        return np.all((pts >= lo) & (pts <= hi), axis=-1)


@dataclass(frozen=True)
class Pedestrian:
    """Scripted pedestrian following piecewise-linear ``(t, x, y)`` waypoints."""

    waypoints: tuple[tuple[float, float, float], ...]
    radius: float = 0.22
    height: float = 1.75
    leg_radius: float = 0.08
    leg_height: float = 0.8

    def __post_init__(self):
        if not self.waypoints:
            raise ScenarioError("pedestrian needs at least one waypoint")
        if not (0 < self.leg_height < self.height):
            raise ScenarioError("pedestrian needs 0 < leg_height < height")

    def position(self, t: float) -> tuple[float, float]:
        wp = np.asarray(self.waypoints, dtype=np.float64)
        return float(np.interp(t, wp[:, 0], wp[:, 1])), float(np.interp(t, wp[:, 0], wp[:, 2]))


@dataclass(frozen=True)
class Footprint:
    """Planar footprint of a structure: an ``xy`` rectangle or a disc."""

    kind: str
    params: tuple[float, ...]
    cls: str
    z_range: tuple[float, float]

    def distance(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "rect":
            x0, y0, x1, y1 = self.params
            dx = np.maximum(np.maximum(x0 - x, x - x1), 0.0)
            dy = np.maximum(np.maximum(y0 - y, y - y1), 0.0)
            return np.hypot(dx, dy)
        cx, cy, r = self.params
        return np.maximum(np.hypot(x - cx, y - cy) - r, 0.0)

    def bounds(self) -> tuple[float, float, float, float]:
        if self.kind == "rect":
            return self.params
        cx, cy, r = self.params
        return (cx - r, cy - r, cx + r, cy + r)


@dataclass(frozen=True)
class CorridorScene:
    length: float = 10.0
    width: float = 2.0
    wall_height: float = 2.5
    floor: bool = True
    walls: bool = True
    end_walls: bool = True
    ceiling: bool = False
    obstacles: tuple[Box, ...] = ()
    reflective_patches: tuple[ReflectivePatch, ...] = ()
    pedestrians: tuple[Pedestrian, ...] = ()
    corridor_axis: str = "x"

    def __post_init__(self):
        if min(self.length, self.width, self.wall_height) <= 0:
            raise ScenarioError("corridor dimensions must be positive")
        lo = np.array([0.0, -self.width / 2, 0.0]) - _INSIDE_TOL
        hi = np.array([self.length, self.width / 2, self.wall_height]) + _INSIDE_TOL
        for box in self.obstacles:
            if np.any(np.asarray(box.lo) < lo) or np.any(np.asarray(box.hi) > hi):
                raise ScenarioError(f"obstacle {box} lies outside the corridor volume")
        if self.corridor_axis not in ("x", "y"):
            raise ScenarioError("corridor_axis must be 'x' or 'y'")

    @classmethod
    def empty(cls, **kw) -> CorridorScene:
        return cls(floor=False, walls=False, end_walls=False, ceiling=False, **kw)

    def contains_pose(self, x: float, y: float) -> bool:
        return 0.0 < x < self.length and abs(y) < self.width / 2

    def check_pose(self, pose) -> None:
        x, y = pose[0], pose[1]
        if not self.contains_pose(x, y):
            raise ScenarioError(f"pose ({x:.3f}, {y:.3f}) lies outside the corridor")

    def primitives(self, t: float = 0.0) -> list[tuple]:
        """Flat list of ``("box", lo, hi, cls)`` / ``("cyl", cx, cy, r, z0, z1, cls)``."""
        L, hw, H = self.length, self.width / 2, self.wall_height
        prims: list[tuple] = []
        if self.floor:
            prims.append(("box", (0.0, -hw, 0.0), (L, hw, 0.0), FLOOR))
        if self.ceiling:
            prims.append(("box", (0.0, -hw, H), (L, hw, H), OTHER))
        if self.walls:
            prims.append(("box", (0.0, -hw, 0.0), (L, -hw, H), WALL))
            prims.append(("box", (0.0, hw, 0.0), (L, hw, H), WALL))
        if self.end_walls:
            prims.append(("box", (0.0, -hw, 0.0), (0.0, hw, H), WALL))
            prims.append(("box", (L, -hw, 0.0), (L, hw, H), WALL))
        for box in self.obstacles:
            prims.append(("box", tuple(box.lo), tuple(box.hi), CLASS_ID[box.cls]))
        for ped in self.pedestrians:
            px, py = ped.position(t)
            prims.append(("cyl", px, py, ped.leg_radius, 0.0, ped.leg_height, PERSON))
            prims.append(("cyl", px, py, ped.radius, ped.leg_height, ped.height, PERSON))
        return prims

    def obstacle_footprints(self, t: float = 0.0) -> list[Footprint]:
        """Footprints of discrete obstacles and pedestrians (not the shell)."""
        fps = [
            Footprint("rect", (b.lo[0], b.lo[1], b.hi[0], b.hi[1]), b.cls, (b.lo[2], b.hi[2]))
            for b in self.obstacles
        ]
        for ped in self.pedestrians:
            px, py = ped.position(t)
            fps.append(Footprint("circle", (px, py, ped.radius), "person", (0.0, ped.height)))
        return fps

    def structure_footprints(self, t: float = 0.0) -> list[Footprint]:
        """Everything solid that can stand in the height band, walls included."""
        L, hw, H = self.length, self.width / 2, self.wall_height
        fps = []
        if self.walls:
            fps.append(Footprint("rect", (0.0, -hw, L, -hw), "wall", (0.0, H)))
            fps.append(Footprint("rect", (0.0, hw, L, hw), "wall", (0.0, H)))
        if self.end_walls:
            fps.append(Footprint("rect", (0.0, -hw, 0.0, hw), "wall", (0.0, H)))
            fps.append(Footprint("rect", (L, -hw, L, hw), "wall", (0.0, H)))
        return fps + self.obstacle_footprints(t)

    def reflectivity(self, pts: np.ndarray) -> np.ndarray:
        """Per-point dropout probability (largest over covering patches)."""
        p = np.zeros(pts.shape[:-1])
        for patch in self.reflective_patches:
            p = np.where(patch.contains(pts), np.maximum(p, patch.p_drop), p)
        return p


def _ray_box(o, d, lo, hi):
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (lo - o) * inv
        t2 = (hi - o) * inv
    parallel = d == 0.0
    inside_slab = (o >= lo - _EPS) & (o <= hi + _EPS)
    tn = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), np.minimum(t1, t2))
    tf = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), np.maximum(t1, t2))
    t_near = tn.max(axis=-1)
    t_far = tf.min(axis=-1)
    hit = (t_far >= t_near - _EPS) & (t_near > _EPS)
    return np.where(hit, t_near, np.inf)


def _ray_cylinder(o, d, cx, cy, r, z0, z1):
    ox, oy = o[..., 0] - cx, o[..., 1] - cy
    dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]
    a = dx * dx + dy * dy
    b = 2.0 * (ox * dx + oy * dy)
    c = ox * ox + oy * oy - r * r
    disc = b * b - 4 * a * c
    best = np.full(a.shape, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_side = (-b - np.sqrt(np.maximum(disc, 0.0))) / (2 * a)
        z_side = o[..., 2] + t_side * dz
        ok = (a > 0) & (disc >= 0) & (t_side > _EPS) & (z_side >= z0) & (z_side <= z1)
        best = np.where(ok, t_side, best)
        for zc in (z0, z1):
            tc = (zc - o[..., 2]) / dz
            px, py = ox + tc * dx, oy + tc * dy
            ok = (dz != 0) & (tc > _EPS) & (px * px + py * py <= r * r)
            best = np.where(ok & (tc < best), tc, best)
    return best


def cast_rays(scene: CorridorScene, origins, dirs, t: float = 0.0, skip_classes=()):
    """First-hit ray parameter and class for each ray.

    ``dirs`` need not be unit length; the returned parameter is in units of
    ``dirs``. Misses return ``inf`` and class ``OTHER``.
    """
    o = np.broadcast_to(np.asarray(origins, dtype=np.float64), np.shape(dirs))
    d = np.asarray(dirs, dtype=np.float64)
    best = np.full(d.shape[:-1], np.inf)
    cls = np.full(d.shape[:-1], OTHER, dtype=np.int64)
    for prim in scene.primitives(t):
        k = prim[-1]
        if k in skip_classes:
            continue
        if prim[0] == "box":
            th = _ray_box(o, d, prim[1], prim[2])
        else:
            th = _ray_cylinder(o, d, *prim[1:6])
        closer = th < best
        best = np.where(closer, th, best)
        cls = np.where(closer, k, cls)
    return best, cls
