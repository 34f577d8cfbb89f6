"""Rolling local occupancy grid built from LiDAR and depth point clouds.

The grid is world-aligned and re-centred on the robot every frame. Cell
``(iy, ix)`` covers world indices ``origin_cell + (ix, iy)`` where a world
index is ``floor(coord / resolution)``; binning is therefore identical
across frames whatever the robot position.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DataError
from .frames import DepthFrame, LidarScan
from .fusion import SOURCE_LEARNED, FusionConfig, fuse_depth, tof_gate
from .geometry import CameraModel, PointCloud, RigidTransform, back_project, height_band_filter, transform_points
from .synth.scene import CLASS_ID, CLASS_NAMES

FREE, OBSTACLE, INFLATED = 0, 1, 2
STATE_CHARS = {FREE: ".", OBSTACLE: "#", INFLATED: "+"}

# distances within this many meters of a radius count as inside it
RADIUS_TOL = 1e-9


class Provenance(enum.IntFlag):
    LIDAR = 1
    TOF = 2
    LEARNED = 4
    INFLATION = 8


SENSOR_BITS = Provenance.LIDAR | Provenance.TOF | Provenance.LEARNED


class Sources(enum.Flag):
    """Obstacle sources a configuration enables: L, S (hardware depth), D (learned depth)."""

    NONE = 0
    L = enum.auto()
    S = enum.auto()
    D = enum.auto()

    @classmethod
    def parse(cls, text: str) -> Sources:
        out = cls.NONE
        for part in text.replace(" ", "").split("+"):
            if part not in ("L", "S", "D"):
                raise ConfigurationError(f"unknown source {part!r} in {text!r}")
            out |= cls[part]
        return out


class Strategy(enum.Enum):
    FIXED = "fixed"
    CORRIDOR_WIDTH = "corridor_width"
    CLASS_AWARE = "class_aware"
    DYNAMIC = "dynamic"


DEFAULT_CLASS_RADII = {"person": 0.35, "glass": 0.25, "furniture": 0.15, "wall": 0.09}

# Tie-break order when several classes land in one cell, highest first.
CLASS_PRIORITY = ("person", "glass", "furniture", "wall", "floor", "other")
_RANK = np.zeros(len(CLASS_NAMES), dtype=np.int64)
for _r, _name in enumerate(reversed(CLASS_PRIORITY)):
    _RANK[CLASS_ID[_name]] = _r
_BY_RANK = np.array([CLASS_ID[n] for n in reversed(CLASS_PRIORITY)])


@dataclass(frozen=True)
class InflationConfig:
    strategy: Strategy = Strategy.FIXED
    fixed_radius: float = 0.09
    class_radii: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_RADII))
    robot_width: float = 0.35
    r_min: float = 0.09
    r_max: float = 0.25
    corridor_axis: str = "x"
    dynamic_person_scale: float = 1.5

    def __post_init__(self):
        radii = [self.fixed_radius, self.robot_width, self.r_min, self.r_max, *self.class_radii.values()]
        if any(r < 0 for r in radii):
            raise ConfigurationError("inflation radii must be >= 0")
        if self.r_min > self.r_max:
            raise ConfigurationError("need r_min <= r_max")
        missing = {"person", "glass", "furniture", "wall"} - set(self.class_radii)
        if missing:
            raise ConfigurationError(f"class_radii missing {sorted(missing)}")
        if self.strategy in (Strategy.CLASS_AWARE, Strategy.DYNAMIC):
            r = self.class_radii
            if not r["person"] >= r["glass"] >= r["furniture"] >= r["wall"]:
                raise ConfigurationError("class radii must satisfy person >= glass >= furniture >= wall")
        if self.corridor_axis not in ("x", "y"):
            raise ConfigurationError("corridor_axis must be 'x' or 'y'")

    def radius_for(self, class_name: str) -> float:
        r = self.class_radii.get(class_name, self.class_radii["wall"])
        if class_name == "person" and self.strategy is Strategy.DYNAMIC:
            r *= self.dynamic_person_scale
        return r


@dataclass(frozen=True)
class GridConfig:
    resolution: float = 0.05
    width: int = 120
    height: int = 120
    h_min: float = 0.05
    h_max: float = 2.0

    def __post_init__(self):
        if self.resolution <= 0 or self.width <= 0 or self.height <= 0:
            raise ConfigurationError("grid resolution and size must be positive")
        if self.h_min >= self.h_max:
            raise ConfigurationError("need h_min < h_max")


@dataclass
class OccupancyGrid:
    resolution: float
    width: int
    height: int
    origin_cell: tuple[int, int]
    pose: tuple[float, float, float] = (0.0, 0.0, 0.0)
    state: np.ndarray = None
    provenance: np.ndarray = None
    cls: np.ndarray | None = None
    invalid_fill: np.ndarray = None
    inflation_radius: float = 0.0

    def __post_init__(self):
        shape = (self.height, self.width)
        if self.state is None:
            self.state = np.zeros(shape, dtype=np.uint8)
        if self.provenance is None:
            self.provenance = np.zeros(shape, dtype=np.uint8)
        if self.invalid_fill is None:
            self.invalid_fill = np.zeros(shape, dtype=bool)
        self.origin_cell = (int(self.origin_cell[0]), int(self.origin_cell[1]))

    @classmethod
    def centered(cls, pose, cfg: GridConfig = GridConfig()) -> OccupancyGrid:
        """Window of ``cfg`` size whose middle cell contains the robot."""
        x, y = pose[0], pose[1]
        ox = math.floor(x / cfg.resolution) - cfg.width // 2
        oy = math.floor(y / cfg.resolution) - cfg.height // 2
        return cls(cfg.resolution, cfg.width, cfg.height, (ox, oy), tuple(float(p) for p in pose))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def origin(self) -> tuple[float, float]:
        return (self.origin_cell[0] * self.resolution, self.origin_cell[1] * self.resolution)

    @property
    def size(self) -> int:
        return self.width * self.height

    def copy(self) -> OccupancyGrid:
        return OccupancyGrid(
            self.resolution,
            self.width,
            self.height,
            self.origin_cell,
            self.pose,
            self.state.copy(),
            self.provenance.copy(),
            None if self.cls is None else self.cls.copy(),
            self.invalid_fill.copy(),
            self.inflation_radius,
        )

    def same_geometry(self, other: OccupancyGrid) -> bool:
        return (
            self.resolution == other.resolution
            and self.shape == other.shape
            and self.origin_cell == other.origin_cell
        )

    def world_to_index(self, x, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Grid column/row of world points plus an in-bounds mask."""
        ix = np.floor(np.asarray(x, dtype=np.float64) / self.resolution).astype(np.int64) - self.origin_cell[0]
        iy = np.floor(np.asarray(y, dtype=np.float64) / self.resolution).astype(np.int64) - self.origin_cell[1]
        inside = (ix >= 0) & (ix < self.width) & (iy >= 0) & (iy < self.height)
        return ix, iy, inside

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """World x and y of every cell center, each shaped (height, width)."""
        iy, ix = np.mgrid[0 : self.height, 0 : self.width]
        return (
            (ix + self.origin_cell[0] + 0.5) * self.resolution,
            (iy + self.origin_cell[1] + 0.5) * self.resolution,
        )

    def robot_cell(self, pose=None) -> tuple[int, int]:
        x, y = (self.pose if pose is None else pose)[:2]
        ix, iy, _ = self.world_to_index(x, y)
        return int(iy), int(ix)

    def obstacle(self) -> np.ndarray:
        return self.state == OBSTACLE

    def occupied(self) -> np.ndarray:
        """OBSTACLE or INFLATED footprint."""
        return self.state != FREE

    @property
    def occupied_count(self) -> int:
        return int(np.count_nonzero(self.state == OBSTACLE))

    @property
    def inflated_count(self) -> int:
        return int(np.count_nonzero(self.state == INFLATED))

    def to_text(self) -> str:
        ox, oy = self.origin
        lines = [f"{self.width} {self.height} {self.resolution:g} {ox:.6f} {oy:.6f}"]
        chars = np.array([".", "#", "+"])
        lines += ["".join(row) for row in chars[self.state]]
        return "\n".join(lines) + "\n"

    def provenance_text(self) -> str:
        ox, oy = self.origin
        lines = [f"{self.width} {self.height} {self.resolution:g} {ox:.6f} {oy:.6f}"]
        lines += ["".join(f"{v:x}" for v in row) for row in self.provenance]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, grid_text: str, provenance_text: str | None = None) -> OccupancyGrid:
        """Inverse of :meth:`to_text` (and optionally :meth:`provenance_text`)."""
        rows = grid_text.strip("\n").split("\n")
        try:
            w, h, res, ox, oy = rows[0].split()
            w, h, res = int(w), int(h), float(res)
            lut = {".": FREE, "#": OBSTACLE, "+": INFLATED}
            state = np.array([[lut[c] for c in row] for row in rows[1:]], dtype=np.uint8)
        except (ValueError, KeyError) as exc:
            raise DataError(f"malformed grid dump: {exc}") from exc
        if state.shape != (h, w):
            raise DataError(f"grid dump body is {state.shape}, header says {(h, w)}")
        origin_cell = (round(float(ox) / res), round(float(oy) / res))
        grid = cls(res, w, h, origin_cell, state=state)
        if provenance_text is not None:
            prow = provenance_text.strip("\n").split("\n")[1:]
            grid.provenance = np.array([[int(c, 16) for c in row] for row in prow], dtype=np.uint8)
            if grid.provenance.shape != (h, w):
                raise DataError("provenance dump does not match grid size")
        return grid


def _world_points(grid: OccupancyGrid, cloud: PointCloud) -> np.ndarray:
    if cloud.frame == "world":
        return cloud.points
    if cloud.frame != "base":
        raise ConfigurationError("costmap marking expects base- or world-frame clouds")
    return RigidTransform.from_pose2d(*grid.pose).apply(cloud.points)


def mark_from_pointcloud(
    grid: OccupancyGrid, cloud: PointCloud, source: Provenance, from_invalid: np.ndarray | None = None
) -> OccupancyGrid:
    """Mark the cell under every point as OBSTACLE with ``source`` provenance.

    ``from_invalid`` flags points that came from pixels the ToF gate rejected;
    their cells are remembered for false-positive attribution.
    """
    if len(cloud) == 0:
        return grid
    pts = _world_points(grid, cloud)
    ix, iy, inside = grid.world_to_index(pts[:, 0], pts[:, 1])
    ix, iy = ix[inside], iy[inside]
    grid.state[iy, ix] = OBSTACLE
    grid.provenance[iy, ix] = (grid.provenance[iy, ix] & int(SENSOR_BITS)) | int(source)
    if from_invalid is not None:
        flags = np.asarray(from_invalid, dtype=bool)[inside]
        grid.invalid_fill[iy[flags], ix[flags]] = True
    return grid


def mark_from_lidar(grid: OccupancyGrid, scan: LidarScan, pose=None) -> OccupancyGrid:
    """Clear LiDAR-only cells along each beam, then mark every return's endpoint.

    Cells carrying evidence from another source are never cleared.
    """
    x, y, yaw = grid.pose if pose is None else pose
    ok = scan.valid()
    if not ok.any():
        return grid
    r = scan.ranges[ok]
    ang = scan.angles[ok] + yaw
    ex, ey = x + r * np.cos(ang), y + r * np.sin(ang)
    end_ix, end_iy, end_inside = grid.world_to_index(ex, ey)

    step = grid.resolution / 4.0
    n = np.ceil(r / step).astype(np.int64)
    beam = np.repeat(np.arange(r.size), n)
    offs = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
    t = offs * step
    sx, sy = x + t * np.cos(ang[beam]), y + t * np.sin(ang[beam])
    cix, ciy, cin = grid.world_to_index(sx, sy)
    not_end = (cix != end_ix[beam]) | (ciy != end_iy[beam])
    sel = cin & not_end
    cix, ciy = cix[sel], ciy[sel]
    lidar_only = (grid.provenance[ciy, cix] == int(Provenance.LIDAR)) & (grid.state[ciy, cix] == OBSTACLE)
    cix, ciy = cix[lidar_only], ciy[lidar_only]
    grid.state[ciy, cix] = FREE
    grid.provenance[ciy, cix] = 0
    if grid.cls is not None:
        grid.cls[ciy, cix] = -1

    ix, iy = end_ix[end_inside], end_iy[end_inside]
    grid.state[iy, ix] = OBSTACLE
    grid.provenance[iy, ix] = (grid.provenance[iy, ix] & int(SENSOR_BITS)) | int(Provenance.LIDAR)
    return grid


def project_classes(
    grid: OccupancyGrid, labels: np.ndarray, depth: DepthFrame, cam: CameraModel, pose=None
) -> OccupancyGrid:
    """Give each cell the highest-priority class among the depth pixels landing in it."""
    labels = np.asarray(labels)
    if labels.shape != depth.shape:
        raise ConfigurationError("label map and depth frame differ in size")
    cloud = back_project(depth, cam)
    world = RigidTransform.from_pose2d(*(grid.pose if pose is None else pose)).compose(cam.extrinsic)
    pts = world.apply(cloud.points)
    ix, iy, inside = grid.world_to_index(pts[:, 0], pts[:, 1])
    pix_cls = labels.reshape(-1)[cloud.pixel_index][inside].astype(np.int64)
    rank = np.full(grid.shape, -1, dtype=np.int64)
    if grid.cls is not None:
        known = grid.cls >= 0
        rank[known] = _RANK[grid.cls[known]]
    np.maximum.at(rank, (iy[inside], ix[inside]), _RANK[pix_cls])
    grid.cls = np.where(rank >= 0, _BY_RANK[np.maximum(rank, 0)], -1).astype(np.int8)
    return grid


def corridor_free_width(grid: OccupancyGrid, axis: str = "x") -> float:
    """Contiguous non-obstacle extent through the robot cell, across the corridor axis."""
    r, c = grid.robot_cell()
    if not (0 <= r < grid.height and 0 <= c < grid.width):
        raise ConfigurationError("robot lies outside its own grid")
    line = grid.state[:, c] if axis == "x" else grid.state[r, :]
    pos = r if axis == "x" else c
    if line[pos] == OBSTACLE:
        return 0.0
    blocked = np.flatnonzero(line == OBSTACLE)
    lo = blocked[blocked < pos]
    hi = blocked[blocked > pos]
    first = lo[-1] + 1 if lo.size else 0
    last = hi[0] - 1 if hi.size else line.size - 1
    return (last - first + 1) * grid.resolution


def _cell_radii(grid: OccupancyGrid, cfg: InflationConfig) -> np.ndarray:
    """Inflation radius per cell (only meaningful on OBSTACLE cells)."""
    if cfg.strategy is Strategy.FIXED:
        return np.full(grid.shape, cfg.fixed_radius)
    if cfg.strategy is Strategy.CORRIDOR_WIDTH:
        width = corridor_free_width(grid, cfg.corridor_axis)
        r = float(np.clip((width - cfg.robot_width) / 2.0, cfg.r_min, cfg.r_max))
        return np.full(grid.shape, r)
    if grid.cls is None:
        raise ConfigurationError(f"{cfg.strategy.value} inflation needs per-cell class data")
    lut = np.array([cfg.radius_for(name) for name in CLASS_NAMES])
    return np.where(grid.cls >= 0, lut[np.maximum(grid.cls, 0)], cfg.radius_for("wall"))


def inflate(grid: OccupancyGrid, cfg: InflationConfig = InflationConfig()) -> OccupancyGrid:
    """Recompute the INFLATED layer from the current OBSTACLE cells."""
    stale = grid.state == INFLATED
    grid.state[stale] = FREE
    grid.provenance[stale] = 0

    obstacle = grid.state == OBSTACLE
    radii = _cell_radii(grid, cfg)
    used = radii[obstacle] if obstacle.any() else radii.reshape(-1)[:1]
    grid.inflation_radius = float(used[0] if np.all(used == used[0]) else used.mean())
    inflated = np.zeros(grid.shape, dtype=bool)
    for r in np.unique(radii[obstacle]):
        seeds = obstacle & (radii == r)
        dist = ndimage.distance_transform_edt(~seeds) * grid.resolution
        inflated |= dist <= r + RADIUS_TOL
    inflated &= ~obstacle
    grid.state[inflated] = INFLATED
    grid.provenance[inflated] = int(Provenance.INFLATION)
    return grid


@dataclass
class FrameInputs:
    """Everything one costmap update consumes.

    ``learned_metric`` is the scale-calibrated prediction, or None when the
    frame's calibration was rejected.
    """

    pose: tuple[float, float, float]
    scan: LidarScan | None
    tof: DepthFrame | None
    learned_metric: DepthFrame | None = None
    labels: np.ndarray | None = None


@dataclass(frozen=True)
class CostmapSetup:
    cam: CameraModel
    grid: GridConfig = GridConfig()
    fusion: FusionConfig = FusionConfig()


def _depth_cloud(frame: DepthFrame, setup: CostmapSetup, mask: np.ndarray) -> PointCloud:
    cloud = back_project(frame, setup.cam, mask)
    cloud = transform_points(cloud, setup.cam.extrinsic, "base")
    return height_band_filter(cloud, setup.grid.h_min, setup.grid.h_max)


def build_frame_costmap(
    sources: Sources, inflation: InflationConfig, frame: FrameInputs, setup: CostmapSetup
) -> OccupancyGrid:
    """Compose the enabled obstacle sources into one inflated grid.

    With S and D both enabled, learned points come only from pixels the ToF
    gate rejected. D alone uses the calibrated prediction at every pixel.
    """
    grid = OccupancyGrid.centered(frame.pose, setup.grid)
    if Sources.L in sources:
        if frame.scan is None:
            raise ConfigurationError("L source enabled but frame has no scan")
        mark_from_lidar(grid, frame.scan)

    class_depth = None
    gate = None
    if Sources.S in sources or Sources.D in sources:
        if frame.tof is None:
            raise ConfigurationError("depth sources need the ToF frame")
        gate = tof_gate(frame.tof, setup.fusion)

    if Sources.S in sources:
        cloud = _depth_cloud(frame.tof, setup, gate)
        mark_from_pointcloud(grid, cloud, Provenance.TOF)
        class_depth = DepthFrame(np.where(gate, frame.tof.depth, 0.0), None, frame.tof.timestamp)

    if Sources.D in sources:
        if frame.learned_metric is None:
            raise ConfigurationError("D source enabled but no calibrated learned frame")
        if Sources.S in sources:
            fused, mask = fuse_depth(frame.tof, frame.learned_metric, setup.fusion)
            cloud = _depth_cloud(fused, setup, mask == SOURCE_LEARNED)
            class_depth = fused
        else:
            cloud = _depth_cloud(frame.learned_metric, setup, None)
            class_depth = frame.learned_metric
        from_invalid = ~gate.reshape(-1)[cloud.pixel_index]
        mark_from_pointcloud(grid, cloud, Provenance.LEARNED, from_invalid)

    if inflation.strategy in (Strategy.CLASS_AWARE, Strategy.DYNAMIC):
        if frame.labels is None or class_depth is None:
            raise ConfigurationError(f"{inflation.strategy.value} inflation needs labels and a depth source")
        project_classes(grid, frame.labels, class_depth, setup.cam)
    return inflate(grid, inflation)
