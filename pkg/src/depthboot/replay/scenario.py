"""Scenario files: strict JSON describing a synthetic replay experiment.

Unknown keys are rejected rather than ignored so that a typo in an ablation
config fails loudly instead of silently running with a default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..costmap import GridConfig, InflationConfig, Strategy
from ..errors import DepthBootError, ScenarioError
from ..fusion import FusionConfig
from ..geometry import CameraModel, mount_extrinsic
from ..synth import (
    Box,
    CorridorScene,
    HallucinationPatch,
    LearnedDepthModel,
    LidarModel,
    Pedestrian,
    ReflectivePatch,
    ToFModel,
)
from .configs import CONFIGURATIONS

Vec3 = tuple[float, float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class BoxSpec(_Strict):
    lo: Vec3
    hi: Vec3
    cls: Literal["floor", "wall", "person", "furniture", "glass", "other"] = "furniture"


class PatchSpec(_Strict):
    lo: Vec3
    hi: Vec3
    p_drop: float = Field(1.0, ge=0.0, le=1.0)


class PedestrianSpec(_Strict):
    waypoints: list[tuple[float, float, float]] = Field(min_length=1)
    radius: float = Field(0.22, gt=0)
    height: float = Field(1.75, gt=0)
    leg_radius: float = Field(0.08, gt=0)
    leg_height: float = Field(0.8, gt=0)


class SceneSpec(_Strict):
    length: float = Field(10.0, gt=0)
    width: float = Field(2.0, gt=0)
    wall_height: float = Field(2.5, gt=0)
    floor: bool = True
    walls: bool = True
    end_walls: bool = True
    ceiling: bool = False
    corridor_axis: Literal["x", "y"] = "x"
    obstacles: list[BoxSpec] = []
    reflective_patches: list[PatchSpec] = []
    pedestrians: list[PedestrianSpec] = []


class MountSpec(_Strict):
    x: float = 0.0
    y: float = 0.0
    z: float = 0.45
    pitch: float = 0.0
    yaw: float = 0.0


class CameraSpec(_Strict):
    fx: float = Field(100.0, gt=0)
    fy: float = Field(100.0, gt=0)
    cx: float = 80.0
    cy: float = 60.0
    width: int = Field(160, gt=0)
    height: int = Field(120, gt=0)
    mount: MountSpec = MountSpec()


class ToFSpec(_Strict):
    sigma: float = Field(0.0, ge=0)
    d_max: float = Field(5.0, gt=0)
    intermittency: float = Field(1.0, ge=0, le=1)
    pattern_seed: int = 0


class HallucinationSpec(_Strict):
    u0: int
    v0: int
    u1: int
    v1: int
    offset: float


class LearnedSpec(_Strict):
    s_true: float = Field(1.0, gt=0)
    sigma: float = Field(0.0, ge=0)
    smoothing_radius: int = Field(0, ge=0)
    hallucinations: list[HallucinationSpec] = []
    fallback_depth: float = Field(10.0, gt=0)


class LidarSpec(_Strict):
    angle_min: float = -math.pi
    angle_increment: float = Field(2 * math.pi / 360, gt=0)
    num_beams: int = Field(360, gt=0)
    scan_height: float = 0.18
    range_max: float = Field(12.0, gt=0)


class TrajectorySpec(_Strict):
    start: Optional[Vec3] = None
    velocity: Vec3 = (0.0, 0.0, 0.0)
    poses: Optional[list[Vec3]] = None

    @model_validator(mode="after")
    def _one_form(self):
        if (self.start is None) == (self.poses is None):
            raise ValueError("give exactly one of 'start' (with optional 'velocity') or 'poses'")
        return self


class FusionSpec(_Strict):
    tau: float = 0.5
    epsilon: float = 1e-3
    d_min: float = 0.05
    d_max: float = 5.0
    min_valid_fraction: float = 0.05


class GridSpec(_Strict):
    resolution: float = 0.05
    width: int = 120
    height: int = 120
    h_min: float = 0.05
    h_max: float = 2.0


class ClassRadiiSpec(_Strict):
    person: float = 0.35
    glass: float = 0.25
    furniture: float = 0.15
    wall: float = 0.09


class InflationSpec(_Strict):
    fixed_radius: float = 0.09
    class_radii: ClassRadiiSpec = ClassRadiiSpec()
    robot_width: float = 0.35
    r_min: float = 0.09
    r_max: float = 0.25
    dynamic_person_scale: float = 1.5


class ScenarioSpec(_Strict):
    name: str = "scenario"
    seed: int = 0
    frame_count: int = Field(ge=1)
    frame_rate: float = Field(10.0, gt=0)
    scene: SceneSpec = SceneSpec()
    camera: CameraSpec = CameraSpec()
    tof: ToFSpec = ToFSpec()
    learned: LearnedSpec = LearnedSpec()
    lidar: LidarSpec = LidarSpec()
    trajectory: TrajectorySpec
    fusion: FusionSpec = FusionSpec()
    grid: GridSpec = GridSpec()
    inflation: InflationSpec = InflationSpec()
    configurations: list[str] = ["L", "L+S", "L+D", "D", "L+D+dyn"]

    @field_validator("configurations")
    @classmethod
    def _known_configs(cls, v):
        unknown = [c for c in v if c not in CONFIGURATIONS]
        if unknown:
            raise ValueError(f"unknown configuration(s) {unknown}; known: {sorted(CONFIGURATIONS)}")
        return v

    @model_validator(mode="after")
    def _pose_count(self):
        poses = self.trajectory.poses
        if poses is not None and len(poses) != self.frame_count:
            raise ValueError(f"trajectory has {len(poses)} poses for {self.frame_count} frames")
        return self


@dataclass(frozen=True)
class Scenario:
    """Domain-level view of a validated scenario."""

    spec: ScenarioSpec

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def seed(self) -> int:
        return self.spec.seed

    @property
    def frame_count(self) -> int:
        return self.spec.frame_count

    @property
    def configurations(self) -> list[str]:
        return list(self.spec.configurations)

    def with_seed(self, seed: int) -> Scenario:
        return Scenario(self.spec.model_copy(update={"seed": int(seed)}))

    def scene(self) -> CorridorScene:
        return build_scene(self.spec.scene)

    def camera(self) -> CameraModel:
        c = self.spec.camera
        m = c.mount
        return CameraModel(c.fx, c.fy, c.cx, c.cy, c.width, c.height, mount_extrinsic(m.x, m.y, m.z, m.pitch, m.yaw))

    def tof_model(self) -> ToFModel:
        return ToFModel(**self.spec.tof.model_dump())

    def learned_model(self) -> LearnedDepthModel:
        d = self.spec.learned.model_dump()
        d["hallucinations"] = tuple(HallucinationPatch(**h) for h in d["hallucinations"])
        return LearnedDepthModel(**d)

    def lidar_model(self) -> LidarModel:
        return LidarModel(**self.spec.lidar.model_dump())

    def fusion_config(self) -> FusionConfig:
        return FusionConfig(**self.spec.fusion.model_dump())

    def grid_config(self) -> GridConfig:
        return GridConfig(**self.spec.grid.model_dump())

    def inflation_config(self, strategy: Strategy = Strategy.FIXED) -> InflationConfig:
        return inflation_from_dict(self.spec.inflation.model_dump(), strategy, self.spec.scene.corridor_axis)

    def timestamps(self) -> np.ndarray:
        return np.arange(self.frame_count) / self.spec.frame_rate

    def poses(self) -> np.ndarray:
        tr = self.spec.trajectory
        if tr.poses is not None:
            return np.asarray(tr.poses, dtype=np.float64)
        t = self.timestamps()[:, None]
        return np.asarray(tr.start, dtype=np.float64) + t * np.asarray(tr.velocity, dtype=np.float64)


def build_scene(spec: SceneSpec | dict) -> CorridorScene:
    if isinstance(spec, dict):
        spec = _validate(SceneSpec, spec, "scene")
    return CorridorScene(
        length=spec.length,
        width=spec.width,
        wall_height=spec.wall_height,
        floor=spec.floor,
        walls=spec.walls,
        end_walls=spec.end_walls,
        ceiling=spec.ceiling,
        corridor_axis=spec.corridor_axis,
        obstacles=tuple(Box(tuple(b.lo), tuple(b.hi), b.cls) for b in spec.obstacles),
        reflective_patches=tuple(ReflectivePatch(tuple(p.lo), tuple(p.hi), p.p_drop) for p in spec.reflective_patches),
        pedestrians=tuple(
            Pedestrian(tuple(tuple(w) for w in p.waypoints), p.radius, p.height, p.leg_radius, p.leg_height)
            for p in spec.pedestrians
        ),
    )


def inflation_from_dict(d: dict, strategy: Strategy, corridor_axis: str = "x") -> InflationConfig:
    return InflationConfig(
        strategy=strategy,
        fixed_radius=d["fixed_radius"],
        class_radii=dict(d["class_radii"]),
        robot_width=d["robot_width"],
        r_min=d["r_min"],
        r_max=d["r_max"],
        corridor_axis=corridor_axis,
        dynamic_person_scale=d["dynamic_person_scale"],
    )


def _line_of(text: str, loc: tuple) -> int | None:
    """Best-effort source line of a validation error location."""
    pos = 0
    found = None
    for key in loc:
        if not isinstance(key, str):
            continue
        idx = text.find(f'"{key}"', pos)
        if idx < 0:
            break
        pos = idx + 1
        found = idx
    return None if found is None else text.count("\n", 0, found) + 1


def _format_errors(exc: ValidationError, text: str | None, where: str) -> str:
    lines = []
    for err in exc.errors():
        loc = tuple(err["loc"])
        field = ".".join(str(p) for p in loc) or "<root>"
        line = _line_of(text, loc) if text else None
        prefix = f"{where}:{line}" if line else where
        lines.append(f"{prefix}: {field}: {err['msg']}")
    return "\n".join(lines)


def _validate(model, data, where: str, text: str | None = None):
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(_format_errors(exc, text, where)) from None


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Validate scenario JSON text; errors carry line and field diagnostics."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    spec = _validate(ScenarioSpec, data, source, text)
    scenario = Scenario(spec)
    try:
        # surface geometric problems (obstacles outside the corridor, bad poses) at parse time
        scene = scenario.scene()
        for pose in scenario.poses():
            scene.check_pose(pose)
        scenario.camera()
        scenario.fusion_config()
        scenario.grid_config()
        scenario.inflation_config()
    except DepthBootError as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    return scenario


def preset_names() -> list[str]:
    files = resources.files("depthboot.presets").iterdir()
    return sorted(f.name[: -len(".json")] for f in files if f.name.endswith(".json"))


def load_scenario(path_or_preset: str | Path) -> Scenario:
    """Load a scenario file, or a bundled preset by name."""
    p = Path(path_or_preset)
    if p.is_file():
        return parse_scenario(p.read_text(encoding="utf-8"), str(p))
    name = str(path_or_preset)
    if name in preset_names():
        res = resources.files("depthboot.presets").joinpath(f"{name}.json")
        return parse_scenario(res.read_text(encoding="utf-8"), f"preset:{name}")
    raise ScenarioError(f"no scenario file or preset named {name!r}; presets: {', '.join(preset_names())}")
