"""Synthetic corridor test bench: scenes, ray casting and sensor models."""

from .scene import (
    CLASS_ID,
    CLASS_NAMES,
    Box,
    CorridorScene,
    Footprint,
    Pedestrian,
    ReflectivePatch,
    cast_rays,
    class_id,
)
from .sensors import (
    HallucinationPatch,
    LearnedDepthModel,
    LidarModel,
    ToFModel,
    camera_to_world,
    render_gt_depth,
    render_learned_depth,
    render_lidar_scan,
    render_semantic_labels,
    render_tof_frame,
    surface_points,
)

__all__ = [
    "CLASS_ID",
    "CLASS_NAMES",
    "Box",
    "CorridorScene",
    "Footprint",
    "HallucinationPatch",
    "LearnedDepthModel",
    "LidarModel",
    "Pedestrian",
    "ReflectivePatch",
    "ToFModel",
    "camera_to_world",
    "cast_rays",
    "class_id",
    "render_gt_depth",
    "render_learned_depth",
    "render_lidar_scan",
    "render_semantic_labels",
    "render_tof_frame",
    "surface_points",
]
