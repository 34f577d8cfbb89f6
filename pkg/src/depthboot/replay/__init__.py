"""Scenario-driven sequence generation and costmap replay."""

from .bundle import Bundle, FrameRecord, decode_dfb, decode_dls, encode_dfb, encode_dls
from .configs import CONFIGURATIONS, NamedConfig, resolve
from .pipeline import (
    ReplayResult,
    dump_grid,
    format_summary,
    generate_sequence,
    ordered_configs,
    run_depth_eval,
    run_replay,
)
from .scenario import Scenario, load_scenario, parse_scenario, preset_names

__all__ = [
    "CONFIGURATIONS",
    "Bundle",
    "FrameRecord",
    "NamedConfig",
    "ReplayResult",
    "Scenario",
    "decode_dfb",
    "decode_dls",
    "dump_grid",
    "encode_dfb",
    "encode_dls",
    "format_summary",
    "generate_sequence",
    "load_scenario",
    "ordered_configs",
    "parse_scenario",
    "preset_names",
    "resolve",
    "run_depth_eval",
    "run_replay",
]
