"""Bootstrap calibration and selective depth fusion.

The ToF pixels that survive the confidence and range gates anchor the
relative learned depth to metric scale with a per-frame median ratio; the
calibrated prediction then fills only the pixels the gate rejects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, UnreliableScale
from .frames import CONF_VALID, DepthFrame, check_same_shape

# Per-pixel provenance of a fused frame.
SOURCE_TOF = 1
SOURCE_LEARNED = 2


@dataclass(frozen=True)
class FusionConfig:
    tau: float = 0.5
    epsilon: float = 1e-3
    d_min: float = 0.05
    d_max: float = 5.0
    min_valid_fraction: float = 0.05

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ConfigurationError("tau must be in (0, 1]")
        if not 0 < self.d_min < self.d_max:
            raise ConfigurationError("need 0 < d_min < d_max")
        if self.epsilon <= 0:
            raise ConfigurationError("epsilon must be > 0")
        if not 0 < self.min_valid_fraction < 1:
            raise ConfigurationError("min_valid_fraction must be in (0, 1)")


@dataclass(frozen=True)
class ScaleEstimate:
    s: float
    valid_pixel_count: int
    valid_fraction: float


def tof_gate(tof: DepthFrame, cfg: FusionConfig) -> np.ndarray:
    """Pixels where hardware depth is trusted: confident and strictly in range."""
    d = tof.depth
    return (tof.confidence >= cfg.tau) & (d > cfg.d_min) & (d < cfg.d_max)


def _median(values: np.ndarray) -> float:
    # np.median averages the two central values for even counts
    return float(np.median(values))


def estimate_scale(pred: DepthFrame, tof: DepthFrame, cfg: FusionConfig = FusionConfig()) -> ScaleEstimate:
    """Median of ``d_tof / d_pred`` over gated pixels with a usable prediction."""
    check_same_shape(pred, tof)
    qualifying = tof_gate(tof, cfg) & (pred.depth > cfg.epsilon)
    count = int(qualifying.sum())
    fraction = count / qualifying.size
    if count == 0:
        raise UnreliableScale("no qualifying pixels for scale estimation", 0.0, 0)
    if fraction < cfg.min_valid_fraction:
        raise UnreliableScale(
            f"valid coverage {fraction:.2%} below {cfg.min_valid_fraction:.2%}", fraction, count
        )
    s = _median(tof.depth[qualifying] / pred.depth[qualifying])
    return ScaleEstimate(s, count, fraction)


def apply_scale(pred: DepthFrame, s: float) -> DepthFrame:
    if not s > 0:
        raise ConfigurationError(f"scale must be positive, got {s}")
    return DepthFrame(pred.depth * s, pred.confidence.copy(), pred.timestamp)


def fuse_depth(
    tof: DepthFrame, pred_metric: DepthFrame, cfg: FusionConfig = FusionConfig()
) -> tuple[DepthFrame, np.ndarray]:
    """Keep ToF where the gate passes, take the learned value elsewhere.

    Returns the fused frame and a per-pixel mask of ``SOURCE_TOF`` /
    ``SOURCE_LEARNED`` codes.
    """
    check_same_shape(tof, pred_metric)
    keep = tof_gate(tof, cfg)
    depth = np.where(keep, tof.depth, pred_metric.depth)
    conf = np.where(keep, CONF_VALID, pred_metric.confidence)
    mask = np.where(keep, SOURCE_TOF, SOURCE_LEARNED).astype(np.uint8)
    return DepthFrame(depth, conf, tof.timestamp), mask


def hybrid_target(tof: DepthFrame, teacher: DepthFrame, cfg: FusionConfig = FusionConfig()) -> DepthFrame:
    """Supervision target: ToF where trusted, teacher depth elsewhere."""
    check_same_shape(tof, teacher)
    keep = tof_gate(tof, cfg)
    return DepthFrame(np.where(keep, tof.depth, teacher.depth), np.ones(tof.shape), tof.timestamp)
