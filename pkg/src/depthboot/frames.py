"""Sensor frame containers passed between simulation, fusion and mapping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# Confidence written for valid and dropped pixels by the synthetic sensors.
CONF_VALID = 1.0
CONF_DROPPED = 0.1


@dataclass
class DepthFrame:
    """Dense depth image with per-pixel confidence.

    ``depth`` is the camera-frame z distance in meters (or relative units for
    an uncalibrated prediction). A depth of 0 marks a pixel with no return and
    is invalid whatever its confidence says.
    """

    depth: np.ndarray
    confidence: np.ndarray | None = None
    timestamp: float = 0.0

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        if self.depth.ndim != 2:
            raise ConfigurationError(f"depth must be 2-D, got shape {self.depth.shape}")
        if self.confidence is None:
            self.confidence = np.ones_like(self.depth)
        else:
            self.confidence = np.asarray(self.confidence, dtype=np.float64)
        if self.confidence.shape != self.depth.shape:
            raise ConfigurationError(
                f"confidence shape {self.confidence.shape} != depth shape {self.depth.shape}"
            )
        if np.any(self.depth < 0) or not np.all(np.isfinite(self.depth)):
            raise ConfigurationError("depth must be finite and non-negative")
        if np.any(self.confidence < 0) or np.any(self.confidence > 1):
            raise ConfigurationError("confidence must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape

    def has_return(self) -> np.ndarray:
        return self.depth > 0

    def invalid_fraction(self, tau: float = 0.5) -> float:
        """Fraction of pixels with no return or confidence below ``tau``."""
        invalid = (self.depth <= 0) | (self.confidence < tau)
        return float(invalid.mean())

    def copy(self) -> DepthFrame:
        return DepthFrame(self.depth.copy(), self.confidence.copy(), self.timestamp)


def check_same_shape(*frames: DepthFrame | np.ndarray) -> None:
    shapes = {tuple(np.shape(f.depth if isinstance(f, DepthFrame) else f)) for f in frames}
    if len(shapes) != 1:
        raise ConfigurationError(f"frame dimensions differ: {sorted(shapes)}")


@dataclass
class LidarScan:
    """Planar range scan in the robot base frame.

    Beam ``i`` points at ``angle_min + i * angle_increment``. NaN (or any value
    above ``range_max``) means the beam saw nothing.
    """

    angle_min: float
    angle_increment: float
    ranges: np.ndarray
    scan_height: float = 0.18
    range_max: float = 12.0
    timestamp: float = 0.0
    angles: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=np.float64)
        if self.ranges.ndim != 1 or self.ranges.size == 0:
            raise ConfigurationError("scan needs at least one range")
        self.angles = self.angle_min + self.angle_increment * np.arange(self.ranges.size)

    def valid(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.isfinite(self.ranges) & (self.ranges <= self.range_max) & (self.ranges > 0)
