"""Bootstrap-calibrated learned depth for local costmaps.

A degraded ToF camera's surviving pixels set the metric scale of a dense
learned depth prediction, which then fills the pixels the sensor lost.
"""

from .errors import ConfigurationError, DataError, DepthBootError, ScenarioError, UnreliableScale
from .frames import DepthFrame, LidarScan

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DataError",
    "DepthBootError",
    "DepthFrame",
    "LidarScan",
    "ScenarioError",
    "UnreliableScale",
    "__version__",
]
