"""Exception types shared across the pipeline."""


class DepthBootError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DepthBootError, ValueError):
    """Inconsistent shapes, parameters or missing layers."""


class ScenarioError(DepthBootError, ValueError):
    """Invalid scenario description or a pose outside the scene."""


class DataError(DepthBootError):
    """Malformed or inconsistent on-disk data."""


class UnreliableScale(DepthBootError):
    """Too few qualifying pixels to trust the median scale."""

    def __init__(self, message, valid_fraction=0.0, valid_pixel_count=0):
        super().__init__(message)
        self.valid_fraction = valid_fraction
        self.valid_pixel_count = valid_pixel_count
