"""Exception types shared across the package."""


class PinchcastError(Exception):
    """Base class for all pinchcast errors."""


class ConfigError(PinchcastError):
    """Invalid system configuration."""


class TopologyError(PinchcastError):
    """Invalid user/group topology (empty group, overlapping groups, degenerate geometry)."""


class PlacementError(PinchcastError):
    """Antenna placement violates the aperture or spacing constraints."""


class InfeasiblePlacementError(PlacementError):
    """No candidate position satisfies the spacing constraints (over-packed waveguide)."""
