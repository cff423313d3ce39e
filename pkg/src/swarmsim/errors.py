"""Exception hierarchy shared across the simulator."""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for all simulator errors."""


class ConfigError(SimulationError):
    """Bad configuration file, override, or value."""


class MapLoadError(SimulationError):
    """Malformed or truncated map image."""


class SpawnError(SimulationError):
    """Robot placement failed (map too dense or explicit positions invalid)."""


class ControllerError(SimulationError):
    """A controller produced an invalid command or broadcast."""
