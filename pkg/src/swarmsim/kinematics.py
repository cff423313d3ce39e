"""Robot bodies and the discrete-time motion model.

One tick: clamp the commanded speeds, rotate, then translate along the new
heading. A translation that would overlap a wall or another robot is
canceled outright (the heading change always sticks), which keeps the
global no-overlap invariant without any contact dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .world import GridMap, RobotIndex

_PI = math.pi
_TWO_PI = 2.0 * math.pi


@dataclass(slots=True)
class Pose:
    x: float
    y: float
    theta: float


@dataclass(slots=True)
class RobotBody:
    id: int
    pose: Pose
    radius: float
    collided_last_tick: bool = False


@dataclass(frozen=True, slots=True)
class ActuatorCommand:
    """Requested speeds for one tick: v in px/tick, w in rad/tick."""

    v: float
    w: float


@dataclass(frozen=True, slots=True)
class Limits:
    v_max: float
    w_max: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v_max) and self.v_max > 0):
            raise ValueError("v_max must be positive and finite")
        if not (math.isfinite(self.w_max) and self.w_max > 0):
            raise ValueError("w_max must be positive and finite")


def wrap_angle(theta: float) -> float:
    """Map an angle to [-pi, pi); identity (bit-exact) if already inside."""
    if -_PI <= theta < _PI:
        return theta
    r = (theta + _PI) % _TWO_PI - _PI
    if r >= _PI:  # float mod can land exactly on the open boundary
        r = -_PI
    return r


def _clamp(value: float, lo: float, hi: float) -> float:
    if value < lo:
        return lo
    if value > hi:
        return hi
    return value


def apply_command(pose: Pose, cmd: ActuatorCommand, limits: Limits) -> Pose:
    """Candidate pose after one tick: rotate first, then translate."""
    w = _clamp(cmd.w, -limits.w_max, limits.w_max)
    v = _clamp(cmd.v, -limits.v_max, limits.v_max)
    theta = wrap_angle(pose.theta + w)
    return Pose(pose.x + v * math.cos(theta), pose.y + v * math.sin(theta), theta)


def resolve_move(
    grid: GridMap, index: RobotIndex, body: RobotBody, candidate: Pose
) -> tuple[Pose, bool]:
    """Adopt the candidate heading unconditionally; adopt the translation only
    if the destination disc is wall-free and no other robot center lies
    strictly within two radii. Returns (pose, collided).

    The caller must resolve moves serially in ascending id order with `index`
    tracking already-resolved positions.
    """
    r = body.radius
    if grid.disc_free(candidate.x, candidate.y, r) and not index.any_within_strict(
        candidate.x, candidate.y, 2.0 * r, exclude=body.id
    ):
        return candidate, False
    return Pose(body.pose.x, body.pose.y, candidate.theta), True
