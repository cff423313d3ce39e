"""Shared test fixtures and independent oracles.

The oracles here deliberately avoid the library's algorithms: ray distances
come from brute-force marching, neighbor queries from full O(n) scans, disc
tests from exhaustive cell enumeration, and the RNG reference is a separate
transcription of SplitMix64. Library results are checked against these.
"""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from swarmsim import GridMap, Pose, RobotBody, generate_arena

MASK64 = (1 << 64) - 1


# --- independent SplitMix64 reference ----------------------------------------


def reference_splitmix64(seed: int):
    """Generator form of SplitMix64, written from the published constants."""
    state = seed & MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield (z ^ (z >> 31)) & MASK64


# --- map helpers --------------------------------------------------------------


def grid_from_ascii(art: str) -> GridMap:
    """Build a GridMap from rows of '.' (free) and '#' (obstacle)."""
    rows = [line.strip() for line in art.strip().splitlines()]
    height = len(rows)
    width = len(rows[0])
    occ = np.zeros((height, width), dtype=bool)
    for y, row in enumerate(rows):
        assert len(row) == width, "ragged ascii map"
        for x, ch in enumerate(row):
            occ[y, x] = ch == "#"
    return GridMap(width, height, occ)


def random_grid(rng: random.Random, width: int, height: int, fill: float) -> GridMap:
    occ = np.zeros((height, width), dtype=bool)
    for y in range(height):
        for x in range(width):
            if rng.random() < fill:
                occ[y, x] = True
    return GridMap(width, height, occ)


def place_bodies(
    rng: random.Random, grid: GridMap, count: int, radius: float, max_tries: int = 20000
) -> list[RobotBody]:
    """Rejection-place non-overlapping bodies in free space (test-only)."""
    bodies: list[RobotBody] = []
    tries = 0
    while len(bodies) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("test scene too dense")
        x = rng.uniform(0, grid.width)
        y = rng.uniform(0, grid.height)
        if not grid.disc_free(x, y, radius):
            continue
        if any(
            (b.pose.x - x) ** 2 + (b.pose.y - y) ** 2 < (2 * radius) ** 2 for b in bodies
        ):
            continue
        theta = rng.uniform(-math.pi, math.pi)
        bodies.append(RobotBody(len(bodies), Pose(x, y, theta), radius))
    return bodies


# --- brute-force oracles -------------------------------------------------------


def disc_free_oracle(grid: GridMap, x: float, y: float, r: float) -> bool:
    """Exhaustive scan of the disc bounding box, closed world included."""
    cx0 = math.floor(x - r - 1)
    cx1 = math.ceil(x + r + 1)
    cy0 = math.floor(y - r - 1)
    cy1 = math.ceil(y + r + 1)
    for cy in range(cy0, cy1 + 1):
        for cx in range(cx0, cx1 + 1):
            dx = cx + 0.5 - x
            dy = cy + 0.5 - y
            if dx * dx + dy * dy <= r * r and grid.is_obstacle(cx, cy):
                return False
    return True


def neighbors_oracle(
    positions: list[tuple[float, float]],
    x: float,
    y: float,
    d: float,
    exclude: int | None = None,
) -> list[int]:
    """Naive O(n) scan; ids ascending."""
    out = []
    for i, (px, py) in enumerate(positions):
        if i == exclude:
            continue
        if (px - x) ** 2 + (py - y) ** 2 <= d * d:
            out.append(i)
    return out


def march_ray_oracle(
    grid: GridMap,
    robots: list[tuple[float, float]],
    radius: float,
    origin: tuple[float, float],
    direction: float,
    max_range: float,
    self_id: int | None = None,
    step: float = 0.01,
):
    """Sample the ray every `step` px and report the first wall sample, plus
    the first sample inside each robot disc. Returns (wall_t or None,
    [(robot_t, robot_id), ...] sorted by (t, id)).
    """
    ox, oy = origin
    dx = math.cos(direction)
    dy = math.sin(direction)
    ts = np.arange(0.0, max_range + step, step)
    ts = ts[ts <= max_range]
    px = ox + ts * dx
    py = oy + ts * dy
    cx = np.floor(px).astype(np.int64)
    cy = np.floor(py).astype(np.int64)
    outside = (cx < 0) | (cy < 0) | (cx >= grid.width) | (cy >= grid.height)
    wall = outside.copy()
    inside = ~outside
    if inside.any():
        wall[inside] = grid.occupancy[cy[inside], cx[inside]]
    wall_idx = np.argmax(wall) if wall.any() else -1
    wall_t = float(ts[wall_idx]) if wall_idx >= 0 else None
    robot_hits = []
    for j, (rx, ry) in enumerate(robots):
        if j == self_id:
            continue
        in_disc = (px - rx) ** 2 + (py - ry) ** 2 <= radius * radius
        if in_disc.any():
            robot_hits.append((float(ts[np.argmax(in_disc)]), j))
    robot_hits.sort()
    return wall_t, robot_hits


def fine_march_confirms(
    grid: GridMap,
    robots: list[tuple[float, float]],
    radius: float,
    origin: tuple[float, float],
    direction: float,
    t_hit: float,
    kind: str,
    robot: int | None,
    window: float = 0.02,
    step: float = 1e-6,
) -> bool:
    """Re-march a narrow window around a reported hit at much finer step.

    The coarse 0.01 px march cannot see a ray clipping an obstacle-cell
    corner (or grazing a disc) over less than one step of path length; this
    confirms or refutes such sub-resolution hits by sampling alone.
    """
    ox, oy = origin
    dx = math.cos(direction)
    dy = math.sin(direction)
    ts = np.arange(max(0.0, t_hit - window), t_hit + window, step)
    px = ox + ts * dx
    py = oy + ts * dy
    if kind == "wall":
        cx = np.floor(px).astype(np.int64)
        cy = np.floor(py).astype(np.int64)
        outside = (cx < 0) | (cy < 0) | (cx >= grid.width) | (cy >= grid.height)
        hit = outside.copy()
        inside = ~outside
        if inside.any():
            hit[inside] = grid.occupancy[cy[inside], cx[inside]]
        return bool(hit.any())
    rx, ry = robots[robot]
    return bool(((px - rx) ** 2 + (py - ry) ** 2 <= radius * radius).any())


@pytest.fixture
def arena100() -> GridMap:
    return generate_arena(100, 100)
