"""Acceptance suite: one test per criterion, printing one line each.

Run with:  pytest tests/test_acceptance.py -v -s
"""

from __future__ import annotations

import math
import random
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from swarmsim import (
    RngStream,
    SimConfig,
    Simulation,
    bench,
    cast_ray,
    load_map,
    parse_config,
    rebuild_index,
    render_frame,
    run,
    serialize_config,
    stream_seed,
)
from swarmsim.engine import Metrics, SimState
from conftest import (
    fine_march_confirms,
    march_ray_oracle,
    neighbors_oracle,
    place_bodies,
    random_grid,
    reference_splitmix64,
)

GIB = 1024**3


def _arena_config(**kwargs) -> SimConfig:
    base = dict(
        robot_count=100,
        seed=42,
        ticks=100,
        controller_type="braitenberg",
        arena_width=2048,
        arena_height=2048,
    )
    base.update(kwargs)
    return SimConfig(**base)


def test_criterion_01_five_thousand_robots_complete_with_invariants():
    config = _arena_config(robot_count=5000, ticks=100)
    sim = Simulation(config)
    for _ in range(100):
        sim.step()
        sim.check_invariants()
    assert sim.state.tick == 100
    print(
        "\nACCEPTANCE 1 PASS: 5000 robots x 100 ticks on 2048x2048 completed, "
        f"invariants green, canceled={sim.state.metrics.canceled_moves}"
    )


def test_criterion_02_six_thousand_robots_memory(tmp_path):
    path = tmp_path / "big.properties"
    path.write_text(
        serialize_config(_arena_config(robot_count=6000, ticks=100))
    )
    proc = subprocess.run(
        [sys.executable, "-m", "swarmsim", "--config", str(path)],
        capture_output=True,
        text=True,
        timeout=600,
    )
    assert proc.returncode == 0, proc.stderr
    report = dict(line.split("=", 1) for line in proc.stdout.strip().splitlines())
    peak = int(report["peak_mem_bytes"])
    assert int(report["ticks_run"]) == 100
    assert 0 < peak < 4 * GIB
    print(f"\nACCEPTANCE 2 PASS: 6000 robots peak RSS {peak / 2**20:.0f} MiB < 4 GiB")


def test_criterion_03_near_linear_scaling():
    config = _arena_config(ticks=100)
    rows = bench(config, sizes=[1, 100, 1000, 5000])
    by_n = {row.n: row for row in rows}
    assert all(row.error is None for row in rows), rows
    wall_1000 = by_n[1000].wall_seconds
    wall_5000 = by_n[5000].wall_seconds
    # 15x budget per 10x robots, bridged through the 500-equivalent
    # (wall(1000)/2): wall(5000) <= 15 * wall(1000)/2
    assert wall_5000 <= 7.5 * wall_1000, (wall_5000, wall_1000)
    throughput = {row.n: row.n * row.ticks / row.wall_seconds for row in rows}
    print(
        "\nACCEPTANCE 3 PASS: scaling 1000->5000 factor "
        f"{wall_5000 / wall_1000:.2f} (budget 7.5); "
        "steps/sec " + ", ".join(f"n={n}: {v:,.0f}" for n, v in sorted(throughput.items()))
    )


def _random_run_config(rng: random.Random) -> SimConfig:
    controller = rng.choice(["braitenberg", "random_walk"])
    radius = rng.uniform(1.5, 5.0)
    arena = rng.randint(128, 384)
    count = rng.randint(2, 12)
    v_max = rng.uniform(0.5, 3.0)
    return SimConfig(
        robot_count=count,
        seed=rng.getrandbits(64),
        ticks=1000,
        controller_type=controller,
        arena_width=arena,
        arena_height=arena,
        robot_radius=radius,
        sensor_count=rng.choice([4, 6, 8]),
        sensor_range=rng.uniform(max(v_max, 16.0), 96.0),
        v_max=v_max,
        w_max=rng.uniform(0.1, 1.0),
        index_cell_size=rng.choice([None, 8.0, 16.0, 48.0]),
    )


def test_criterion_04_equal_seeds_byte_identical_logs(tmp_path):
    rng = random.Random(20260808)
    for trial in range(20):
        config = _random_run_config(rng)
        paths = [tmp_path / f"t{trial}_{which}.csv" for which in "ab"]
        for path in paths:
            run(replace(config, log_path=str(path)))
        first, second = (p.read_bytes() for p in paths)
        assert first == second, f"trial {trial} diverged"
        assert first.count(b"\n") == config.robot_count * config.ticks + 1
    print("\nACCEPTANCE 4 PASS: 20 random configs x 1000 ticks, logs byte-identical")


def test_criterion_05_raycast_oracle_equivalence():
    rng = random.Random(555)
    scenes = 0
    while scenes < 1000:
        width = rng.randint(16, 56)
        height = rng.randint(16, 56)
        grid = random_grid(rng, width, height, rng.uniform(0.0, 0.18))
        radius = rng.uniform(1.0, 3.0)
        try:
            bodies = place_bodies(rng, grid, rng.randint(0, 5), radius, max_tries=2500)
        except RuntimeError:
            continue
        origin = None
        for _ in range(200):
            x = rng.uniform(0.5, width - 0.5)
            y = rng.uniform(0.5, height - 0.5)
            if grid.is_obstacle(math.floor(x), math.floor(y)):
                continue
            if any(
                (b.pose.x - x) ** 2 + (b.pose.y - y) ** 2 < radius * radius
                for b in bodies
            ):
                continue
            origin = (x, y)
            break
        if origin is None:
            continue
        direction = rng.uniform(-math.pi, math.pi)
        max_range = rng.uniform(5.0, 40.0)
        index = rebuild_index(bodies, 16.0)
        hit = cast_ray(grid, index, origin, direction, max_range)
        wall_t, robot_hits = march_ray_oracle(
            grid,
            [(b.pose.x, b.pose.y) for b in bodies],
            radius,
            origin,
            direction,
            max_range,
        )
        wall_c = wall_t if wall_t is not None else math.inf
        robot_c = robot_hits[0][0] if robot_hits else math.inf
        expected = min(wall_c, robot_c, max_range)
        if hit.dist < expected - 0.02:
            # sub-resolution corner clip or disc graze: the coarse march is
            # blind below its step; confirm by sampling at 1e-6 px instead
            assert fine_march_confirms(
                grid,
                [(b.pose.x, b.pose.y) for b in bodies],
                radius,
                origin,
                direction,
                hit.dist,
                hit.kind,
                hit.robot,
            ), (scenes, origin, direction, hit)
        else:
            assert hit.dist == pytest.approx(expected, abs=0.02), (
                scenes,
                origin,
                direction,
                max_range,
            )
            if abs(wall_c - robot_c) > 0.05 and abs(expected - max_range) > 0.05:
                expected_kind = "wall" if wall_c < robot_c else "robot"
                if expected == max_range:
                    expected_kind = "none"
                assert hit.kind == expected_kind
        scenes += 1
    print("\nACCEPTANCE 5 PASS: 1000 scenes, DDA within ±0.02 px of 0.01 px march")


def test_criterion_06_neighbor_index_equals_naive_scan():
    rng = random.Random(666)
    for trial in range(1000):
        n = rng.randint(0, 80)
        span = rng.uniform(20, 400)
        points = [(rng.uniform(0, span), rng.uniform(0, span)) for _ in range(n)]
        from swarmsim import Pose, RobotBody

        bodies = [RobotBody(i, Pose(x, y, 0.0), 1.0) for i, (x, y) in enumerate(points)]
        index = rebuild_index(bodies, rng.choice([4.0, 16.0, 64.0]))
        for _ in range(3):
            x = rng.uniform(-10, span + 10)
            y = rng.uniform(-10, span + 10)
            d = rng.uniform(0, span / 2)
            exclude = rng.randrange(n) if n and rng.random() < 0.5 else None
            assert index.neighbors_within(x, y, d, exclude) == neighbors_oracle(
                points, x, y, d, exclude
            ), trial
    print("\nACCEPTANCE 6 PASS: 1000 configurations, grid queries equal naive scan")


def test_criterion_07_no_overlap_over_ten_thousand_ticks():
    config = SimConfig(
        robot_count=200,
        seed=1234,
        ticks=10000,
        controller_type="random_walk",
        arena_width=512,
        arena_height=512,
        robot_radius=3.0,
    )
    sim = Simulation(config)
    r = config.robot_radius
    limit = (2.0 * r) * (2.0 * r)
    grid = sim.state.grid
    for tick in range(10000):
        sim.step()
        xs = np.array([b.pose.x for b in sim.state.bodies])
        ys = np.array([b.pose.y for b in sim.state.bodies])
        dx = xs[:, None] - xs[None, :]
        dy = ys[:, None] - ys[None, :]
        d2 = dx * dx + dy * dy
        np.fill_diagonal(d2, np.inf)
        assert (d2 >= limit).all(), f"overlap at tick {tick}"
        for body in sim.state.bodies:
            assert grid.disc_free(body.pose.x, body.pose.y, r), (
                f"wall overlap at tick {tick}, robot {body.id}"
            )
    print(
        "\nACCEPTANCE 7 PASS: 200 random walkers x 10000 ticks, no overlap "
        f"(canceled={sim.state.metrics.canceled_moves})"
    )


def test_criterion_08_braitenberg_avoidance():
    config = SimConfig(
        robot_count=1,
        seed=7,
        ticks=10000,
        controller_type="braitenberg",
        arena_width=256,
        arena_height=256,
    )
    report = run(config)
    assert report.metrics.canceled_moves <= 2, report.metrics.canceled_moves
    print(
        "\nACCEPTANCE 8 PASS: lone avoider, 10000 ticks, "
        f"canceled={report.metrics.canceled_moves} (budget 2)"
    )


def test_criterion_09_rng_stream_conformance():
    seed = stream_seed(42, 0)
    reference = reference_splitmix64(seed)
    stream = RngStream(seed)
    got = [stream.next_u64() for _ in range(10)]
    want = [next(reference) for _ in range(10)]
    assert got == want
    print("\nACCEPTANCE 9 PASS: robot-0 stream (master 42) matches SplitMix64 reference")


def test_criterion_10_format_round_trips():
    rng = random.Random(1010)
    # config parse/serialize/parse equality
    for _ in range(50):
        config = _random_run_config(rng)
        assert parse_config(serialize_config(config)) == config
    # PGM threshold boundary
    grid = load_map(b"P2\n2 1\n255\n127 128\n")
    assert grid.is_obstacle(0, 0) and not grid.is_obstacle(1, 0)
    grid = load_map(b"P5\n2 1\n255\n" + bytes([127, 128]))
    assert grid.is_obstacle(0, 0) and not grid.is_obstacle(1, 0)
    # render byte-size identity on random states
    for _ in range(20):
        width = rng.randint(1, 80)
        height = rng.randint(1, 80)
        grid = random_grid(rng, width, height, rng.uniform(0, 0.3))
        try:
            bodies = place_bodies(rng, grid, rng.randint(0, 3), 1.0, max_tries=1500)
        except RuntimeError:
            bodies = []
        state = SimState(
            tick=0,
            grid=grid,
            bodies=bodies,
            index=rebuild_index(bodies, 16.0),
            inboxes=[[] for _ in bodies],
            rng_streams=[RngStream(i) for i in range(len(bodies))],
            master_rng=RngStream(0),
            metrics=Metrics(),
        )
        data = render_frame(state)
        header = f"P6\n{width} {height}\n255\n".encode()
        assert len(data) == len(header) + 3 * width * height
    print("\nACCEPTANCE 10 PASS: config round-trips, PGM threshold, frame byte sizes")
