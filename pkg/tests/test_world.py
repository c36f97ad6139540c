import math

import numpy as np
import pytest

from rovertwin.core import Pose2D, RobotParams
from rovertwin.drivetrain import WheelSpeeds
from rovertwin.world import (
    LidarSpec,
    PoseOutsideWorld,
    Simulator,
    StabilityConfig,
    WorldFormatError,
    WorldMap,
    check_stability,
    drive_circle,
    load_world,
    rectangle_segments,
    save_world,
    simulate_lidar,
)

PARAMS = RobotParams()


def square_room(half=2.0) -> WorldMap:
    return WorldMap(np.array(rectangle_segments(-half, -half, half, half)))


# -- stability ----------------------------------------------------------


def test_stability_unstable_row():
    # tight fast turn on the bare platform: 12.5 m/s^2 lateral
    result = check_stability(2.5, 0.5, StabilityConfig(), PARAMS)
    assert result.lateral_accel == pytest.approx(12.5)
    assert result.tipping and result.sliding
    assert not result.stable
    assert result.label == "tipping+sliding"


def test_stability_slow_tight_turn_is_stable():
    result = check_stability(0.5, 0.5, StabilityConfig(), PARAMS)
    assert result.stable
    assert result.lateral_accel == pytest.approx(0.5)


def test_stability_loaded_wide_turn_is_stable():
    stab = StabilityConfig(payload_mass=25.0)
    result = check_stability(2.5, 1.5, stab, PARAMS)
    assert result.stable
    assert result.lateral_accel == pytest.approx(6.25 / 1.5)


def test_stability_payload_raises_effective_cog():
    base = StabilityConfig()
    loaded = StabilityConfig(payload_mass=85.0)
    assert loaded.effective_cog_height(PARAMS) > base.effective_cog_height(PARAMS)
    # mass-weighted mean of 0.20 and 0.30
    expected = (17.1 * 0.20 + 85.0 * 0.30) / (17.1 + 85.0)
    assert loaded.effective_cog_height(PARAMS) == pytest.approx(expected)


def test_stability_monotone_in_speed_and_radius():
    rng = np.random.default_rng(5)
    stab = StabilityConfig(payload_mass=25.0, payload_pos=0.1)
    for _ in range(200):
        radius = rng.uniform(0.3, 3.0)
        speeds = np.sort(rng.uniform(0.1, 3.3, size=4))
        stable_flags = [check_stability(v, radius, stab, PARAMS).stable for v in speeds]
        # once unstable, faster never becomes stable again
        assert stable_flags == sorted(stable_flags, reverse=True)
        v = rng.uniform(0.1, 3.3)
        radii = np.sort(rng.uniform(0.2, 3.0, size=4))
        flags = [check_stability(v, r, stab, PARAMS).stable for r in radii]
        assert flags == sorted(flags)  # wider is never less stable


def test_stability_config_validation():
    with pytest.raises(ValueError):
        check_stability(1.0, 1.0, StabilityConfig(payload_mass=95.0), PARAMS)
    with pytest.raises(ValueError):
        check_stability(1.0, 1.0, StabilityConfig(payload_pos=0.3), PARAMS)
    with pytest.raises(ValueError):
        check_stability(1.0, 0.0, StabilityConfig(), PARAMS)


# -- stepping -----------------------------------------------------------


def test_step_zero_speeds_only_advances_time():
    sim = Simulator(params=PARAMS)
    before = sim.pose
    state = sim.step(WheelSpeeds(0, 0), 0.01)
    assert state.truth_pose == before
    assert state.time == pytest.approx(0.01)


def test_step_straight_line_closed_form():
    sim = Simulator(params=PARAMS)
    wheels = WheelSpeeds(1.0 / PARAMS.wheel_radius, 1.0 / PARAMS.wheel_radius)
    for _ in range(1000):
        sim.step(wheels, 0.001)
    assert sim.pose.x == pytest.approx(1.0, abs=1e-9)
    assert sim.pose.y == pytest.approx(0.0, abs=1e-12)


def test_step_rejects_bad_dt():
    sim = Simulator(params=PARAMS)
    with pytest.raises(ValueError):
        sim.step(WheelSpeeds(0, 0), 0.2)
    with pytest.raises(ValueError):
        sim.step(WheelSpeeds(0, 0), 0.0)


def test_identical_seeds_identical_states():
    def run(seed):
        sim = Simulator(params=PARAMS, world=square_room(), seed=seed)
        out = []
        for k in range(50):
            state = sim.step(WheelSpeeds(2.0 + math.sin(k / 5.0), 2.0), 0.01)
            out.append((state.truth_pose, state.ticks_left, state.ticks_right))
            if k % 10 == 0:
                out.append(tuple(sim.scan().ranges))
        return out

    assert run(42) == run(42)
    assert run(42) != run(43)


# -- lidar --------------------------------------------------------------


def test_lidar_empty_world_all_inf():
    sim_world = WorldMap(np.zeros((0, 4)))
    scan = simulate_lidar(Pose2D(), sim_world, LidarSpec(), np.random.default_rng(0))
    assert all(math.isinf(r) for r in scan.ranges)


def test_lidar_square_room_beam_geometry():
    spec = LidarSpec(noise_sigma=0.0)
    scan = simulate_lidar(Pose2D(), square_room(2.0), spec, np.random.default_rng(0))
    ranges = np.asarray(scan.ranges)
    angles = scan.angles
    # beam straight along +x hits the x=2 wall at exactly 2 m
    idx = int(np.argmin(np.abs(angles)))
    assert ranges[idx] == pytest.approx(2.0, abs=1e-9)
    # every beam matches the analytic box distance
    for a, r in zip(angles, ranges):
        dx = 2.0 / abs(math.cos(a)) if abs(math.cos(a)) > 1e-12 else math.inf
        dy = 2.0 / abs(math.sin(a)) if abs(math.sin(a)) > 1e-12 else math.inf
        assert r == pytest.approx(min(dx, dy), abs=1e-9)


def test_lidar_wall_beyond_max_range_is_inf():
    far_wall = WorldMap(np.array([[20.0, -5.0, 20.0, 5.0],
                                  [-20.0, -5.0, -20.0, 5.0]]))
    scan = simulate_lidar(Pose2D(), far_wall, LidarSpec(noise_sigma=0.0),
                          np.random.default_rng(0))
    assert all(math.isinf(r) for r in scan.ranges)


def test_lidar_noise_statistics():
    # zero-mean noise with sample sigma within 20% of configured over 1e4 beams
    spec = LidarSpec(noise_sigma=0.01)
    room = square_room(2.0)
    rng = np.random.default_rng(123)
    truth = np.asarray(simulate_lidar(Pose2D(), room, LidarSpec(noise_sigma=0.0),
                                      np.random.default_rng(0)).ranges)
    errors = []
    for _ in range(30):
        ranges = np.asarray(simulate_lidar(Pose2D(), room, spec, rng).ranges)
        errors.extend(ranges - truth)
    errors = np.asarray(errors)
    assert len(errors) >= 10_000
    assert abs(errors.mean()) < 3 * 0.01 / math.sqrt(len(errors))
    assert abs(errors.std() - 0.01) < 0.2 * 0.01


def test_lidar_pose_outside_world():
    with pytest.raises(PoseOutsideWorld):
        simulate_lidar(Pose2D(10, 0, 0), square_room(2.0), LidarSpec(),
                       np.random.default_rng(0))


def test_lidar_blanks_returns_inside_min_range():
    # a box tighter than range_min everywhere: every return is blanked
    tight = square_room(0.1)  # max corner distance 0.1*sqrt(2) < 0.15
    scan = simulate_lidar(Pose2D(), tight, LidarSpec(noise_sigma=0.0),
                          np.random.default_rng(0))
    assert all(math.isinf(r) for r in scan.ranges)


# -- drive_circle ---------------------------------------------------------


def _fit_circle(xy):
    a = np.column_stack((xy[:, 0], xy[:, 1], np.ones(len(xy))))
    b = xy[:, 0] ** 2 + xy[:, 1] ** 2
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy = sol[0] / 2.0, sol[1] / 2.0
    return cx, cy, math.sqrt(sol[2] + cx * cx + cy * cy)


def test_drive_circle_traces_commanded_radius():
    run = drive_circle(1.0, 2.0, revolutions=1.0)
    assert run.classification == "stable"
    # skip the spin-up transient, fit the steady circle
    steady = run.trajectory()[len(run.rows) // 4:, :2]
    _, _, radius = _fit_circle(steady)
    assert radius == pytest.approx(2.0, abs=1e-2)


def test_drive_circle_unstable_transition():
    run = drive_circle(2.5, 0.5, revolutions=1.0)
    assert run.classification == "unstable"
    assert run.flags[0] == "stable"  # ramping up from rest
    assert "tipping" in run.flags[-1]
    transition = run.flags.index("tipping+sliding")
    assert transition > 0


def test_drive_circle_zero_revolutions():
    run = drive_circle(1.0, 1.0, revolutions=0)
    assert run.rows == []
    assert run.to_csv() == "t,x,y,theta,v_cmd,omega_cmd,ax,ay,gz,flag\n"


def test_drive_circle_deterministic_csv():
    a = drive_circle(1.5, 1.0, revolutions=0.5, seed=9).to_csv()
    b = drive_circle(1.5, 1.0, revolutions=0.5, seed=9).to_csv()
    assert a == b


# -- world file io --------------------------------------------------------


def test_world_file_roundtrip(tmp_path):
    world = square_room(3.0)
    path = tmp_path / "room.world"
    save_world(world, path)
    loaded = load_world(path)
    assert np.allclose(loaded.segments, world.segments)


def test_world_file_comments_and_errors(tmp_path):
    path = tmp_path / "w.world"
    path.write_text("# header\n0 0 1 0  # wall\n\n")
    world = load_world(path)
    assert world.segments.shape == (1, 4)
    bad = tmp_path / "bad.world"
    bad.write_text("0 0 1\n")
    with pytest.raises(WorldFormatError):
        load_world(bad)
    nan = tmp_path / "nan.world"
    nan.write_text("0 0 1 nan\n")
    with pytest.raises((WorldFormatError, ValueError)):
        load_world(nan)
