"""End-to-end pipelines used by the CLI, the demos, and the acceptance
tests: scripted SLAM mapping runs and seeded MCL convergence trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import OccupancyGrid, Pose2D, RobotParams, Twist2D, normalize_angle
from .drivetrain import integrate_odometry, inverse_kinematics
from .mapping import Mapper, MapperConfig
from .mcl import MclConfig, MclFilter
from .scenarios import PathScript
from .world import LidarSpec, Simulator, WorldMap, rectangle_segments


def demo_room() -> tuple[WorldMap, tuple[float, float, float, float],
                          list[tuple[float, float, float, float]]]:
    """8 m x 6 m room with two box obstacles: the mapping benchmark world.

    Returns (world, interior rectangle, obstacle rectangles).
    """
    interior = (-4.0, -3.0, 4.0, 3.0)
    obstacles = [(1.4, 0.4, 2.6, 1.4), (-2.8, -1.9, -1.6, -1.1)]
    segments = rectangle_segments(*interior)
    for box in obstacles:
        segments += rectangle_segments(*box)
    return WorldMap(np.array(segments)), interior, obstacles


def lab_room() -> tuple[WorldMap, tuple[float, float, float, float],
                        list[tuple[float, float, float, float]]]:
    """5.2 m x 3.6 m laboratory: the localization benchmark world.

    Three boxes and a chamfered corner leave no near-symmetric pose whose
    decimated scan resembles the true one, which is what global particle
    localization needs to disambiguate headings.
    """
    interior = (-2.6, -1.8, 2.6, 1.8)
    obstacles = [(0.8, 0.2, 1.7, 1.0), (-1.9, 0.5, -1.2, 1.1), (0.4, -1.2, 0.8, -0.8)]
    segments = rectangle_segments(*interior)
    for box in obstacles:
        segments += rectangle_segments(*box)
    segments.append([1.8, 1.8, 2.6, 1.0])
    return WorldMap(np.array(segments)), interior, obstacles


# Evaluation-harness localization settings: softer likelihood (wider
# sigma, stronger decimation) than the tracking defaults so 500 global
# particles keep enough diversity to find the true basin, plus more
# motion-noise annealing to climb into it.
GLOBAL_MCL_CONFIG = MclConfig(sigma_hit=0.2, beam_step=25,
                              alphas=(0.1, 0.05, 0.15, 0.15))


@dataclass
class SlamRunResult:
    mapper: Mapper
    estimates: list[Pose2D] = field(default_factory=list)
    truths: list[Pose2D] = field(default_factory=list)
    times: list[float] = field(default_factory=list)

    @property
    def final_drift(self) -> float:
        """Position error between the last estimate and ground truth."""
        est, true = self.estimates[-1], self.truths[-1]
        return math.hypot(est.x - true.x, est.y - true.y)


def run_slam(world: WorldMap, script: PathScript,
             mapper_config: MapperConfig = MapperConfig(),
             params: RobotParams | None = None,
             start_pose: Pose2D = Pose2D(),
             seed: int = 0, rate_hz: float = 100.0,
             lidar: LidarSpec | None = None) -> SlamRunResult:
    """Drive the scripted path, feeding every lidar sweep to the mapper.

    The map frame is anchored at the starting pose, so estimates compare
    directly against ground truth when the run starts at the world origin.
    Wheel speeds track the script exactly (no motor lag): mapping accuracy
    is measured against the commanded path, not controller transients.
    """
    params = params or RobotParams()
    lidar = lidar or LidarSpec()
    sim = Simulator(params=params, world=world, lidar=lidar,
                    start_pose=start_pose, seed=seed)
    mapper = Mapper(mapper_config)
    result = SlamRunResult(mapper)
    dt = 1.0 / rate_hz
    scan_period = 1.0 / lidar.rate_hz
    next_scan = 0.0
    steps = round(script.duration / dt)
    for _ in range(steps + 1):
        if sim.time + 1e-12 >= next_scan:
            estimate = mapper.process_scan(sim.scan())
            result.estimates.append(estimate)
            result.truths.append(sim.pose)
            result.times.append(sim.time)
            next_scan += scan_period
        v, omega = script.command(sim.time)
        sim.step(inverse_kinematics(Twist2D(v, omega), params), dt)
    return result


# -- map quality metrics -------------------------------------------------


def _point_segment_distance(px, py, segments: np.ndarray) -> np.ndarray:
    """Distance from each (px, py) point to the nearest of the segments."""
    a = segments[:, 0:2]
    b = segments[:, 2:4]
    ab = b - a
    length2 = (ab * ab).sum(axis=1)
    length2 = np.where(length2 == 0.0, 1e-30, length2)
    p = np.column_stack((px, py))[:, None, :]  # (N, 1, 2)
    t = ((p - a[None, :, :]) * ab[None, :, :]).sum(axis=2) / length2[None, :]
    t = np.clip(t, 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(p - closest, axis=2)
    return d.min(axis=1)


@dataclass(frozen=True)
class MapAccuracy:
    occupied_precision: float  # fraction of occupied cells within wall_tol of a wall
    free_recall: float  # fraction of true interior free cells classified free
    occupied_cells: int
    free_cells_expected: int


def map_accuracy(grid: OccupancyGrid, world: WorldMap,
                 interior: tuple[float, float, float, float],
                 obstacles: list[tuple[float, float, float, float]] = (),
                 wall_tol: float = 0.2,
                 occupied_thresh: float = 0.65,
                 free_thresh: float = 0.196) -> MapAccuracy:
    """Classification quality of a built map against the true segment world.

    ``interior`` is the (xmin, ymin, xmax, ymax) rectangle of the room;
    ``obstacles`` are rectangles excluded from the free-space oracle.
    Occupied precision asks that detected walls lie near true walls; free
    recall asks that the reachable interior was actually carved free.
    """
    probs = grid.probabilities()
    xs = grid.origin.x + (np.arange(grid.width) + 0.5) * grid.resolution
    ys = grid.origin.y + (np.arange(grid.height) + 0.5) * grid.resolution
    cx, cy = np.meshgrid(xs, ys)
    occupied = probs > occupied_thresh
    occ_x = cx[occupied]
    occ_y = cy[occupied]
    if len(occ_x) == 0:
        precision = 0.0
    else:
        d = _point_segment_distance(occ_x, occ_y, world.segments)
        precision = float((d <= wall_tol).mean())
    xmin, ymin, xmax, ymax = interior
    inside = (cx > xmin + wall_tol) & (cx < xmax - wall_tol) \
        & (cy > ymin + wall_tol) & (cy < ymax - wall_tol)
    for ox1, oy1, ox2, oy2 in obstacles:
        inside &= ~((cx > ox1 - wall_tol) & (cx < ox2 + wall_tol)
                    & (cy > oy1 - wall_tol) & (cy < oy2 + wall_tol))
    expected = int(inside.sum())
    free = probs < free_thresh
    recall = float(free[inside].mean()) if expected else 0.0
    return MapAccuracy(precision, recall, int(occupied.sum()), expected)


# -- MCL convergence trials ----------------------------------------------


@dataclass(frozen=True)
class MclTrialResult:
    seed: int
    position_error: float
    heading_error: float
    tracking_errors: tuple[float, ...] = ()  # per-cycle position errors after convergence

    def converged(self, pos_tol: float = 0.1, heading_tol_deg: float = 5.0) -> bool:
        return (self.position_error < pos_tol
                and abs(self.heading_error) < math.radians(heading_tol_deg))


def _sample_safe_pose(grid: OccupancyGrid, rng: np.random.Generator,
                      clearance: float = 0.8) -> Pose2D:
    """Random pose in free space at least ``clearance`` from any occupied cell."""
    from scipy import ndimage

    occupied = grid.probabilities() > 0.65
    free = grid.probabilities() < 0.196
    distances = ndimage.distance_transform_edt(~occupied) * grid.resolution
    candidates = np.nonzero(free & (distances > clearance))
    if len(candidates[0]) == 0:
        raise ValueError("no free cell has the requested wall clearance")
    k = rng.integers(0, len(candidates[0]))
    iy, ix = candidates[0][k], candidates[1][k]
    x = grid.origin.x + (ix + 0.5) * grid.resolution
    y = grid.origin.y + (iy + 0.5) * grid.resolution
    return Pose2D(x, y, rng.uniform(-math.pi, math.pi))


def run_mcl_trial(grid: OccupancyGrid, world: WorldMap, seed: int,
                  config: MclConfig = MclConfig(), cycles: int = 30,
                  cycle_time: float = 0.3, sim_dt: float = 0.01,
                  params: RobotParams | None = None,
                  track_cycles: int = 0,
                  track_speed: float = 0.5) -> MclTrialResult:
    """One seeded global-localization run.

    The robot orbits a 0.3 m circle near a randomly drawn safe start pose
    (heading sweeps the full turn, position stays clear of walls by the
    0.8 m sampling clearance) while the filter consumes tick-odometry
    increments and noisy scans. With ``track_cycles`` the run continues at
    ``track_speed`` on the same orbit, recording per-cycle position errors
    of the converged filter.
    """
    params = params or RobotParams()
    rng = np.random.default_rng(seed)
    start = _sample_safe_pose(grid, rng)
    sim = Simulator(params=params, world=world, start_pose=start, seed=seed)
    mcl = MclFilter(grid, config, seed=seed + 10_000)
    odom = Pose2D()
    prev_odom = odom
    prev_ticks = (0, 0)
    pose_est = Pose2D()

    def cycle(wheels) -> Pose2D:
        nonlocal odom, prev_odom, prev_ticks, pose_est
        for _ in range(round(cycle_time / sim_dt)):
            state = sim.step(wheels, sim_dt)
            ticks = (state.ticks_left, state.ticks_right)
            odom = integrate_odometry(odom, ticks[0] - prev_ticks[0],
                                      ticks[1] - prev_ticks[1], params)
            prev_ticks = ticks
        delta = odom.relative_to(prev_odom)
        prev_odom = odom
        pose_est, _cov = mcl.update(delta, sim.scan())
        return pose_est

    orbit = inverse_kinematics(Twist2D(0.3, 1.0), params)  # 0.3 m orbit
    for _ in range(cycles):
        cycle(orbit)
    truth = sim.pose
    final_pos = math.hypot(pose_est.x - truth.x, pose_est.y - truth.y)
    final_heading = normalize_angle(pose_est.theta - truth.theta)
    tracking: list[float] = []
    fast_orbit = inverse_kinematics(Twist2D(track_speed, track_speed / 0.3), params)
    for _ in range(track_cycles):
        est = cycle(fast_orbit)
        tracking.append(math.hypot(est.x - sim.pose.x, est.y - sim.pose.y))
    return MclTrialResult(
        seed=seed,
        position_error=final_pos,
        heading_error=final_heading,
        tracking_errors=tuple(tracking),
    )


@dataclass(frozen=True)
class MclStats:
    results: tuple[MclTrialResult, ...]

    @property
    def success_rate(self) -> float:
        return sum(r.converged() for r in self.results) / len(self.results)

    @property
    def median_position_error(self) -> float:
        return float(np.median([r.position_error for r in self.results]))


def run_mcl_trials(grid: OccupancyGrid, world: WorldMap, trials: int, seed: int,
                   config: MclConfig = MclConfig(), cycles: int = 30) -> MclStats:
    results = tuple(
        run_mcl_trial(grid, world, seed + i, config, cycles) for i in range(trials)
    )
    return MclStats(results)
