"""Deterministic 2D world simulation: exact unicycle motion, ray-cast lidar
with Gaussian range noise, and the quasi-static tipping/sliding model used by
the circular-path stability harness.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import GRAVITY, ImuSample, LaserScan, Pose2D, RobotParams, Twist2D
from .drivetrain import (
    AxisMode,
    MotorAxis,
    WheelSpeeds,
    calibrate,
    forward_kinematics,
    inverse_kinematics,
    ticks_per_revolution,
)


class PoseOutsideWorld(Exception):
    """Lidar was asked to scan from a pose outside the world bounds."""


class WorldFormatError(Exception):
    """A world segment file failed to parse."""


@dataclass(frozen=True)
class WorldMap:
    """Collection of wall segments (x1, y1, x2, y2 rows, meters, world frame)."""

    segments: np.ndarray  # (N, 4)

    def __post_init__(self):
        seg = np.asarray(self.segments, dtype=float).reshape(-1, 4)
        if not np.all(np.isfinite(seg)):
            raise ValueError("world segments must be finite")
        object.__setattr__(self, "segments", seg)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """Axis-aligned (xmin, ymin, xmax, ymax) enclosing all segments."""
        if len(self.segments) == 0:
            return (0.0, 0.0, 0.0, 0.0)
        xs = self.segments[:, [0, 2]]
        ys = self.segments[:, [1, 3]]
        return (float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))

    def contains(self, x: float, y: float) -> bool:
        if len(self.segments) == 0:
            return True
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= x <= xmax and ymin <= y <= ymax


def load_world(path) -> WorldMap:
    """Read a world file: one ``x1 y1 x2 y2`` segment per line, ``#`` comments."""
    segments = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise WorldFormatError(f"{path}:{lineno}: expected 4 numbers, got {len(parts)}")
            try:
                segments.append([float(p) for p in parts])
            except ValueError as exc:
                raise WorldFormatError(f"{path}:{lineno}: {exc}") from None
    return WorldMap(np.array(segments, dtype=float).reshape(-1, 4))


def save_world(world: WorldMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x1, y1, x2, y2 in world.segments:
            fh.write(f"{x1:.6f} {y1:.6f} {x2:.6f} {y2:.6f}\n")


def rectangle_segments(xmin, ymin, xmax, ymax) -> list[list[float]]:
    """Four wall segments tracing an axis-aligned rectangle."""
    return [
        [xmin, ymin, xmax, ymin],
        [xmax, ymin, xmax, ymax],
        [xmax, ymax, xmin, ymax],
        [xmin, ymax, xmin, ymin],
    ]


# -- lidar ------------------------------------------------------------


@dataclass(frozen=True)
class LidarSpec:
    """360-beam, 10 Hz scanner with 16 m reach and 1-degree resolution."""

    beam_count: int = 360
    range_min: float = 0.15
    range_max: float = 16.0
    noise_sigma: float = 0.01
    rate_hz: float = 10.0

    @property
    def angle_increment(self) -> float:
        return 2.0 * math.pi / self.beam_count

    @property
    def angle_min(self) -> float:
        return -math.pi

    @property
    def angle_max(self) -> float:
        return -math.pi + (self.beam_count - 1) * self.angle_increment


def cast_rays(origin: np.ndarray, directions: np.ndarray, segments: np.ndarray,
              max_range: float) -> np.ndarray:
    """Distance to the nearest segment along each unit ray, +inf if none.

    Solves origin + t*d = a + u*(b-a) for every (ray, segment) pair with
    2D cross products; hits require t >= 0 and u in [0, 1].
    """
    if len(segments) == 0:
        return np.full(len(directions), np.inf)
    a = segments[:, 0:2]  # (S, 2)
    e = segments[:, 2:4] - a  # (S, 2)
    rel = a - origin  # (S, 2)
    d = directions  # (B, 2)
    denom = d[:, 0:1] * e[None, :, 1] - d[:, 1:2] * e[None, :, 0]  # (B, S)
    rel_cross_e = rel[:, 0] * e[:, 1] - rel[:, 1] * e[:, 0]  # (S,)
    rel_cross_d = rel[None, :, 0] * d[:, 1:2] - rel[None, :, 1] * d[:, 0:1]  # (B, S)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = rel_cross_e[None, :] / denom
        u = rel_cross_d / denom
    valid = (np.abs(denom) > 1e-12) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    dist = t.min(axis=1)
    return np.where(dist <= max_range, dist, np.inf)


def simulate_lidar(pose: Pose2D, world: WorldMap, spec: LidarSpec,
                   rng: np.random.Generator, stamp: float = 0.0) -> LaserScan:
    """Ray-cast one sweep from ``pose``; Gaussian noise on finite returns only.

    Raises PoseOutsideWorld when the sensor origin leaves the world bounds.
    Returns closer than range_min are treated as no-return, matching how
    the physical scanner blanks its dead zone.
    """
    if not world.contains(pose.x, pose.y):
        raise PoseOutsideWorld(f"pose ({pose.x:.3f}, {pose.y:.3f}) outside world bounds")
    angles = pose.theta + spec.angle_min + spec.angle_increment * np.arange(spec.beam_count)
    directions = np.column_stack((np.cos(angles), np.sin(angles)))
    dist = cast_rays(np.array([pose.x, pose.y]), directions, world.segments, spec.range_max)
    finite = np.isfinite(dist)
    noise = rng.normal(0.0, spec.noise_sigma, size=spec.beam_count)
    noisy = np.minimum(dist + noise, spec.range_max)
    dist = np.where(finite & (noisy >= spec.range_min), noisy, np.inf)
    return LaserScan(
        angle_min=spec.angle_min,
        angle_max=spec.angle_max,
        angle_increment=spec.angle_increment,
        ranges=tuple(float(r) for r in dist),
        range_min=spec.range_min,
        range_max=spec.range_max,
        stamp=stamp,
    )


# -- stability --------------------------------------------------------


PAYLOAD_COG_HEIGHT = 0.30  # m, assumed height of the payload's own COG


@dataclass(frozen=True)
class StabilityConfig:
    """Payload and friction configuration for the quasi-static stability check.

    ``payload_pos`` is the longitudinal offset of the payload from the base
    midpoint. It is recorded in run output but does not enter the lateral
    rollover criterion (lateral tipping is insensitive to it at this scale).
    """

    payload_mass: float = 0.0
    payload_pos: float = 0.0
    cog_height: float | None = None  # None -> RobotParams.cog_height
    payload_cog_height: float = PAYLOAD_COG_HEIGHT
    friction_mu: float = 1.0

    def validate(self, params: RobotParams) -> None:
        if not 0.0 <= self.payload_mass <= params.payload_max:
            raise ValueError(f"payload_mass outside [0, {params.payload_max}]")
        if abs(self.payload_pos) > params.length / 2.0:
            raise ValueError("payload_pos beyond the base half-length")

    def effective_cog_height(self, params: RobotParams) -> float:
        """Mass-weighted COG height of robot plus payload."""
        h_robot = self.cog_height if self.cog_height is not None else params.cog_height
        if self.payload_mass == 0.0:
            return h_robot
        total = params.mass_robot + self.payload_mass
        return (params.mass_robot * h_robot + self.payload_mass * self.payload_cog_height) / total


@dataclass(frozen=True)
class StabilityResult:
    """Outcome of the quasi-static check; both thresholds are reported."""

    tipping: bool
    sliding: bool
    lateral_accel: float

    @property
    def stable(self) -> bool:
        return not (self.tipping or self.sliding)

    @property
    def label(self) -> str:
        if self.stable:
            return "stable"
        parts = [name for name, flag in (("tipping", self.tipping), ("sliding", self.sliding)) if flag]
        return "+".join(parts)


def check_stability(v: float, turn_radius: float, stab: StabilityConfig,
                    params: RobotParams) -> StabilityResult:
    """Quasi-static lateral stability on a circle of the given radius.

    Lateral acceleration a = v^2/R tips the platform once it exceeds
    g * (track/2) / h_cog (moment balance about the outer wheel contact)
    and slides once it exceeds mu * g.
    """
    if not turn_radius > 0:
        raise ValueError("turn_radius must be positive")
    stab.validate(params)
    accel = v * v / turn_radius
    h = stab.effective_cog_height(params)
    tip_threshold = GRAVITY * (params.track_width / 2.0) / h
    slide_threshold = stab.friction_mu * GRAVITY
    return StabilityResult(
        tipping=accel > tip_threshold,
        sliding=accel > slide_threshold,
        lateral_accel=accel,
    )


# -- stepping ---------------------------------------------------------


@dataclass(frozen=True)
class SimState:
    """Immutable snapshot emitted by each simulation step."""

    truth_pose: Pose2D
    twist: Twist2D
    time: float
    rng_seed: int
    stability: StabilityResult
    ticks_left: int
    ticks_right: int


class Simulator:
    """Single-robot world stepper.

    Owns the ground-truth pose, per-wheel shaft angles (from which hall
    ticks are quantized), the lidar RNG, and the stability flags. Stepping
    is deterministic for a fixed (seed, command trace, dt).
    """

    def __init__(self, params: RobotParams | None = None,
                 world: WorldMap | None = None,
                 stability: StabilityConfig | None = None,
                 lidar: LidarSpec | None = None,
                 start_pose: Pose2D = Pose2D(),
                 seed: int = 0):
        self.params = params or RobotParams()
        self.world = world if world is not None else WorldMap(np.zeros((0, 4)))
        self.stability = stability or StabilityConfig()
        self.lidar = lidar or LidarSpec()
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.pose = start_pose
        self.twist = Twist2D()
        self.time = 0.0
        self.left_angle = 0.0  # wheel shaft angle, rad
        self.right_angle = 0.0
        self._rad_per_tick = 2.0 * math.pi / ticks_per_revolution(self.params)

    @property
    def ticks_left(self) -> int:
        return math.floor(self.left_angle / self._rad_per_tick)

    @property
    def ticks_right(self) -> int:
        return math.floor(self.right_angle / self._rad_per_tick)

    def step(self, wheels: WheelSpeeds, dt: float) -> SimState:
        """Advance the truth pose by an exact arc over dt at the given wheel speeds."""
        if not 0.0 < dt <= 0.1:
            raise ValueError("dt must be in (0, 0.1]")
        twist = forward_kinematics(wheels, self.params)
        ds = twist.v * dt
        dtheta = twist.omega * dt
        if abs(dtheta) < 1e-12:
            delta = Pose2D(ds, 0.0, dtheta)
        else:
            radius = ds / dtheta
            delta = Pose2D(radius * math.sin(dtheta), radius * (1.0 - math.cos(dtheta)), dtheta)
        self.pose = self.pose.compose(delta)
        self.left_angle += wheels.left * dt
        self.right_angle += wheels.right * dt
        self.time += dt
        self.twist = twist
        if abs(twist.omega) > 1e-9 and abs(twist.v) > 1e-9:
            result = check_stability(abs(twist.v), abs(twist.v / twist.omega),
                                     self.stability, self.params)
        else:
            result = StabilityResult(False, False, 0.0)
        return self.snapshot(result)

    def snapshot(self, stability: StabilityResult | None = None) -> SimState:
        return SimState(
            truth_pose=self.pose,
            twist=self.twist,
            time=self.time,
            rng_seed=self.seed,
            stability=stability if stability is not None else StabilityResult(False, False, 0.0),
            ticks_left=self.ticks_left,
            ticks_right=self.ticks_right,
        )

    def scan(self) -> LaserScan:
        return simulate_lidar(self.pose, self.world, self.lidar, self.rng, stamp=self.time)

    def imu(self, accel_forward: float = 0.0) -> ImuSample:
        """Body-frame IMU: lateral specific force v*omega, gravity on z."""
        return ImuSample(
            accel=(accel_forward, self.twist.v * self.twist.omega, GRAVITY),
            gyro=(0.0, 0.0, self.twist.omega),
            stamp=self.time,
        )


# -- circular-path stability runs ------------------------------------


STABILITY_CSV_HEADER = "t,x,y,theta,v_cmd,omega_cmd,ax,ay,gz,flag"


@dataclass
class CircleRun:
    """Trajectory and per-step record of one circular drive."""

    rows: list[tuple] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    @property
    def classification(self) -> str:
        """"unstable" if any step tipped or slid, else "stable"."""
        return "unstable" if any(f != "stable" for f in self.flags) else "stable"

    def trajectory(self) -> np.ndarray:
        """(N, 3) array of recorded (x, y, theta)."""
        return np.array([[r[1], r[2], r[3]] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(STABILITY_CSV_HEADER + "\n")
        for t, x, y, th, v, om, ax, ay, gz, flag in self.rows:
            out.write(f"{t:.6f},{x:.6f},{y:.6f},{th:.6f},{v:.6f},{om:.6f},"
                      f"{ax:.6f},{ay:.6f},{gz:.6f},{flag}\n")
        return out.getvalue()


def drive_circle(v: float, radius: float, revolutions: float,
                 params: RobotParams | None = None,
                 stability: StabilityConfig | None = None,
                 dt: float = 0.005,
                 seed: int = 0,
                 use_motor_lag: bool = True) -> CircleRun:
    """Command a constant (v, omega=v/R) twist until the heading has swept
    ``revolutions`` full turns, recording one CSV row per step.

    With ``use_motor_lag`` the wheel speeds follow the motor axes'
    first-order velocity loops, so the platform ramps up from rest and an
    unstable configuration shows a stable->unstable transition in the
    record instead of being flagged from the first sample. Instability
    never halts the run; the flag is simply recorded.
    """
    params = params or RobotParams()
    stability = stability or StabilityConfig()
    if radius <= 0:
        raise ValueError("radius must be positive")
    if v > params.v_max:
        raise ValueError("v exceeds v_max")
    sim = Simulator(params=params, stability=stability, seed=seed)
    run = CircleRun()
    if revolutions <= 0:
        return run
    cmd = Twist2D(v, v / radius)
    target_wheels = inverse_kinematics(cmd, params)
    axes = None
    if use_motor_lag:
        axes = (MotorAxis(params), MotorAxis(params))
        for axis in axes:
            calibrate(axis)
            axis.request_state(AxisMode.CLOSED_LOOP_VELOCITY)
            # wheel rad/s -> motor turns/s
        axes[0].set_input_vel(target_wheels.left / (2.0 * math.pi))
        axes[1].set_input_vel(target_wheels.right / (2.0 * math.pi))
    heading_swept = 0.0
    goal = 2.0 * math.pi * revolutions
    prev_v = 0.0
    while heading_swept < goal:
        if axes is not None:
            left = axes[0].step(dt).measured_vel * 2.0 * math.pi
            right = axes[1].step(dt).measured_vel * 2.0 * math.pi
            wheels = WheelSpeeds(left, right)
        else:
            wheels = target_wheels
        state = sim.step(wheels, dt)
        heading_swept += abs(state.twist.omega) * dt
        accel_fwd = (state.twist.v - prev_v) / dt
        prev_v = state.twist.v
        flag = state.stability.label
        run.flags.append(flag)
        run.rows.append((
            state.time, state.truth_pose.x, state.truth_pose.y, state.truth_pose.theta,
            cmd.v, cmd.omega, accel_fwd, state.twist.v * state.twist.omega,
            state.twist.omega, flag,
        ))
    return run
