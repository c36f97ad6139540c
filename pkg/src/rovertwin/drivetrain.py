"""Differential-drive kinematics, hall-tick odometry, and the motor-controller
state machine (velocity mode, calibration, error dump).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import Pose2D, RobotParams, Twist2D

# Canonical 6-state hall sequence for one electrical cycle, in forward order.
HALL_SEQUENCE = (1, 3, 2, 6, 4, 5)
_HALL_INDEX = {code: i for i, code in enumerate(HALL_SEQUENCE)}


class HallError(Exception):
    """Base class for hall-decoding failures."""


class InvalidHallState(HallError):
    """A 3-bit code outside the six legal states (0b000 or 0b111)."""


class IllegalTransition(HallError):
    """Two codes more than one sequence step apart (a sample was missed)."""


@dataclass(frozen=True)
class WheelSpeeds:
    """Angular wheel speeds in rad/s; ``clamped`` reports a silent twist clamp."""

    left: float
    right: float
    clamped: bool = False


def clamp_twist(cmd: Twist2D, params: RobotParams) -> tuple[Twist2D, bool]:
    """Clamp |v| to v_max (exactly, by copysign); omega passes through."""
    if abs(cmd.v) > params.v_max:
        return Twist2D(math.copysign(params.v_max, cmd.v), cmd.omega), True
    return cmd, False


def inverse_kinematics(cmd: Twist2D, params: RobotParams) -> WheelSpeeds:
    """Body twist -> wheel speeds, clamping |v| to v_max before conversion.

    Clamping at the twist level (not per wheel) keeps the turn command
    intact under saturation instead of distorting it wheel by wheel.
    """
    cmd, clamped = clamp_twist(cmd, params)
    half_track = 0.5 * params.track_width
    left = (cmd.v - cmd.omega * half_track) / params.wheel_radius
    right = (cmd.v + cmd.omega * half_track) / params.wheel_radius
    return WheelSpeeds(left, right, clamped)


def forward_kinematics(wheels: WheelSpeeds, params: RobotParams) -> Twist2D:
    """Wheel speeds -> body twist (exact algebraic inverse of the above)."""
    r = params.wheel_radius
    v = r * (wheels.left + wheels.right) / 2.0
    omega = r * (wheels.right - wheels.left) / params.track_width
    return Twist2D(v, omega)


def hall_decode(prev: int, nxt: int) -> int:
    """Tick delta (-1, 0, +1) between two consecutive 3-bit hall codes.

    Raises InvalidHallState for the forbidden codes 0b000/0b111 and
    IllegalTransition when the codes are two or three steps apart in the
    commutation sequence (which means a sample was dropped).
    """
    for code in (prev, nxt):
        if code not in _HALL_INDEX:
            raise InvalidHallState(f"hall code {code:#05b} is not a valid state")
    step = (_HALL_INDEX[nxt] - _HALL_INDEX[prev]) % 6
    if step == 0:
        return 0
    if step == 1:
        return 1
    if step == 5:
        return -1
    raise IllegalTransition(f"hall codes {prev:#05b} -> {nxt:#05b} skip {step - 1} states")


def ticks_per_revolution(params: RobotParams) -> int:
    """Hall ticks per mechanical wheel revolution: 6 states per pole pair."""
    if params.pole_pairs < 1:
        raise ValueError("pole_pairs must be >= 1")
    return 6 * params.pole_pairs


def integrate_odometry(
    pose: Pose2D, dticks_left: int, dticks_right: int, params: RobotParams
) -> Pose2D:
    """Advance a pose by quantized hall-tick increments of both wheels.

    Uses the exact constant-curvature (arc) update; the straight-line
    branch guards the |dtheta| -> 0 singularity.
    """
    arc_per_tick = 2.0 * math.pi * params.wheel_radius / ticks_per_revolution(params)
    dl = dticks_left * arc_per_tick
    dr = dticks_right * arc_per_tick
    ds = 0.5 * (dl + dr)
    dtheta = (dr - dl) / params.track_width
    if abs(dtheta) < 1e-9:
        dx, dy = ds, 0.0
    else:
        radius = ds / dtheta
        dx = radius * math.sin(dtheta)
        dy = radius * (1.0 - math.cos(dtheta))
    return pose.compose(Pose2D(dx, dy, dtheta))


class AxisMode(enum.Enum):
    IDLE = "idle"
    CALIBRATING = "calibrating"
    CLOSED_LOOP_VELOCITY = "closed_loop_velocity"


class AxisError(enum.Enum):
    NOT_CALIBRATED = "not_calibrated"
    INVALID_REQUEST = "invalid_request"
    FAULT_INJECTED = "fault_injected"


CALIBRATION_DURATION = 2.0  # s of simulated calibration sweep
VELOCITY_TIME_CONSTANT = 0.05  # s, first-order lag of the velocity loop


@dataclass
class MotorAxisState:
    """Snapshot of one motor axis (velocity units are turns/s)."""

    mode: AxisMode = AxisMode.IDLE
    input_vel: float = 0.0
    measured_vel: float = 0.0
    hall_state: int = HALL_SEQUENCE[0]
    tick_count: int = 0
    errors: tuple[AxisError, ...] = ()
    calibrated: bool = False


class MotorAxis:
    """One ODrive-style axis: a mode state machine around a first-order
    velocity loop, with hall feedback derived from the accumulated shaft
    angle.

    Calibration is modeled as a fixed-duration sweep that always succeeds
    unless a fault is injected beforehand. Velocity commands are accepted
    only in closed-loop mode.
    """

    def __init__(self, params: RobotParams, tau: float = VELOCITY_TIME_CONSTANT):
        self.params = params
        self.tau = tau
        self.mode = AxisMode.IDLE
        self.input_vel = 0.0
        self.measured_vel = 0.0
        self.shaft_angle = 0.0  # revolutions, continuous
        self.calibrated = False
        self._calibration_left = 0.0
        self._errors: list[AxisError] = []
        self._fault_pending = False
        self._ticks_per_rev = ticks_per_revolution(params)

    # -- state machine ------------------------------------------------

    def request_state(self, mode: AxisMode) -> MotorAxisState:
        if mode == AxisMode.CALIBRATING:
            if self.mode != AxisMode.IDLE:
                self._record(AxisError.INVALID_REQUEST)
            else:
                self.mode = AxisMode.CALIBRATING
                self._calibration_left = CALIBRATION_DURATION
        elif mode == AxisMode.CLOSED_LOOP_VELOCITY:
            if not self.calibrated:
                self._record(AxisError.NOT_CALIBRATED)
                self.mode = AxisMode.IDLE
            elif self.mode == AxisMode.CALIBRATING:
                self._record(AxisError.INVALID_REQUEST)
            else:
                self.mode = AxisMode.CLOSED_LOOP_VELOCITY
        elif mode == AxisMode.IDLE:
            self.mode = AxisMode.IDLE
            self.input_vel = 0.0
        return self.snapshot()

    def set_input_vel(self, turns_per_s: float) -> None:
        """Velocity setpoint; ignored (with an error flag) outside closed loop."""
        if self.mode != AxisMode.CLOSED_LOOP_VELOCITY:
            self._record(AxisError.INVALID_REQUEST)
            return
        self.input_vel = float(turns_per_s)

    def inject_fault(self) -> None:
        """Force the next calibration to fail (hardware fault stand-in)."""
        self._fault_pending = True

    def step(self, dt: float) -> MotorAxisState:
        """Advance the velocity loop and shaft angle by dt seconds."""
        if self.mode == AxisMode.CALIBRATING:
            self._calibration_left -= dt
            if self._calibration_left <= 0.0:
                if self._fault_pending:
                    self._record(AxisError.FAULT_INJECTED)
                    self._fault_pending = False
                else:
                    self.calibrated = True
                self.mode = AxisMode.IDLE
        target = self.input_vel if self.mode == AxisMode.CLOSED_LOOP_VELOCITY else 0.0
        self.measured_vel += (target - self.measured_vel) * (1.0 - math.exp(-dt / self.tau))
        self.shaft_angle += self.measured_vel * dt
        return self.snapshot()

    # -- feedback -----------------------------------------------------

    @property
    def tick_count(self) -> int:
        return math.floor(self.shaft_angle * self._ticks_per_rev)

    @property
    def hall_state(self) -> int:
        return HALL_SEQUENCE[self.tick_count % 6]

    def dump_errors(self, clear: bool = False) -> list[AxisError]:
        """Current error flags in the order they were raised; optionally clear."""
        out = list(self._errors)
        if clear:
            self._errors.clear()
        return out

    def snapshot(self) -> MotorAxisState:
        return MotorAxisState(
            mode=self.mode,
            input_vel=self.input_vel,
            measured_vel=self.measured_vel,
            hall_state=self.hall_state,
            tick_count=self.tick_count,
            errors=tuple(self._errors),
            calibrated=self.calibrated,
        )

    def _record(self, err: AxisError) -> None:
        if err not in self._errors:
            self._errors.append(err)


def calibrate(axis: MotorAxis, dt: float = 0.01) -> MotorAxisState:
    """Run a full calibration sweep to completion (helper for tests/sessions)."""
    axis.request_state(AxisMode.CALIBRATING)
    steps = math.ceil(CALIBRATION_DURATION / dt) + 1
    for _ in range(steps):
        axis.step(dt)
        if axis.mode == AxisMode.IDLE:
            break
    return axis.snapshot()
