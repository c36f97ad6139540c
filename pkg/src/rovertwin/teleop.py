"""Human control pipelines: IMU gesture control with complementary-filter
attitude fusion, RC pulse-width decoding, and the priority arbiter that
merges all command sources behind a freshness watchdog.

Sign conventions: positive pitch = hand tilted forward -> drive forward;
positive roll = hand tilted right -> clockwise turn, which is negative yaw
rate under the counter-clockwise-positive convention.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

from .core import GRAVITY, ImuSample, Twist2D, normalize_angle


@dataclass(frozen=True)
class Attitude:
    """Roll/pitch estimate in radians, each wrapped to (-pi, pi]."""

    roll: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "roll", normalize_angle(self.roll))
        object.__setattr__(self, "pitch", normalize_angle(self.pitch))


def complementary_filter(att: Attitude, imu: ImuSample, dt: float,
                         alpha: float = 0.98) -> tuple[Attitude, bool]:
    """One fusion step: gyro integration blended with accelerometer angles.

    Per axis: alpha * (angle + gyro_rate * dt) + (1 - alpha) * accel_angle.
    When the specific-force magnitude drops below half gravity the
    accelerometer angles are meaningless, so that step integrates the gyro
    only and the returned flag reports the degraded update.
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError("dt must be in (0, 0.1]")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    ax, ay, az = imu.accel
    gx, gy, _ = imu.gyro
    roll_gyro = att.roll + gx * dt
    pitch_gyro = att.pitch + gy * dt
    accel_norm = math.sqrt(ax * ax + ay * ay + az * az)
    degenerate = accel_norm < 0.5 * GRAVITY
    if degenerate or alpha == 1.0:
        return Attitude(roll_gyro, pitch_gyro), degenerate
    roll_acc = math.atan2(ay, az)
    pitch_acc = math.atan2(-ax, math.sqrt(ay * ay + az * az))
    return Attitude(
        alpha * roll_gyro + (1.0 - alpha) * roll_acc,
        alpha * pitch_gyro + (1.0 - alpha) * pitch_acc,
    ), False


@dataclass(frozen=True)
class GestureConfig:
    deadzone_deg: float = 5.0
    full_scale_deg: float = 45.0
    v_max_cmd: float = 1.0
    omega_max_cmd: float = 1.0
    guard_deg: float = 80.0
    filter_alpha: float = 0.98

    def __post_init__(self):
        if not 0.0 <= self.deadzone_deg < self.full_scale_deg < self.guard_deg <= 90.0:
            raise ValueError("need 0 <= deadzone < full_scale < guard <= 90 degrees")


def _ramp(angle_deg: float, cfg: GestureConfig) -> float:
    """Odd linear ramp: 0 inside the deadzone, saturating at full scale."""
    magnitude = abs(angle_deg)
    if magnitude <= cfg.deadzone_deg:
        return 0.0
    span = cfg.full_scale_deg - cfg.deadzone_deg
    return math.copysign(min(1.0, (magnitude - cfg.deadzone_deg) / span), angle_deg)


def gesture_to_twist(att: Attitude, cfg: GestureConfig = GestureConfig()) -> Twist2D:
    """Map a hand attitude to a velocity command.

    Tilting past the guard angle on either axis is treated as an unsafe /
    near-singular posture and holds the command at zero.
    """
    roll_deg = math.degrees(att.roll)
    pitch_deg = math.degrees(att.pitch)
    if abs(roll_deg) >= cfg.guard_deg or abs(pitch_deg) >= cfg.guard_deg:
        return Twist2D(0.0, 0.0)
    v = cfg.v_max_cmd * _ramp(pitch_deg, cfg)
    omega = -cfg.omega_max_cmd * _ramp(roll_deg, cfg)
    return Twist2D(v, omega)


# -- RC decoding --------------------------------------------------------


@dataclass(frozen=True)
class RcFrame:
    """Raw receiver pulse widths, microseconds per channel."""

    ch1: float
    ch2: float
    ch3: float


@dataclass(frozen=True)
class RcCalibration:
    """Channel assignment and pulse mapping for the RC pipeline.

    The transmitter's channel order is not fixed by the hardware docs, so
    the steering/throttle/enable assignment is configuration, not code.
    """

    steering_channel: int = 1
    throttle_channel: int = 2
    enable_channel: int = 3
    pulse_min: float = 1000.0
    pulse_neutral: float = 1500.0
    pulse_max: float = 2000.0
    deadband_us: float = 20.0
    enable_threshold: float = 1700.0
    plausible_min: float = 800.0
    plausible_max: float = 2200.0
    v_max_cmd: float = 1.0
    omega_max_cmd: float = 1.0
    steering_sign: float = -1.0  # stick right -> clockwise (negative omega)


@dataclass(frozen=True)
class RcCommand:
    """Decoded RC frame: a twist plus enable/diagnostic state."""

    twist: Twist2D
    enabled: bool
    status: str  # "ok", "disabled", "invalid_frame"
    detail: str = ""


def _channel(frame: RcFrame, index: int) -> float:
    return (frame.ch1, frame.ch2, frame.ch3)[index - 1]


def rc_decode(frame: RcFrame, cal: RcCalibration = RcCalibration()) -> RcCommand:
    """Pulse widths -> twist, honoring the enable (kill-switch) channel.

    Any implausible pulse invalidates the whole frame and disables output;
    a low enable channel disables output without being an error.
    """
    pulses = (frame.ch1, frame.ch2, frame.ch3)
    for i, pulse in enumerate(pulses, start=1):
        if not (cal.plausible_min <= pulse <= cal.plausible_max):
            return RcCommand(Twist2D(0.0, 0.0), False, "invalid_frame",
                             f"ch{i} pulse {pulse:.0f}us outside plausible range")
    if _channel(frame, cal.enable_channel) < cal.enable_threshold:
        return RcCommand(Twist2D(0.0, 0.0), False, "disabled", "enable channel low")
    half_span = (cal.pulse_max - cal.pulse_min) / 2.0

    def norm(pulse: float) -> float:
        offset = pulse - cal.pulse_neutral
        if abs(offset) <= cal.deadband_us:
            return 0.0
        return max(-1.0, min(1.0, offset / half_span))

    v = cal.v_max_cmd * norm(_channel(frame, cal.throttle_channel))
    omega = cal.steering_sign * cal.omega_max_cmd * norm(_channel(frame, cal.steering_channel))
    return RcCommand(Twist2D(v, omega), True, "ok")


# -- arbitration --------------------------------------------------------


DEFAULT_PRIORITIES = {"rc": 0, "gesture": 1, "joystick": 2}
WATCHDOG_TIMEOUT = 0.5  # s


@dataclass
class _Slot:
    twist: Twist2D
    stamp: float


class CommandArbiter:
    """Merges prioritized teleop sources; stale sources age out to a stop.

    submit() may be called from any pipeline thread; each source owns one
    slot that is atomically replaced. select() picks the freshest highest-
    priority command or the watchdog stop.
    """

    def __init__(self, priorities: dict[str, int] | None = None,
                 timeout: float = WATCHDOG_TIMEOUT):
        self.priorities = dict(priorities if priorities is not None else DEFAULT_PRIORITIES)
        self.timeout = timeout
        self._slots: dict[str, _Slot] = {}
        self._lock = threading.Lock()

    def submit(self, source: str, twist: Twist2D, stamp: float) -> None:
        if source not in self.priorities:
            raise KeyError(f"unknown command source '{source}'")
        with self._lock:
            self._slots[source] = _Slot(twist, stamp)

    def select(self, now: float) -> Twist2D:
        """Freshest highest-priority command, or (0, 0) if everything is stale."""
        with self._lock:
            slots = dict(self._slots)
        best: tuple[int, Twist2D] | None = None
        for source, slot in slots.items():
            if now - slot.stamp >= self.timeout:
                continue
            rank = self.priorities[source]
            if best is None or rank < best[0]:
                best = (rank, slot.twist)
        return best[1] if best is not None else Twist2D(0.0, 0.0)
