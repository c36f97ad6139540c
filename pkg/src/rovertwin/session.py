"""One live simulation session: robot, motor axes, teleop arbitration, and
bus topics (/cmd_vel in; /odom, /scan, /imu/data_raw, /tf out), stepped at
a fixed rate on sim time.
"""

from __future__ import annotations

import math

from .bus import Bus, TopicMessage
from .core import OccupancyGrid, Pose2D, RobotParams, Twist2D
from .drivetrain import (
    AxisMode,
    MotorAxis,
    WheelSpeeds,
    calibrate,
    integrate_odometry,
    inverse_kinematics,
)
from .mcl import MclConfig, MclFilter
from .messages import (
    STANDARD_TOPICS,
    Odometry,
    PoseWithCovariance,
    StabilitySample,
    TfPair,
)
from .scenarios import PathScript
from .teleop import CommandArbiter
from .world import LidarSpec, Simulator, StabilityConfig, WorldMap


def make_bus(clock) -> Bus:
    bus = Bus(clock=clock)
    for name, schema in STANDARD_TOPICS:
        bus.register(name, schema)
    return bus


class SimSession:
    """Fixed-rate closed loop from /cmd_vel to published sensor topics.

    External /cmd_vel traffic (e.g. the browser joystick) enters the
    arbiter as the "joystick" source; in-process RC or gesture pipelines
    may submit to ``arbiter`` directly at their higher priorities. A stale
    arbiter yields a zero command (teleop watchdog).
    """

    def __init__(self, rate_hz: float = 100.0,
                 params: RobotParams | None = None,
                 world: WorldMap | None = None,
                 stability: StabilityConfig | None = None,
                 lidar: LidarSpec | None = None,
                 start_pose: Pose2D = Pose2D(),
                 seed: int = 0,
                 script: PathScript | None = None,
                 localization_map: OccupancyGrid | None = None,
                 mcl_config: MclConfig | None = None):
        if rate_hz < 10.0:
            raise ValueError("rate must be at least 10 Hz (dt <= 0.1 s)")
        self.dt = 1.0 / rate_hz
        self.params = params or RobotParams()
        self.sim = Simulator(params=self.params, world=world, stability=stability,
                             lidar=lidar, start_pose=start_pose, seed=seed)
        self.bus = make_bus(clock=lambda: self.sim.time)
        self.arbiter = CommandArbiter()
        self.script = script
        self.axes = (MotorAxis(self.params), MotorAxis(self.params))
        for axis in self.axes:
            calibrate(axis)
            axis.request_state(AxisMode.CLOSED_LOOP_VELOCITY)
        self.odom_pose = Pose2D()
        self.mcl: MclFilter | None = None
        if localization_map is not None:
            self.mcl = MclFilter(localization_map, mcl_config or MclConfig(),
                                 seed=seed + 1)
        self._mcl_odom_ref = Pose2D()
        self._prev_ticks = (0, 0)
        self._prev_v = 0.0
        self._scan_period = 1.0 / (lidar or LidarSpec()).rate_hz
        self._next_scan = 0.0
        self.bus.subscribe("/cmd_vel", self._on_cmd_vel)

    def _on_cmd_vel(self, msg: TopicMessage) -> None:
        self.arbiter.submit("joystick", msg.payload, msg.stamp)

    def step(self) -> None:
        """Advance one tick: pick a command, drive the axes, publish sensors."""
        now = self.sim.time
        if self.script is not None:
            v, omega = self.script.command(now)
            cmd = Twist2D(v, omega)
        else:
            cmd = self.arbiter.select(now)
        target = inverse_kinematics(cmd, self.params)
        two_pi = 2.0 * math.pi
        self.axes[0].set_input_vel(target.left / two_pi)
        self.axes[1].set_input_vel(target.right / two_pi)
        left = self.axes[0].step(self.dt).measured_vel * two_pi
        right = self.axes[1].step(self.dt).measured_vel * two_pi
        state = self.sim.step(WheelSpeeds(left, right), self.dt)
        ticks = (state.ticks_left, state.ticks_right)
        self.odom_pose = integrate_odometry(
            self.odom_pose, ticks[0] - self._prev_ticks[0],
            ticks[1] - self._prev_ticks[1], self.params)
        self._prev_ticks = ticks
        accel_fwd = (state.twist.v - self._prev_v) / self.dt
        self._prev_v = state.twist.v
        self.bus.publish("/odom", Odometry(self.odom_pose, state.twist), stamp=state.time)
        self.bus.publish("/tf", TfPair("odom", "base", self.odom_pose), stamp=state.time)
        self.bus.publish("/imu/data_raw", self.sim.imu(accel_fwd), stamp=state.time)
        self.bus.publish("/stability", StabilitySample(
            cmd.v, cmd.omega, accel_fwd, state.twist.v * state.twist.omega,
            state.twist.omega, state.stability.label), stamp=state.time)
        if state.time + 1e-12 >= self._next_scan:
            scan = self.sim.scan()
            self.bus.publish("/scan", scan, stamp=state.time)
            self._next_scan += self._scan_period
            if self.mcl is not None:
                delta = self.odom_pose.relative_to(self._mcl_odom_ref)
                self._mcl_odom_ref = self.odom_pose
                pose, cov = self.mcl.update(delta, scan)
                self.bus.publish(
                    "/amcl_pose",
                    PoseWithCovariance(pose, tuple(cov.reshape(-1))),
                    stamp=state.time)

    def run(self, duration: float) -> None:
        steps = round(duration / self.dt)
        for _ in range(steps):
            self.step()
