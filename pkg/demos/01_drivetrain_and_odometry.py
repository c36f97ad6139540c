"""Drivetrain walkthrough: wheel kinematics, hall ticks, the motor velocity
loop, and tick-quantized odometry driving a circle.

Run:  python demos/01_drivetrain_and_odometry.py
Writes plots to demos/output/ when matplotlib is installed.
"""

import math
from pathlib import Path

import numpy as np

from rovertwin import (
    AxisMode,
    MotorAxis,
    Pose2D,
    RobotParams,
    Simulator,
    Twist2D,
    WheelSpeeds,
    forward_kinematics,
    integrate_odometry,
    inverse_kinematics,
    ticks_per_revolution,
)
from rovertwin.drivetrain import calibrate

OUT = Path(__file__).parent / "output"

params = RobotParams()
print(f"wheel radius {params.wheel_radius} m, track {params.track_width} m, "
      f"{ticks_per_revolution(params)} hall ticks per wheel revolution")

# A twist maps to wheel speeds and back without loss.
cmd = Twist2D(v=0.825, omega=1.2)
wheels = inverse_kinematics(cmd, params)
print(f"twist {cmd} -> wheels L={wheels.left:.3f} R={wheels.right:.3f} rad/s "
      f"-> back {forward_kinematics(wheels, params)}")

# The motor axis refuses closed-loop control until calibrated.
axis = MotorAxis(params)
axis.request_state(AxisMode.CLOSED_LOOP_VELOCITY)
print("before calibration:", axis.dump_errors(clear=True))
calibrate(axis)
axis.request_state(AxisMode.CLOSED_LOOP_VELOCITY)
axis.set_input_vel(1.0)
trace = []
for _ in range(400):
    trace.append(axis.step(0.001).measured_vel)
print(f"spin-up to 1 turn/s: measured {trace[-1]:.4f} after 0.4 s "
      f"(50 ms velocity-loop time constant)")

# Drive a circle; integrate odometry from quantized hall ticks only.
v, omega = 1.0, 0.5
sim = Simulator(params=params)
target = inverse_kinematics(Twist2D(v, omega), params)
odom = Pose2D()
prev = (0, 0)
truth_xy, odom_xy = [], []
for _ in range(round(2 * math.pi / omega / 0.001)):
    state = sim.step(target, 0.001)
    ticks = (state.ticks_left, state.ticks_right)
    odom = integrate_odometry(odom, ticks[0] - prev[0], ticks[1] - prev[1], params)
    prev = ticks
    truth_xy.append((state.truth_pose.x, state.truth_pose.y))
    odom_xy.append((odom.x, odom.y))
truth_xy = np.array(truth_xy)
odom_xy = np.array(odom_xy)
err = np.hypot(*(truth_xy - odom_xy).T)
print(f"one full circle at v={v}, omega={omega}: radius {v/omega} m, "
      f"max odometry error {err.max()*1000:.2f} mm from tick quantization")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping plots")
else:
    OUT.mkdir(exist_ok=True)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(np.arange(len(trace)) * 0.001, trace)
    ax1.axhline(1.0, color="gray", ls="--")
    ax1.set(title="velocity loop spin-up", xlabel="t [s]", ylabel="turns/s")
    ax2.plot(truth_xy[:, 0], truth_xy[:, 1], label="ground truth")
    ax2.plot(odom_xy[:, 0], odom_xy[:, 1], "--", label="tick odometry")
    ax2.set(title="circle from hall ticks", xlabel="x [m]", ylabel="y [m]")
    ax2.axis("equal")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(OUT / "01_drivetrain.png", dpi=120)
    print(f"wrote {OUT / '01_drivetrain.png'}")
