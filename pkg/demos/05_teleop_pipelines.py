"""The three human control paths: IMU gestures through the complementary
filter, RC pulse decoding, and the priority arbiter with its watchdog.

Run:  python demos/05_teleop_pipelines.py
"""

import math
from pathlib import Path

import numpy as np

from rovertwin import (
    Attitude,
    CommandArbiter,
    GestureConfig,
    RcFrame,
    Twist2D,
    complementary_filter,
    gesture_to_twist,
    rc_decode,
)
from rovertwin.core import GRAVITY, ImuSample

OUT = Path(__file__).parent / "output"

# --- gesture: tilt the hand, watch the filter settle and the twist ramp ---
cfg = GestureConfig()
att = Attitude()
tilt = math.radians(20)
accel = (-GRAVITY * math.sin(tilt), 0.0, GRAVITY * math.cos(tilt))
history = []
for k in range(300):
    att, _ = complementary_filter(att, ImuSample(accel, (0, 0, 0)), 0.01,
                                  cfg.filter_alpha)
    history.append(att.pitch)
twist = gesture_to_twist(att, cfg)
print(f"hand tilted forward 20 deg: filter settles at "
      f"{math.degrees(att.pitch):.2f} deg -> command {twist}")
print(f"tilt right 30 deg -> {gesture_to_twist(Attitude(math.radians(30), 0), cfg)} "
      "(clockwise turn)")
print(f"tilt to 85 deg -> {gesture_to_twist(Attitude(0, math.radians(85)), cfg)} "
      "(guard hold near the 90-degree singularity)")

# --- RC: pulses to twists, kill switch, implausible frames ---
print("\nRC decoding:")
for label, frame in [
    ("neutral sticks, armed", RcFrame(1500, 1500, 2000)),
    ("full throttle", RcFrame(1500, 2000, 2000)),
    ("kill switch", RcFrame(1500, 2000, 1000)),
    ("glitched pulse", RcFrame(1500, 400, 2000)),
]:
    out = rc_decode(frame)
    print(f"  {label:24s} -> {out.status:13s} {out.twist}")

# --- arbitration: RC outranks gesture outranks joystick; stale ages out ---
print("\narbitration timeline:")
arb = CommandArbiter()
arb.submit("joystick", Twist2D(0.3, 0.0), stamp=0.00)
arb.submit("gesture", Twist2D(0.6, 0.2), stamp=0.10)
for now, note in [(0.2, "joystick + gesture fresh"),
                  (0.3, "RC grabs control"),
                  (0.7, "gesture expired, RC holds"),
                  (1.5, "everything stale -> watchdog stop")]:
    if note == "RC grabs control":
        arb.submit("rc", Twist2D(-0.4, 0.0), stamp=0.30)
    print(f"  t={now:.1f}s ({note:34s}) -> {arb.select(now)}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping plots")
else:
    OUT.mkdir(exist_ok=True)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(np.arange(len(history)) * 0.01, np.degrees(history))
    ax1.axhline(20, color="gray", ls="--")
    ax1.set(title="complementary filter settles on a 20 deg tilt",
            xlabel="t [s]", ylabel="pitch [deg]")
    tilts = np.linspace(-90, 90, 721)
    vs = [gesture_to_twist(Attitude(0, math.radians(t)), cfg).v for t in tilts]
    ax2.plot(tilts, vs)
    ax2.set(title="gesture ramp: deadzone, saturation, guard",
            xlabel="pitch [deg]", ylabel="v [m/s]")
    fig.tight_layout()
    fig.savefig(OUT / "05_teleop.png", dpi=120)
    print(f"wrote {OUT / '05_teleop.png'}")
