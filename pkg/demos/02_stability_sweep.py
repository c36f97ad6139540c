"""Quasi-static stability: classify the 12 benchmark (speed, payload, pCOG,
radius) configurations and look inside the one that tips.

Run:  python demos/02_stability_sweep.py
"""

from pathlib import Path

import numpy as np

from rovertwin import RobotParams, StabilityConfig, check_stability, drive_circle
from rovertwin.core import GRAVITY
from rovertwin.scenarios import DEFAULT_STABILITY_ROWS

OUT = Path(__file__).parent / "output"

params = RobotParams()
print(f"{'vel':>5} {'payload':>8} {'pcog':>6} {'radius':>7}  lateral-accel  verdict")
for row in DEFAULT_STABILITY_ROWS:
    stab = StabilityConfig(payload_mass=row.payload, payload_pos=row.pcog)
    result = check_stability(row.vel, row.radius, stab, params)
    print(f"{row.vel:5.1f} {row.payload:8.1f} {row.pcog:6.2f} {row.radius:7.1f}"
          f"  {result.lateral_accel:9.2f}      {result.label}")

# The tipping threshold for the bare platform sits between the stable rows
# (max 4.17 m/s^2) and the hot lap (12.5 m/s^2).
bare = StabilityConfig()
threshold = GRAVITY * (params.track_width / 2) / bare.effective_cog_height(params)
print(f"\nbare-platform tipping threshold: {threshold:.2f} m/s^2; "
      f"sliding threshold mu*g = {bare.friction_mu * GRAVITY:.2f} m/s^2")

# Time-domain view of the unstable configuration: the motors ramp the
# platform up from rest, so the record shows a stable -> unstable transition.
run = drive_circle(2.5, 0.5, revolutions=1.0)
flags = run.flags
transition = next(i for i, f in enumerate(flags) if f != "stable")
print(f"v=2.5 R=0.5 run: {len(flags)} steps, flag flips to '{flags[transition]}' "
      f"at t={run.rows[transition][0]*1000:.0f} ms; classification: {run.classification}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping plots")
else:
    OUT.mkdir(exist_ok=True)
    t = np.array([r[0] for r in run.rows])
    lateral = np.array([r[7] for r in run.rows])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(t, lateral, label="lateral accel v*omega")
    ax.axhline(threshold, color="tab:red", ls="--", label="tipping threshold")
    ax.axhline(GRAVITY, color="tab:orange", ls=":", label="sliding threshold")
    ax.axvspan(t[transition], t[-1], color="red", alpha=0.1, label="unstable interval")
    ax.set(xlabel="t [s]", ylabel="m/s^2", title="v=2.5 m/s on a 0.5 m circle")
    ax.legend()
    fig.tight_layout()
    fig.savefig(OUT / "02_stability.png", dpi=120)
    print(f"wrote {OUT / '02_stability.png'}")
