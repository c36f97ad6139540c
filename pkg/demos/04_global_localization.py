"""Global Monte Carlo localization: 500 particles spread over the lab map
collapse onto the robot as it orbits and scans.

Run:  python demos/04_global_localization.py
"""

import math
from pathlib import Path

import numpy as np

from rovertwin import MclFilter, Pose2D, RobotParams, Simulator, Twist2D
from rovertwin.drivetrain import integrate_odometry, inverse_kinematics
from rovertwin.evaluation import GLOBAL_MCL_CONFIG, lab_room
from rovertwin.mapping import rasterize_world

OUT = Path(__file__).parent / "output"

world, _, _ = lab_room()
grid = rasterize_world(world, 0.05)
params = RobotParams()
start = Pose2D(-1.4, -0.8, 0.9)
sim = Simulator(params=params, world=world, start_pose=start, seed=12)
mcl = MclFilter(grid, GLOBAL_MCL_CONFIG, seed=99)
print(f"{len(mcl.particles)} particles drawn uniformly over free space")

wheels = inverse_kinematics(Twist2D(0.3, 1.0), params)
odom = Pose2D()
prev_odom = odom
prev_ticks = (0, 0)
snapshots = {}
for cycle in range(1, 31):
    for _ in range(30):  # 0.3 s of motion per localization cycle
        state = sim.step(wheels, 0.01)
        ticks = (state.ticks_left, state.ticks_right)
        odom = integrate_odometry(odom, ticks[0] - prev_ticks[0],
                                  ticks[1] - prev_ticks[1], params)
        prev_ticks = ticks
    delta = odom.relative_to(prev_odom)
    prev_odom = odom
    est, cov = mcl.update(delta, sim.scan())
    if cycle in (1, 3, 10, 30):
        snapshots[cycle] = mcl.particles.poses.copy()
    err = math.hypot(est.x - sim.pose.x, est.y - sim.pose.y)
    if cycle in (1, 2, 3, 5, 10, 20, 30):
        print(f"cycle {cycle:2d}: {len(mcl.particles):4d} particles, "
              f"estimate error {err*100:6.1f} cm, "
              f"position sigma {math.sqrt(cov[0,0]+cov[1,1])*100:5.1f} cm")

truth = sim.pose
print(f"final truth ({truth.x:.3f}, {truth.y:.3f}, {math.degrees(truth.theta):.1f} deg), "
      f"estimate ({est.x:.3f}, {est.y:.3f}, {math.degrees(est.theta):.1f} deg)")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping plots")
else:
    from rovertwin.mapfiles import quantize

    OUT.mkdir(exist_ok=True)
    extent = (grid.origin.x, grid.origin.x + grid.width * grid.resolution,
              grid.origin.y, grid.origin.y + grid.height * grid.resolution)
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    for ax, (cycle, cloud) in zip(axes.flat, sorted(snapshots.items())):
        ax.imshow(quantize(grid), cmap="gray", extent=extent, vmin=0, vmax=255)
        ax.scatter(cloud[:, 0], cloud[:, 1], s=2, c="tab:green", alpha=0.5)
        ax.plot(truth.x, truth.y, "r*", markersize=12)
        ax.set_title(f"after cycle {cycle}")
        ax.set_xticks([])
        ax.set_yticks([])
    fig.suptitle("particle cloud collapsing onto the true pose (red star)")
    fig.tight_layout()
    fig.savefig(OUT / "04_localization.png", dpi=120)
    print(f"wrote {OUT / '04_localization.png'}")
