"""Lidar-only SLAM: drive a 20 m loop through the demo room, build the
occupancy grid by scan matching alone (no odometry), and save the map in
the conventional PGM + YAML pair.

Run:  python demos/03_lidar_mapping.py
"""

import math
from pathlib import Path

import numpy as np

from rovertwin import load_map, save_map
from rovertwin.evaluation import demo_room, map_accuracy, run_slam
from rovertwin.scenarios import PathScript, rectangle_loop_path

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

world, interior, obstacles = demo_room()
script = PathScript(rectangle_loop_path())
print(f"scripted loop: {script.duration:.0f} s of driving at 0.3 m/s")

result = run_slam(world, script, seed=3)
mapper = result.mapper
errors = [math.hypot(e.x - t.x, e.y - t.y)
          for e, t in zip(result.estimates, result.truths)]
print(f"{mapper.scan_count} scans matched, {mapper.fallback_count} fallbacks")
print(f"trajectory error: mean {np.mean(errors)*100:.1f} cm, "
      f"final drift {result.final_drift*100:.1f} cm")

accuracy = map_accuracy(mapper.grid, world, interior, obstacles)
print(f"map quality: {accuracy.occupied_cells} occupied cells, "
      f"precision {accuracy.occupied_precision:.3f}, "
      f"free-space recall {accuracy.free_recall:.3f}")

base = OUT / "demo_room_map"
save_map(mapper.grid, base)
reloaded = load_map(base)
print(f"saved {base}.pgm / {base}.yaml "
      f"({reloaded.width}x{reloaded.height} cells at {reloaded.resolution} m)")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping plots")
else:
    from rovertwin.mapfiles import quantize

    fig, ax = plt.subplots(figsize=(7, 5.5))
    extent = (mapper.grid.origin.x,
              mapper.grid.origin.x + mapper.grid.width * mapper.grid.resolution,
              mapper.grid.origin.y,
              mapper.grid.origin.y + mapper.grid.height * mapper.grid.resolution)
    ax.imshow(quantize(mapper.grid), cmap="gray", extent=extent, vmin=0, vmax=255)
    est = np.array([(p.x, p.y) for p in result.estimates])
    true = np.array([(p.x, p.y) for p in result.truths])
    ax.plot(true[:, 0], true[:, 1], color="tab:blue", lw=1, label="ground truth")
    ax.plot(est[:, 0], est[:, 1], color="tab:green", lw=1, ls="--", label="estimate")
    ax.set(xlim=(-5, 5), ylim=(-4, 4), title="scan-matched map and trajectory")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(OUT / "03_mapping.png", dpi=120)
    print(f"wrote {OUT / '03_mapping.png'}")
