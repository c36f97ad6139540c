"""Shared planar-geometry, robot-parameter, and sensor-sample types.

Conventions used across the package:

* world frame: x right, y up, heading theta measured counter-clockwise
  from +x and always normalized to (-pi, pi]
* body frame: x forward, y left, z up; positive yaw rate is a
  counter-clockwise turn
* lidar ranges: meters, with "no return" encoded as +inf (never clamped
  to the maximum range, so mapping can tell the two apart)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GRAVITY = 9.81  # m/s^2

TWO_PI = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]; exact identity for in-range values."""
    if -math.pi < theta <= math.pi:
        return theta
    wrapped = math.fmod(theta + math.pi, TWO_PI)
    if wrapped <= 0.0:
        wrapped += TWO_PI
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose2D:
    """Planar pose (x, y in meters, theta in radians, normalized)."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def compose(self, delta: "Pose2D") -> "Pose2D":
        """Apply ``delta`` expressed in this pose's frame (SE(2) composition)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.x + c * delta.x - s * delta.y,
            self.y + s * delta.x + c * delta.y,
            self.theta + delta.theta,
        )

    def inverse(self) -> "Pose2D":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)

    def relative_to(self, other: "Pose2D") -> "Pose2D":
        """Express this pose in ``other``'s frame: other^-1 (+) self."""
        return other.inverse().compose(self)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)


def compose_pose(a: Pose2D, delta: Pose2D) -> Pose2D:
    """Free-function alias of :meth:`Pose2D.compose`."""
    return a.compose(delta)


@dataclass(frozen=True)
class Twist2D:
    """Commanded body velocity: forward speed v (m/s) and yaw rate omega (rad/s)."""

    v: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True)
class RobotParams:
    """Geometry and limits of the drive platform (single source of truth).

    Defaults describe a 17.1 kg differential-drive base with 0.165 m
    hoverboard wheels on a 0.29 m track, driven by 15-pole-pair BLDC
    motors with hall feedback.
    """

    wheel_radius: float = 0.0825
    track_width: float = 0.29
    v_max: float = 3.33
    v_stable_max: float = 2.5
    pole_pairs: int = 15
    mass_robot: float = 17.1
    payload_max: float = 90.0
    length: float = 0.46
    width: float = 0.34
    height: float = 0.43
    cog_height: float = 0.20

    def __post_init__(self):
        numeric = (
            self.wheel_radius, self.track_width, self.v_max, self.v_stable_max,
            self.pole_pairs, self.mass_robot, self.payload_max,
            self.length, self.width, self.height, self.cog_height,
        )
        if any(not (v > 0) for v in numeric):
            raise ValueError("all robot parameters must be strictly positive")
        if not self.wheel_radius < self.track_width:
            raise ValueError("wheel_radius must be smaller than track_width")
        if not self.v_stable_max <= self.v_max:
            raise ValueError("v_stable_max cannot exceed v_max")


@dataclass(frozen=True)
class LaserScan:
    """One full lidar sweep.

    ``ranges[i]`` is the distance along bearing
    ``angle_min + i * angle_increment`` (robot frame); +inf means no
    return within ``range_max``.
    """

    angle_min: float
    angle_max: float
    angle_increment: float
    ranges: tuple[float, ...]
    range_min: float = 0.15
    range_max: float = 16.0
    stamp: float = 0.0

    def __post_init__(self):
        expected = round((self.angle_max - self.angle_min) / self.angle_increment) + 1
        if len(self.ranges) != expected:
            raise ValueError(
                f"ranges has {len(self.ranges)} entries, expected {expected} "
                f"from the angular metadata"
            )
        for r in self.ranges:
            if math.isfinite(r) and not (self.range_min <= r <= self.range_max):
                raise ValueError(f"finite range {r} outside [{self.range_min}, {self.range_max}]")

    @property
    def angles(self) -> np.ndarray:
        n = len(self.ranges)
        return self.angle_min + self.angle_increment * np.arange(n)

    def points(self) -> np.ndarray:
        """Finite returns as (N, 2) body-frame cartesian points."""
        r = np.asarray(self.ranges, dtype=float)
        a = self.angles
        keep = np.isfinite(r)
        return np.column_stack((r[keep] * np.cos(a[keep]), r[keep] * np.sin(a[keep])))


@dataclass(frozen=True)
class ImuSample:
    """Raw 9-axis IMU reading: specific force (m/s^2) and body rates (rad/s)."""

    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]
    stamp: float = 0.0


LOG_ODDS_MIN = -4.0
LOG_ODDS_MAX = 4.0


@dataclass
class OccupancyGrid:
    """Log-odds occupancy grid.

    ``cells[iy, ix]`` holds the log-odds of cell (ix, iy) being occupied,
    clamped to [l_min, l_max]. ``origin`` is the world pose of the outer
    corner of cell (0, 0); the grid axes are assumed world-aligned
    (origin.theta is carried through file metadata but does not rotate
    the cell lattice).
    """

    resolution: float
    width: int
    height: int
    origin: Pose2D = field(default_factory=Pose2D)
    cells: np.ndarray | None = None
    l_min: float = LOG_ODDS_MIN
    l_max: float = LOG_ODDS_MAX

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must be at least 1x1")
        if self.cells is None:
            self.cells = np.zeros((self.height, self.width), dtype=float)
        else:
            self.cells = np.asarray(self.cells, dtype=float)
            if self.cells.shape != (self.height, self.width):
                raise ValueError("cells shape does not match width/height")

    def clamp(self) -> None:
        np.clip(self.cells, self.l_min, self.l_max, out=self.cells)

    def probabilities(self) -> np.ndarray:
        """Occupancy probabilities p = 1 - 1/(1 + exp(l)), elementwise."""
        return 1.0 - 1.0 / (1.0 + np.exp(self.cells))

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(
            self.resolution, self.width, self.height, self.origin,
            self.cells.copy(), self.l_min, self.l_max,
        )


def world_to_grid(grid: OccupancyGrid, x: float, y: float) -> tuple[int, int] | None:
    """Cell index containing world point (x, y), or None if out of bounds.

    Out-of-bounds points are reported distinctly rather than clamped, so
    callers cannot silently smear updates onto border cells.
    """
    ix = math.floor((x - grid.origin.x) / grid.resolution)
    iy = math.floor((y - grid.origin.y) / grid.resolution)
    if 0 <= ix < grid.width and 0 <= iy < grid.height:
        return ix, iy
    return None


def grid_to_world(grid: OccupancyGrid, ix: int, iy: int) -> tuple[float, float]:
    """World coordinates of the center of cell (ix, iy)."""
    return (
        grid.origin.x + (ix + 0.5) * grid.resolution,
        grid.origin.y + (iy + 0.5) * grid.resolution,
    )
