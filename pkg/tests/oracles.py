"""Shared independent oracles used by the unit and acceptance suites."""

import math

import numpy as np

from rovertwin.core import ImuSample, LaserScan, Pose2D, Twist2D
from rovertwin.bus import TopicMessage
from rovertwin.messages import Odometry, PoseWithCovariance, StabilitySample, TfPair


def fit_circle(xy: np.ndarray) -> tuple[float, float, float]:
    """Least-squares (Kasa) circle fit: returns (cx, cy, radius)."""
    a = np.column_stack((xy[:, 0], xy[:, 1], np.ones(len(xy))))
    b = xy[:, 0] ** 2 + xy[:, 1] ** 2
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy = sol[0] / 2.0, sol[1] / 2.0
    return cx, cy, math.sqrt(sol[2] + cx * cx + cy * cy)


def skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])


def exp_so3(w: np.ndarray, dt: float) -> np.ndarray:
    """Exact rotation for constant body rates w over dt (Rodrigues)."""
    angle = np.linalg.norm(w) * dt
    if angle < 1e-12:
        return np.eye(3) + skew(w * dt)
    axis = w / np.linalg.norm(w)
    k = skew(axis)
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def random_bus_message(rng: np.random.Generator) -> TopicMessage:
    """One schema-valid message on a random framable standard topic."""
    kind = rng.integers(0, 8)
    stamp = float(rng.uniform(0, 1e6))
    if kind == 0:
        payload = ("/cmd_vel", Twist2D(float(rng.normal()), float(rng.normal())))
    elif kind == 1:
        n = int(rng.integers(1, 30))
        inc = 0.1
        ranges = tuple(
            math.inf if rng.random() < 0.2 else float(rng.uniform(0.15, 16.0))
            for _ in range(n))
        payload = ("/scan", LaserScan(0.0, (n - 1) * inc, inc, ranges))
    elif kind == 2:
        payload = ("/imu/data_raw", ImuSample(
            tuple(float(v) for v in rng.normal(size=3)),
            tuple(float(v) for v in rng.normal(size=3))))
    elif kind == 3:
        payload = ("/tf", TfPair("odom", "base",
                                 Pose2D(float(rng.normal()), float(rng.normal()),
                                        float(rng.uniform(-3, 3)))))
    elif kind == 4:
        payload = ("/amcl_pose", PoseWithCovariance(
            Pose2D(1.0, -2.0, 0.5),
            tuple(float(v) for v in rng.normal(size=9))))
    elif kind == 5:
        payload = ("/odom", Odometry(
            Pose2D(float(rng.normal()), float(rng.normal()), float(rng.uniform(-3, 3))),
            Twist2D(float(rng.normal()), float(rng.normal()))))
    elif kind == 6:
        payload = ("/stability", StabilitySample(
            float(rng.normal()), float(rng.normal()), float(rng.normal()),
            float(rng.normal()), float(rng.normal()),
            ["stable", "tipping", "sliding", "tipping+sliding"][rng.integers(0, 4)]))
    else:
        payload = ("/cmd_vel", Twist2D(0.0, float(rng.normal())))
    return TopicMessage(payload[0], stamp, payload[1])


def fd_gradient_check(grid, points, rng, samples: int = 100,
                      h_xy: float = 1e-5, h_theta: float = 1e-6,
                      rel_tol: float = 1e-3) -> int:
    """Central-difference check of the scan-match gradient.

    The bilinear cost surface is piecewise smooth, so candidate poses are
    drawn with every endpoint clear of cell boundaries by more than the
    stencil width. Returns the number of poses checked (asserts inside).
    """
    from rovertwin.mapping import scan_match_cost, scan_match_gradient

    clearance = 5e-5

    def transform(pose):
        c, s = math.cos(pose[2]), math.sin(pose[2])
        return np.column_stack((pose[0] + c * points[:, 0] - s * points[:, 1],
                                pose[1] + s * points[:, 0] + c * points[:, 1]))

    def boundary_clearance(pose):
        w = transform(pose)
        gx = (w[:, 0] - grid.origin.x) / grid.resolution - 0.5
        gy = (w[:, 1] - grid.origin.y) / grid.resolution - 0.5
        frac = np.concatenate((gx - np.floor(gx), gy - np.floor(gy)))
        return np.minimum(frac, 1.0 - frac).min() * grid.resolution

    checked = 0
    while checked < samples:
        pose = np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                         rng.uniform(-0.2, 0.2)])
        if boundary_clearance(pose) <= clearance:
            continue
        analytic = scan_match_gradient(grid, points, pose)
        fd = np.zeros(3)
        for k, h in ((0, h_xy), (1, h_xy), (2, h_theta)):
            lo, hi = pose.copy(), pose.copy()
            lo[k] -= h
            hi[k] += h
            fd[k] = (scan_match_cost(grid, points, hi)
                     - scan_match_cost(grid, points, lo)) / (2 * h)
        err = np.linalg.norm(analytic - fd)
        assert err <= rel_tol * max(np.linalg.norm(fd), 1e-9), \
            f"gradient mismatch {err} at pose {pose}"
        checked += 1
    return checked
