"""Adaptive Monte Carlo localization against a known occupancy map.

Sensor model is a likelihood field (distance to nearest occupied cell,
Gaussian-blurred with a uniform floor); motion model is the classic
rotation-translation-rotation odometry decomposition with four noise
coefficients. Resampling is low-variance systematic, gated on effective
sample size, with a weight-variance heuristic adapting the particle count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import LaserScan, OccupancyGrid, Pose2D, normalize_angle
from .mapfiles import FREE_THRESH, OCCUPIED_THRESH


class NoFreeSpace(Exception):
    """Global initialization needs at least one free cell."""


@dataclass
class ParticleSet:
    """Weighted pose hypotheses: poses (N, 3), weights summing to one."""

    poses: np.ndarray
    weights: np.ndarray
    rng: np.random.Generator
    underflow_reset: bool = False  # set when a weight update had to bail to uniform

    def __post_init__(self):
        self.poses = np.asarray(self.poses, dtype=float).reshape(-1, 3)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.poses) != len(self.weights):
            raise ValueError("poses and weights length mismatch")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")

    def __len__(self) -> int:
        return len(self.weights)

    def normalized(self) -> "ParticleSet":
        total = self.weights.sum()
        if total <= 0:
            raise ValueError("cannot normalize all-zero weights")
        return ParticleSet(self.poses, self.weights / total, self.rng, self.underflow_reset)

    def ess(self) -> float:
        """Effective sample size 1 / sum(w^2) of the normalized weights."""
        w = self.weights / self.weights.sum()
        return float(1.0 / np.dot(w, w))


@dataclass
class LikelihoodField:
    """Distance-to-nearest-occupied lookup plus the mixture parameters."""

    distances: np.ndarray  # (H, W) meters
    resolution: float
    origin: Pose2D
    sigma_hit: float = 0.1
    z_hit: float = 0.9
    z_rand: float = 0.1

    def __post_init__(self):
        if not math.isclose(self.z_hit + self.z_rand, 1.0, abs_tol=1e-9):
            raise ValueError("z_hit + z_rand must equal 1")

    @classmethod
    def from_grid(cls, grid: OccupancyGrid, sigma_hit: float = 0.1,
                  z_hit: float = 0.9, z_rand: float = 0.1,
                  occupied_thresh: float = OCCUPIED_THRESH) -> "LikelihoodField":
        occupied = grid.probabilities() > occupied_thresh
        if not occupied.any():
            raise ValueError("map has no occupied cells to build a field from")
        distances = ndimage.distance_transform_edt(~occupied) * grid.resolution
        return cls(distances, grid.resolution, grid.origin, sigma_hit, z_hit, z_rand)

    def distance_at(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Nearest-cell field lookup; out-of-map points return +inf."""
        ix = np.floor((xs - self.origin.x) / self.resolution).astype(int)
        iy = np.floor((ys - self.origin.y) / self.resolution).astype(int)
        h, w = self.distances.shape
        inside = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
        out = np.full(np.shape(xs), np.inf)
        out[inside] = self.distances[iy[inside], ix[inside]]
        return out


def init_global(grid: OccupancyGrid, n: int, rng: np.random.Generator,
                free_thresh: float = FREE_THRESH) -> ParticleSet:
    """n particles uniform over free cells with uniform heading and weight."""
    free_iy, free_ix = np.nonzero(grid.probabilities() < free_thresh)
    if len(free_ix) == 0:
        raise NoFreeSpace("map has no free cells")
    pick = rng.integers(0, len(free_ix), size=n)
    jitter = rng.uniform(0.0, 1.0, size=(n, 2))
    xs = grid.origin.x + (free_ix[pick] + jitter[:, 0]) * grid.resolution
    ys = grid.origin.y + (free_iy[pick] + jitter[:, 1]) * grid.resolution
    thetas = rng.uniform(-math.pi, math.pi, size=n)
    poses = np.column_stack((xs, ys, thetas))
    return ParticleSet(poses, np.full(n, 1.0 / n), rng)


def predict(ps: ParticleSet, odom_delta: Pose2D,
            alphas: tuple[float, float, float, float]) -> ParticleSet:
    """Advance every particle by the body-frame odometry increment with
    rotation-translation-rotation noise (variances scaled by the alphas).

    Weights are untouched; the prior is re-weighted by the next sensor
    update.
    """
    a1, a2, a3, a4 = alphas
    trans = math.hypot(odom_delta.x, odom_delta.y)
    rot1 = math.atan2(odom_delta.y, odom_delta.x) if trans > 1e-12 else 0.0
    rot2 = normalize_angle(odom_delta.theta - rot1)
    n = len(ps)
    rng = ps.rng
    rot1_hat = rot1 + rng.normal(0.0, math.sqrt(a1 * rot1**2 + a2 * trans**2), n)
    trans_hat = trans + rng.normal(0.0, math.sqrt(a3 * trans**2 + a4 * (rot1**2 + rot2**2)), n)
    rot2_hat = rot2 + rng.normal(0.0, math.sqrt(a1 * rot2**2 + a2 * trans**2), n)
    poses = ps.poses.copy()
    heading = poses[:, 2] + rot1_hat
    poses[:, 0] += trans_hat * np.cos(heading)
    poses[:, 1] += trans_hat * np.sin(heading)
    poses[:, 2] = _wrap(poses[:, 2] + rot1_hat + rot2_hat)
    return ParticleSet(poses, ps.weights, rng)


def _wrap(angles: np.ndarray) -> np.ndarray:
    wrapped = np.mod(angles + np.pi, 2.0 * np.pi)
    wrapped = np.where(wrapped <= 0.0, wrapped + 2.0 * np.pi, wrapped)
    return wrapped - np.pi


def update_weights(ps: ParticleSet, scan: LaserScan, field: LikelihoodField,
                   beam_step: int = 10) -> ParticleSet:
    """Bayes weight update from a decimated beam subset.

    Per beam: z_hit * N(dist(endpoint); 0, sigma_hit) + z_rand / range_max,
    accumulated in log space. If every particle underflows to zero the set
    is reset to uniform weights and flagged rather than divided by zero.
    """
    r = np.asarray(scan.ranges, dtype=float)[::beam_step]
    angles = scan.angles[::beam_step]
    finite = np.isfinite(r)
    if not finite.any():
        return ParticleSet(ps.poses, ps.weights / ps.weights.sum(), ps.rng)
    r = r[finite]
    angles = angles[finite]
    heading = ps.poses[:, 2:3] + angles[None, :]  # (N, B)
    ex = ps.poses[:, 0:1] + r[None, :] * np.cos(heading)
    ey = ps.poses[:, 1:2] + r[None, :] * np.sin(heading)
    dist = field.distance_at(ex, ey)
    norm = 1.0 / (field.sigma_hit * math.sqrt(2.0 * math.pi))
    hit = field.z_hit * norm * np.exp(-0.5 * (dist / field.sigma_hit) ** 2)
    hit = np.where(np.isfinite(dist), hit, 0.0)
    mixture = hit + field.z_rand / scan.range_max
    log_w = np.log(mixture).sum(axis=1)
    log_w = log_w - log_w.max()
    weights = ps.weights * np.exp(log_w)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0.0:
        n = len(ps)
        return ParticleSet(ps.poses, np.full(n, 1.0 / n), ps.rng, underflow_reset=True)
    return ParticleSet(ps.poses, weights / total, ps.rng)


def systematic_resample(weights: np.ndarray, count: int, u0: float) -> np.ndarray:
    """Indices drawn by the systematic scheme from one uniform draw u0 in [0,1).

    Particle i owns the half-open weight interval [cum_{i-1}, cum_i).
    """
    positions = (u0 + np.arange(count)) / count
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0  # guard rounding
    return np.searchsorted(cumulative, positions, side="right")


def weight_cv2(weights: np.ndarray) -> float:
    """Squared coefficient of variation of normalized weights (0 = uniform)."""
    w = weights / weights.sum()
    return float(len(w) * np.dot(w, w) - 1.0)


def adapt_count(ps: ParticleSet, min_particles: int = 100, max_particles: int = 2000,
                cv2_ref: float = 4.0) -> int:
    """Target particle count proportional to weight variance (clamped)."""
    f = min(1.0, weight_cv2(ps.weights) / cv2_ref)
    return int(round(min_particles + f * (max_particles - min_particles)))


def resample(ps: ParticleSet, force: bool = False,
             target_count: int | None = None, ess_ratio: float = 0.5) -> ParticleSet:
    """Systematic resampling, triggered only when ESS < ess_ratio * n.

    ``target_count`` changes the survivor count (adaptive sizing);
    ``force`` bypasses the ESS gate (used by tests and by global resets).
    Output weights are uniform.
    """
    ps = ps.normalized()
    n = len(ps)
    if not force and ps.ess() >= ess_ratio * n:
        return ps
    count = target_count if target_count is not None else n
    u0 = ps.rng.uniform(0.0, 1.0)
    idx = systematic_resample(ps.weights, count, u0)
    return ParticleSet(ps.poses[idx].copy(), np.full(count, 1.0 / count), ps.rng)


def estimate(ps: ParticleSet) -> tuple[Pose2D, np.ndarray]:
    """Weighted mean pose (circular mean heading) and 3x3 covariance."""
    if len(ps) == 0:
        raise ValueError("empty particle set")
    w = ps.weights / ps.weights.sum()
    mx = float(np.dot(w, ps.poses[:, 0]))
    my = float(np.dot(w, ps.poses[:, 1]))
    sin_sum = float(np.dot(w, np.sin(ps.poses[:, 2])))
    cos_sum = float(np.dot(w, np.cos(ps.poses[:, 2])))
    mtheta = math.atan2(sin_sum, cos_sum)
    residuals = np.column_stack((
        ps.poses[:, 0] - mx,
        ps.poses[:, 1] - my,
        _wrap(ps.poses[:, 2] - mtheta),
    ))
    cov = (residuals * w[:, None]).T @ residuals
    return Pose2D(mx, my, mtheta), cov


@dataclass
class MclConfig:
    n_particles: int = 500
    min_particles: int = 100
    max_particles: int = 2000
    sigma_hit: float = 0.1
    z_hit: float = 0.9
    z_rand: float = 0.1
    alphas: tuple[float, float, float, float] = (0.05, 0.05, 0.1, 0.1)
    beam_step: int = 10
    ess_ratio: float = 0.5
    adaptive: bool = True
    cv2_ref: float = 4.0


class MclFilter:
    """Predict/update/resample pipeline bound to one localization map."""

    def __init__(self, grid: OccupancyGrid, config: MclConfig = MclConfig(),
                 seed: int = 0):
        self.grid = grid
        self.config = config
        self.field = LikelihoodField.from_grid(
            grid, config.sigma_hit, config.z_hit, config.z_rand)
        self.rng = np.random.default_rng(seed)
        self.particles = init_global(grid, config.n_particles, self.rng)

    def update(self, odom_delta: Pose2D, scan: LaserScan) -> tuple[Pose2D, np.ndarray]:
        """One localization cycle; returns the running (pose, covariance)."""
        ps = predict(self.particles, odom_delta, self.config.alphas)
        ps = update_weights(ps, scan, self.field, self.config.beam_step)
        target = None
        if self.config.adaptive:
            target = adapt_count(ps, self.config.min_particles,
                                 self.config.max_particles, self.config.cv2_ref)
        self.particles = resample(ps, target_count=target,
                                  ess_ratio=self.config.ess_ratio)
        return estimate(self.particles)
