"""Lidar-only 2D SLAM: log-odds occupancy mapping plus damped Gauss-Newton
scan-to-map matching on a bilinearly interpolated occupancy surface.

The matcher minimizes sum_i (1 - M(S_i(xi)))^2 over xi = (x, y, theta),
where S_i transforms beam endpoint i into the world and M is the
interpolated occupancy probability. No odometry is consumed: each match
is seeded with the previous pose (zero-motion prior).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import LaserScan, OccupancyGrid, Pose2D, normalize_angle, world_to_grid
from .world import WorldMap


class ScanMatchError(Exception):
    pass


class Diverged(ScanMatchError):
    """Cost could not be reduced even at maximum damping."""


class DegenerateHessian(ScanMatchError):
    """Normal equations are rank-deficient (featureless or empty map)."""


class OutOfInterior(Exception):
    """Interpolation point within one cell of the grid border, or outside."""


DEFAULT_L_OCC = 0.85
DEFAULT_L_FREE = -0.4


# -- bilinear occupancy surface ----------------------------------------


def _grid_coords(grid: OccupancyGrid, xs: np.ndarray, ys: np.ndarray):
    """Continuous cell coordinates with cell centers at integers."""
    gx = (xs - grid.origin.x) / grid.resolution - 0.5
    gy = (ys - grid.origin.y) / grid.resolution - 0.5
    return gx, gy


def _bilinear(probs: np.ndarray, grid: OccupancyGrid, xs: np.ndarray, ys: np.ndarray):
    """Vectorized bilinear value and gradient at world points.

    Returns (values, grad (N,2), inside mask); points outside the one-cell
    interior margin are masked out with zeroed outputs.
    """
    gx, gy = _grid_coords(grid, xs, ys)
    ix = np.floor(gx).astype(int)
    iy = np.floor(gy).astype(int)
    inside = (ix >= 0) & (ix <= grid.width - 2) & (iy >= 0) & (iy <= grid.height - 2)
    ixc = np.clip(ix, 0, grid.width - 2)
    iyc = np.clip(iy, 0, grid.height - 2)
    fx = gx - ix
    fy = gy - iy
    p00 = probs[iyc, ixc]
    p10 = probs[iyc, ixc + 1]
    p01 = probs[iyc + 1, ixc]
    p11 = probs[iyc + 1, ixc + 1]
    value = (1 - fx) * (1 - fy) * p00 + fx * (1 - fy) * p10 \
        + (1 - fx) * fy * p01 + fx * fy * p11
    scale = 1.0 / grid.resolution
    gx_val = ((1 - fy) * (p10 - p00) + fy * (p11 - p01)) * scale
    gy_val = ((1 - fx) * (p01 - p00) + fx * (p11 - p10)) * scale
    value = np.where(inside, value, 0.0)
    grad = np.column_stack((np.where(inside, gx_val, 0.0), np.where(inside, gy_val, 0.0)))
    return value, grad, inside


def interpolate_occupancy(grid: OccupancyGrid, x: float, y: float):
    """Occupancy probability and its analytic gradient at a world point.

    Bilinear over the four surrounding cell-center probabilities; raises
    OutOfInterior within one cell of the border where the stencil is
    incomplete.
    """
    probs = grid.probabilities()
    value, grad, inside = _bilinear(probs, grid, np.array([x]), np.array([y]))
    if not inside[0]:
        raise OutOfInterior(f"point ({x:.3f}, {y:.3f}) outside grid interior")
    return float(value[0]), (float(grad[0, 0]), float(grad[0, 1]))


# -- scan matching ------------------------------------------------------


@dataclass(frozen=True)
class MatchOptions:
    max_iterations: int = 30
    step_tol: float = 1e-6
    cost_tol: float = 1e-9
    lambda_init: float = 1e-3
    lambda_max: float = 1e6
    lambda_min: float = 1e-9
    degeneracy_rcond: float = 1e-10


@dataclass(frozen=True)
class MatchResult:
    pose: Pose2D
    iterations: int
    final_cost: float
    converged: bool


def _scan_points(scan: LaserScan) -> np.ndarray:
    return scan.points()


def _transform(points: np.ndarray, pose: np.ndarray) -> np.ndarray:
    c, s = math.cos(pose[2]), math.sin(pose[2])
    out = np.empty_like(points)
    out[:, 0] = pose[0] + c * points[:, 0] - s * points[:, 1]
    out[:, 1] = pose[1] + s * points[:, 0] + c * points[:, 1]
    return out


def scan_match_cost(grid: OccupancyGrid, points: np.ndarray, pose_vec: np.ndarray,
                    probs: np.ndarray | None = None) -> float:
    """Sum of squared (1 - M) residuals over beam endpoints inside the grid."""
    if probs is None:
        probs = grid.probabilities()
    world = _transform(points, pose_vec)
    value, _, inside = _bilinear(probs, grid, world[:, 0], world[:, 1])
    r = np.where(inside, 1.0 - value, 0.0)
    return float(np.dot(r, r))


def scan_match_gradient(grid: OccupancyGrid, points: np.ndarray, pose_vec: np.ndarray,
                        probs: np.ndarray | None = None) -> np.ndarray:
    """Analytic gradient of scan_match_cost with respect to (x, y, theta)."""
    if probs is None:
        probs = grid.probabilities()
    _, g = _normal_equations(grid, probs, points, pose_vec)
    return -2.0 * g


def _normal_equations(grid, probs, points, pose_vec):
    """Gauss-Newton H = sum J^T J and g = sum J^T r at the given pose."""
    world = _transform(points, pose_vec)
    value, grad, inside = _bilinear(probs, grid, world[:, 0], world[:, 1])
    c, s = math.cos(pose_vec[2]), math.sin(pose_vec[2])
    # d(world point)/d(theta) for each body point
    dth_x = -s * points[:, 0] - c * points[:, 1]
    dth_y = c * points[:, 0] - s * points[:, 1]
    # J_i = grad M . d(world)/d(xi), rows (dM/dx, dM/dy, dM/dtheta)
    J = np.column_stack((grad[:, 0], grad[:, 1],
                         grad[:, 0] * dth_x + grad[:, 1] * dth_y))
    r = 1.0 - value
    J = J[inside]
    r = r[inside]
    H = J.T @ J
    g = J.T @ r
    return H, g


def match_scan(grid: OccupancyGrid, scan: LaserScan, initial: Pose2D,
               opts: MatchOptions = MatchOptions()) -> MatchResult:
    """Align a scan to the map by damped Gauss-Newton from ``initial``.

    Damping is Levenberg-style with Marquardt scaling, (H + lambda
    diag(H)) step = g, so lambda is dimensionless against the Hessian
    scale; it starts at lambda_init, multiplies by 10 on a rejected step
    and divides by 10 on acceptance, which keeps accepted costs monotone
    non-increasing. Raises DegenerateHessian when the normal equations
    are rank-deficient (e.g. an all-unknown map) and Diverged if no
    damping level up to lambda_max produces a non-increasing step of
    meaningful size.
    """
    points = _scan_points(scan)
    if len(points) == 0:
        raise DegenerateHessian("scan has no finite returns")
    probs = grid.probabilities()
    pose = initial.as_array()
    cost = scan_match_cost(grid, points, pose, probs)
    lam = opts.lambda_init
    for iteration in range(1, opts.max_iterations + 1):
        H, g = _normal_equations(grid, probs, points, pose)
        eigs = np.linalg.eigvalsh(H)
        if eigs[-1] <= 0.0 or eigs[0] < opts.degeneracy_rcond * eigs[-1]:
            raise DegenerateHessian(
                f"normal equations rank-deficient (eigenvalues {eigs})")
        damping = np.diag(np.diag(H))
        while True:
            try:
                step = np.linalg.solve(H + lam * damping, g)
            except np.linalg.LinAlgError:
                raise DegenerateHessian("normal equations unsolvable")
            if np.linalg.norm(step) < opts.step_tol:
                # damping has shrunk the step into the noise floor: settled
                return MatchResult(Pose2D(*pose), iteration, cost, True)
            candidate = pose + step
            candidate[2] = normalize_angle(candidate[2])
            new_cost = scan_match_cost(grid, points, candidate, probs)
            if new_cost <= cost:
                break
            lam *= 10.0
            if lam > opts.lambda_max:
                raise Diverged(f"no descent step found (cost {cost:.6g})")
        pose = candidate
        lam = max(lam / 10.0, opts.lambda_min)
        decrease = cost - new_cost
        cost = new_cost
        if decrease < opts.cost_tol:
            return MatchResult(Pose2D(*pose), iteration, cost, True)
    return MatchResult(Pose2D(*pose), opts.max_iterations, cost, False)


# -- map update ---------------------------------------------------------


def _dda_free_cells(grid: OccupancyGrid, start: np.ndarray, ends: np.ndarray):
    """Integer grid traversal from a shared start point to per-beam endpoints.

    Returns (ix, iy) arrays of every cell each ray passes through,
    excluding the cell containing the endpoint, plus the endpoint cell
    indices. Rays leaving the grid are truncated at the border.
    """
    res = grid.resolution
    ox, oy = grid.origin.x, grid.origin.y
    n = len(ends)
    cx0 = math.floor((start[0] - ox) / res)
    cy0 = math.floor((start[1] - oy) / res)
    end_cx = np.floor((ends[:, 0] - ox) / res).astype(int)
    end_cy = np.floor((ends[:, 1] - oy) / res).astype(int)
    d = ends - start
    length = np.hypot(d[:, 0], d[:, 1])
    length = np.where(length == 0.0, 1e-30, length)
    ux = d[:, 0] / length
    uy = d[:, 1] / length
    step_x = np.sign(ux).astype(int)
    step_y = np.sign(uy).astype(int)
    with np.errstate(divide="ignore"):
        inv_ux = np.where(ux != 0.0, 1.0 / np.abs(ux), np.inf)
        inv_uy = np.where(uy != 0.0, 1.0 / np.abs(uy), np.inf)
    next_bx = ox + (cx0 + (step_x > 0)) * res
    next_by = oy + (cy0 + (step_y > 0)) * res
    tmax_x = np.where(step_x != 0, (next_bx - start[0]) / np.where(ux == 0, 1, ux), np.inf)
    tmax_y = np.where(step_y != 0, (next_by - start[1]) / np.where(uy == 0, 1, uy), np.inf)
    tdelta_x = res * inv_ux
    tdelta_y = res * inv_uy
    cur_x = np.full(n, cx0, dtype=int)
    cur_y = np.full(n, cy0, dtype=int)
    active = (cur_x != end_cx) | (cur_y != end_cy)
    free_x = [cur_x[active].copy()]
    free_y = [cur_y[active].copy()]
    max_steps = grid.width + grid.height + 4
    for _ in range(max_steps):
        if not active.any():
            break
        take_x = active & (tmax_x <= tmax_y)
        take_y = active & ~take_x
        t_cross = np.where(take_x, tmax_x, tmax_y)
        # crossing at/after the endpoint means the endpoint cell was missed
        # by a float tie; stop those rays rather than overshoot
        overshoot = active & (t_cross > length)
        cur_x = np.where(take_x, cur_x + step_x, cur_x)
        cur_y = np.where(take_y, cur_y + step_y, cur_y)
        tmax_x = np.where(take_x, tmax_x + tdelta_x, tmax_x)
        tmax_y = np.where(take_y, tmax_y + tdelta_y, tmax_y)
        reached = (cur_x == end_cx) & (cur_y == end_cy)
        out = (cur_x < 0) | (cur_x >= grid.width) | (cur_y < 0) | (cur_y >= grid.height)
        active = active & ~reached & ~out & ~overshoot
        if active.any():
            free_x.append(cur_x[active].copy())
            free_y.append(cur_y[active].copy())
    return np.concatenate(free_x), np.concatenate(free_y), end_cx, end_cy


def update_map(grid: OccupancyGrid, scan: LaserScan, pose: Pose2D,
               l_occ: float = DEFAULT_L_OCC, l_free: float = DEFAULT_L_FREE) -> None:
    """Fold one scan taken at ``pose`` into the grid (in place).

    Finite beams add l_occ to the endpoint cell and l_free to every cell
    crossed on the way there; +inf beams mark free space out to range_max
    and add no endpoint. Log-odds are clamped after the update.
    """
    if world_to_grid(grid, pose.x, pose.y) is None:
        raise ValueError("pose outside the grid")
    r = np.asarray(scan.ranges, dtype=float)
    angles = pose.theta + scan.angles
    finite = np.isfinite(r)
    reach = np.where(finite, r, scan.range_max)
    ends = np.column_stack((pose.x + reach * np.cos(angles),
                            pose.y + reach * np.sin(angles)))
    free_x, free_y, end_cx, end_cy = _dda_free_cells(
        grid, np.array([pose.x, pose.y]), ends)
    np.add.at(grid.cells, (free_y, free_x), l_free)
    in_bounds = (end_cx >= 0) & (end_cx < grid.width) & (end_cy >= 0) & (end_cy < grid.height)
    hit = in_bounds & finite
    miss = in_bounds & ~finite
    np.add.at(grid.cells, (end_cy[hit], end_cx[hit]), l_occ)
    np.add.at(grid.cells, (end_cy[miss], end_cx[miss]), l_free)
    grid.clamp()


# -- mapper -------------------------------------------------------------


@dataclass(frozen=True)
class MapperConfig:
    resolution: float = 0.05
    size_x: float = 20.0
    size_y: float = 20.0
    l_occ: float = DEFAULT_L_OCC
    l_free: float = DEFAULT_L_FREE
    match: MatchOptions = MatchOptions()


class Mapper:
    """Sequential lidar-only mapper.

    The first scan stamps the map at the origin pose; each later scan is
    matched against the map seeded at the previous pose, then folded in at
    the matched pose. A diverged match falls back to the previous pose and
    still maps (counted in ``fallback_count``).
    """

    def __init__(self, config: MapperConfig = MapperConfig()):
        self.config = config
        width = round(config.size_x / config.resolution)
        height = round(config.size_y / config.resolution)
        origin = Pose2D(-config.size_x / 2.0, -config.size_y / 2.0, 0.0)
        self.grid = OccupancyGrid(config.resolution, width, height, origin)
        self.last_pose = Pose2D()
        self.scan_count = 0
        self.trajectory: list[Pose2D] = []
        self.fallback_count = 0

    def process_scan(self, scan: LaserScan, seed_pose: Pose2D | None = None) -> Pose2D:
        """Match (after the first scan) then map; returns the pose estimate.

        ``seed_pose`` optionally replaces the zero-motion prior with an
        odometry seed; by default the previous pose is used.
        """
        if self.scan_count == 0:
            estimate = Pose2D()
        else:
            initial = seed_pose if seed_pose is not None else self.last_pose
            try:
                estimate = match_scan(self.grid, scan, initial, self.config.match).pose
            except Diverged:
                self.fallback_count += 1
                estimate = self.last_pose
        update_map(self.grid, scan, estimate, self.config.l_occ, self.config.l_free)
        self.last_pose = estimate
        self.scan_count += 1
        self.trajectory.append(estimate)
        return estimate


# -- ground-truth rasterization ----------------------------------------


def rasterize_world(world: WorldMap, resolution: float = 0.05,
                    interior_point: tuple[float, float] = (0.0, 0.0),
                    margin: float = 0.5) -> OccupancyGrid:
    """Ideal occupancy grid of a segment world (for localization tests/demos).

    Wall cells get l_max; cells flood-connected to ``interior_point`` get
    l_min (free); everything else stays unknown.
    """
    xmin, ymin, xmax, ymax = world.bounds
    origin = Pose2D(xmin - margin, ymin - margin, 0.0)
    width = math.ceil((xmax - xmin + 2 * margin) / resolution)
    height = math.ceil((ymax - ymin + 2 * margin) / resolution)
    grid = OccupancyGrid(resolution, width, height, origin)
    occupied = np.zeros((height, width), dtype=bool)
    for x1, y1, x2, y2 in world.segments:
        steps = max(2, math.ceil(math.hypot(x2 - x1, y2 - y1) / (resolution / 4.0)))
        ts = np.linspace(0.0, 1.0, steps)
        xs = x1 + ts * (x2 - x1)
        ys = y1 + ts * (y2 - y1)
        ix = np.floor((xs - origin.x) / resolution).astype(int)
        iy = np.floor((ys - origin.y) / resolution).astype(int)
        keep = (ix >= 0) & (ix < width) & (iy >= 0) & (iy < height)
        occupied[iy[keep], ix[keep]] = True
    labels, _ = ndimage.label(~occupied)
    seed = world_to_grid(grid, *interior_point)
    if seed is None:
        raise ValueError("interior_point outside the rasterized area")
    interior_label = labels[seed[1], seed[0]]
    if occupied[seed[1], seed[0]] or interior_label == 0:
        raise ValueError("interior_point lies on a wall")
    free = labels == interior_label
    grid.cells[occupied] = grid.l_max
    grid.cells[free] = grid.l_min
    return grid
