import math

import numpy as np
import pytest

from rovertwin.core import (
    LaserScan,
    OccupancyGrid,
    Pose2D,
    RobotParams,
    compose_pose,
    grid_to_world,
    normalize_angle,
    world_to_grid,
)


def test_compose_identity_frame():
    assert compose_pose(Pose2D(0, 0, 0), Pose2D(1, 0, 0)) == Pose2D(1, 0, 0)


def test_compose_rotated_frame():
    # delta along +x of a frame facing +y lands on +y
    result = compose_pose(Pose2D(0, 0, math.pi / 2), Pose2D(1, 0, 0))
    assert result.x == pytest.approx(0.0, abs=1e-12)
    assert result.y == pytest.approx(1.0, abs=1e-12)
    assert result.theta == pytest.approx(math.pi / 2)


def test_compose_wraps_heading():
    result = compose_pose(Pose2D(1, 1, math.pi), Pose2D(0, 0, math.pi))
    assert result == Pose2D(1, 1, 0)


def test_compose_associative_and_identity():
    rng = np.random.default_rng(7)
    identity = Pose2D()
    for _ in range(200):
        a, b, c = (Pose2D(*rng.uniform(-3, 3, 2), rng.uniform(-4, 4)) for _ in range(3))
        lhs = a.compose(b).compose(c)
        rhs = a.compose(b.compose(c))
        assert lhs.x == pytest.approx(rhs.x, abs=1e-12)
        assert lhs.y == pytest.approx(rhs.y, abs=1e-12)
        assert normalize_angle(lhs.theta - rhs.theta) == pytest.approx(0.0, abs=1e-12)
        ident = a.compose(identity)
        assert (ident.x, ident.y, ident.theta) == pytest.approx((a.x, a.y, a.theta), abs=1e-12)


def test_inverse_composes_to_identity():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p = Pose2D(*rng.uniform(-5, 5, 2), rng.uniform(-4, 4))
        back = p.inverse().compose(p)
        assert (back.x, back.y, back.theta) == pytest.approx((0, 0, 0), abs=1e-12)


def test_normalize_angle_period():
    for theta in np.linspace(-math.pi + 1e-6, math.pi, 37):
        for k in (-3, -1, 0, 2, 5):
            assert normalize_angle(theta + 2 * math.pi * k) == pytest.approx(theta, abs=1e-9)


def test_normalize_angle_half_open_range():
    assert normalize_angle(math.pi) == math.pi
    assert normalize_angle(-math.pi) == math.pi
    assert normalize_angle(0.0) == 0.0


def _grid(width=20, height=10, res=0.05):
    return OccupancyGrid(resolution=res, width=width, height=height)


def test_world_to_grid_examples():
    g = _grid()
    assert world_to_grid(g, 0.0, 0.0) == (0, 0)
    assert world_to_grid(g, 0.27, 0.10) == (5, 2)
    assert world_to_grid(g, -0.01, 0.1) is None  # left of origin


def test_world_to_grid_roundtrip_on_centers():
    g = _grid(width=7, height=5, res=0.1)
    for ix in range(g.width):
        for iy in range(g.height):
            x, y = grid_to_world(g, ix, iy)
            assert world_to_grid(g, x, y) == (ix, iy)


def test_grid_probabilities_in_unit_interval():
    g = _grid()
    g.cells[:] = np.linspace(-4, 4, g.cells.size).reshape(g.cells.shape)
    p = g.probabilities()
    assert np.all((p > 0) & (p < 1))
    # log-odds zero is exactly even odds
    g.cells[:] = 0.0
    assert np.allclose(g.probabilities(), 0.5)


def test_robot_params_validation():
    with pytest.raises(ValueError):
        RobotParams(wheel_radius=-1)
    with pytest.raises(ValueError):
        RobotParams(wheel_radius=0.3, track_width=0.29)
    with pytest.raises(ValueError):
        RobotParams(v_stable_max=4.0)  # above v_max
    defaults = RobotParams()
    assert defaults.wheel_radius == 0.0825
    assert defaults.track_width == 0.29
    assert defaults.v_max == 3.33
    assert defaults.pole_pairs == 15


def test_laser_scan_length_invariant():
    inc = math.radians(1.0)
    with pytest.raises(ValueError):
        LaserScan(angle_min=0.0, angle_max=inc * 9, angle_increment=inc,
                  ranges=(1.0,) * 9)  # needs 10
    scan = LaserScan(angle_min=0.0, angle_max=inc * 9, angle_increment=inc,
                     ranges=(1.0,) * 9 + (math.inf,))
    assert len(scan.angles) == 10
    assert len(scan.points()) == 9  # +inf beam drops out


def test_laser_scan_range_bounds():
    inc = math.radians(1.0)
    with pytest.raises(ValueError):
        LaserScan(angle_min=0.0, angle_max=0.0, angle_increment=inc,
                  ranges=(17.5,))  # beyond range_max
