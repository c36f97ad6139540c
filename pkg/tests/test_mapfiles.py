import math

import pytest

from rovertwin.core import OccupancyGrid, Pose2D
from rovertwin.mapfiles import (
    MapFileError,
    PIXEL_FREE,
    PIXEL_OCCUPIED,
    PIXEL_UNKNOWN,
    load_map,
    quantize,
    save_map,
)


def small_grid():
    g = OccupancyGrid(0.05, 12, 9, Pose2D(-0.3, -0.2, 0.0))
    g.cells[2, 3] = math.log(0.9 / 0.1)   # p = 0.9 -> occupied
    g.cells[5, 7] = math.log(0.1 / 0.9)   # p = 0.1 -> free
    return g


def test_quantize_levels():
    g = small_grid()
    pixels = quantize(g)[::-1, :]  # undo the image row flip
    assert pixels[2, 3] == PIXEL_OCCUPIED
    assert pixels[5, 7] == PIXEL_FREE
    assert pixels[0, 0] == PIXEL_UNKNOWN


def test_all_unknown_grid_is_all_205(tmp_path):
    g = OccupancyGrid(0.05, 6, 4)
    pgm, _yaml = save_map(g, tmp_path / "blank")
    body = pgm.read_bytes().split(b"255\n", 1)[1]
    assert set(body) == {PIXEL_UNKNOWN}


def test_save_load_save_byte_identical(tmp_path):
    g = small_grid()
    pgm1, yaml1 = save_map(g, tmp_path / "one")
    loaded = load_map(tmp_path / "one")
    assert loaded.resolution == g.resolution
    assert loaded.width == g.width and loaded.height == g.height
    assert loaded.origin == g.origin
    pgm2, yaml2 = save_map(loaded, tmp_path / "two")
    assert pgm1.read_bytes() == pgm2.read_bytes()
    assert yaml1.read_text() == yaml2.read_text().replace("two.pgm", "one.pgm")


def test_yaml_fields(tmp_path):
    g = small_grid()
    _pgm, yaml_path = save_map(g, tmp_path / "meta")
    text = yaml_path.read_text()
    assert "image: meta.pgm" in text
    assert "resolution: 0.050000" in text
    assert "origin: [-0.300000, -0.200000, 0.000000]" in text
    assert "negate: 0" in text
    assert "occupied_thresh: 0.65" in text
    assert "free_thresh: 0.196" in text


def test_load_errors_have_diagnostics(tmp_path):
    with pytest.raises(MapFileError, match="not found"):
        load_map(tmp_path / "missing")
    bad_yaml = tmp_path / "bad.yaml"
    bad_yaml.write_text("image bad.pgm\n")
    with pytest.raises(MapFileError, match="bad.yaml:1"):
        load_map(tmp_path / "bad")
    # valid metadata but corrupt image
    g = small_grid()
    save_map(g, tmp_path / "c")
    pgm = tmp_path / "c.pgm"
    pgm.write_bytes(b"P2\n3 3\n255\n" + b"\x00" * 9)
    with pytest.raises(MapFileError, match="P5"):
        load_map(tmp_path / "c")
    header = f"P5\n{g.width} {g.height}\n255\n".encode()
    pgm.write_bytes(header + b"\x00" * 5)  # truncated body
    with pytest.raises(MapFileError, match="expected"):
        load_map(tmp_path / "c")


def test_load_rejects_bad_origin(tmp_path):
    save_map(small_grid(), tmp_path / "o")
    yaml_path = tmp_path / "o.yaml"
    text = yaml_path.read_text().replace(
        "origin: [-0.300000, -0.200000, 0.000000]", "origin: [1, 2]")
    yaml_path.write_text(text)
    with pytest.raises(MapFileError, match="origin"):
        load_map(tmp_path / "o")
