"""Occupancy-map file pair: binary PGM image plus a YAML-style metadata file.

Pixel palette follows the conventional map-server encoding: 0 occupied,
254 free, 205 unknown. The image is written top row = highest-y cells, so
saved maps view correctly in ordinary image tools.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .core import OccupancyGrid, Pose2D

PIXEL_OCCUPIED = 0
PIXEL_FREE = 254
PIXEL_UNKNOWN = 205

OCCUPIED_THRESH = 0.65
FREE_THRESH = 0.196

# Log-odds values restored for the three pixel levels on load.
LOAD_L_OCC = 4.0
LOAD_L_FREE = -4.0
LOAD_L_UNKNOWN = 0.0


class MapFileError(Exception):
    """A map image/metadata pair failed to parse; message carries location."""


def quantize(grid: OccupancyGrid) -> np.ndarray:
    """Grid probabilities -> 3-level pixel array (row 0 = top of image)."""
    p = grid.probabilities()
    pixels = np.full(p.shape, PIXEL_UNKNOWN, dtype=np.uint8)
    pixels[p > OCCUPIED_THRESH] = PIXEL_OCCUPIED
    pixels[p < FREE_THRESH] = PIXEL_FREE
    return pixels[::-1, :]


def save_map(grid: OccupancyGrid, basename) -> tuple[Path, Path]:
    """Write ``basename``.pgm and ``basename``.yaml; returns both paths."""
    base = Path(basename)
    pgm_path = base.with_suffix(".pgm")
    yaml_path = base.with_suffix(".yaml")
    pixels = quantize(grid)
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    pgm_path.write_bytes(header + pixels.tobytes())
    yaml_path.write_text(
        f"image: {pgm_path.name}\n"
        f"resolution: {grid.resolution:.6f}\n"
        f"origin: [{grid.origin.x:.6f}, {grid.origin.y:.6f}, {grid.origin.theta:.6f}]\n"
        "negate: 0\n"
        f"occupied_thresh: {OCCUPIED_THRESH}\n"
        f"free_thresh: {FREE_THRESH}\n",
        encoding="utf-8",
        newline="\n",
    )
    return pgm_path, yaml_path


def _parse_metadata(yaml_path: Path) -> dict:
    fields: dict = {}
    for lineno, raw in enumerate(yaml_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise MapFileError(f"{yaml_path}:{lineno}: expected 'key: value'")
        key, value = (part.strip() for part in line.split(":", 1))
        if key == "origin":
            m = re.fullmatch(r"\[([^\]]*)\]", value)
            if not m:
                raise MapFileError(f"{yaml_path}:{lineno}: origin must be [x, y, theta]")
            parts = [p.strip() for p in m.group(1).split(",")]
            if len(parts) != 3:
                raise MapFileError(f"{yaml_path}:{lineno}: origin needs 3 components")
            try:
                fields[key] = [float(p) for p in parts]
            except ValueError:
                raise MapFileError(f"{yaml_path}:{lineno}: non-numeric origin component") from None
        elif key in ("resolution", "occupied_thresh", "free_thresh"):
            try:
                fields[key] = float(value)
            except ValueError:
                raise MapFileError(f"{yaml_path}:{lineno}: field {key} must be a number") from None
        else:
            fields[key] = value
    for required in ("image", "resolution", "origin"):
        if required not in fields:
            raise MapFileError(f"{yaml_path}: missing required field '{required}'")
    return fields


def _read_pgm(pgm_path: Path) -> np.ndarray:
    data = pgm_path.read_bytes()
    if not data.startswith(b"P5"):
        raise MapFileError(f"{pgm_path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval, separated by whitespace/comments
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MapFileError(f"{pgm_path}: truncated header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise MapFileError(f"{pgm_path}: non-integer header field") from None
    if maxval != 255:
        raise MapFileError(f"{pgm_path}: expected maxval 255, got {maxval}")
    body = data[pos:]
    if len(body) != width * height:
        raise MapFileError(
            f"{pgm_path}: expected {width * height} pixels, got {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width)


def load_map(basename) -> OccupancyGrid:
    """Inverse of save_map up to the 3-level quantization."""
    base = Path(basename)
    yaml_path = base.with_suffix(".yaml")
    if not yaml_path.exists():
        raise MapFileError(f"{yaml_path}: metadata file not found")
    meta = _parse_metadata(yaml_path)
    pgm_path = yaml_path.parent / meta["image"]
    if not pgm_path.exists():
        raise MapFileError(f"{pgm_path}: image file not found")
    pixels = _read_pgm(pgm_path)[::-1, :]
    occ_thresh = meta.get("occupied_thresh", OCCUPIED_THRESH)
    free_thresh = meta.get("free_thresh", FREE_THRESH)
    # pixel intensity encodes darkness = occupancy (negate 0 convention)
    occ_prob = (255.0 - pixels.astype(float)) / 255.0
    cells = np.full(pixels.shape, LOAD_L_UNKNOWN, dtype=float)
    cells[occ_prob > occ_thresh] = LOAD_L_OCC
    cells[occ_prob < free_thresh] = LOAD_L_FREE
    if not math.isfinite(meta["resolution"]) or meta["resolution"] <= 0:
        raise MapFileError(f"{yaml_path}: resolution must be positive")
    height, width = pixels.shape
    return OccupancyGrid(
        resolution=meta["resolution"],
        width=width,
        height=height,
        origin=Pose2D(*meta["origin"]),
        cells=cells,
    )
