"""Run-configuration file formats: stability sweep rows and scripted paths.

Stability config: one row per line, ``vel=<m/s> payload=<kg> pcog=<m>
radius=<m>`` (any order, ``#`` comments). Path files: ``t v omega`` rows,
meaning "command (v, omega) from time t until the next row"; the last
row's time ends the script.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path


class ConfigError(Exception):
    """Parse failure; the message carries file and line."""


@dataclass(frozen=True)
class StabilityRow:
    vel: float
    payload: float
    pcog: float
    radius: float


# Default sweep: four speed groups x three payload/pCOG placements, with
# the turning radii used by the physical characterization runs. Payload 0
# means the bare platform. Only the fastest tight-radius bare run tips.
DEFAULT_STABILITY_ROWS: tuple[StabilityRow, ...] = (
    StabilityRow(0.5, 0.0, 0.0, 0.5),
    StabilityRow(0.5, 25.0, 0.1, 1.0),
    StabilityRow(0.5, 85.0, -0.1, 1.5),
    StabilityRow(1.0, 0.0, 0.0, 2.0),
    StabilityRow(1.0, 25.0, 0.1, 2.5),
    StabilityRow(1.0, 85.0, -0.1, 1.5),
    StabilityRow(1.5, 25.0, -0.1, 1.0),
    StabilityRow(1.5, 85.0, 0.1, 2.5),
    StabilityRow(1.5, 0.0, 0.0, 1.5),
    StabilityRow(2.5, 25.0, -0.1, 1.5),
    StabilityRow(2.5, 85.0, 0.1, 2.5),
    StabilityRow(2.5, 0.0, 0.0, 0.5),
)

_ROW_KEYS = ("vel", "payload", "pcog", "radius")


def parse_stability_config(path) -> list[StabilityRow]:
    rows: list[StabilityRow] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields: dict[str, float] = {}
        for token in line.split():
            if "=" not in token:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got '{token}'")
            key, _, value = token.partition("=")
            if key not in _ROW_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
            try:
                fields[key] = float(value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad number '{value}'") from None
        missing = [k for k in _ROW_KEYS if k not in fields]
        if missing:
            raise ConfigError(f"{path}:{lineno}: missing {', '.join(missing)}")
        rows.append(StabilityRow(fields["vel"], fields["payload"],
                                 fields["pcog"], fields["radius"]))
    return rows


def write_stability_config(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# vel=<m/s> payload=<kg> pcog=<m> radius=<m>\n")
        for r in rows:
            fh.write(f"vel={r.vel} payload={r.payload} pcog={r.pcog} radius={r.radius}\n")


@dataclass(frozen=True)
class PathSegment:
    t: float
    v: float
    omega: float


def parse_path(path) -> list[PathSegment]:
    segments: list[PathSegment] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError(f"{path}:{lineno}: expected 't v omega'")
        try:
            segments.append(PathSegment(*(float(p) for p in parts)))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: non-numeric value") from None
    if segments and any(b.t <= a.t for a, b in zip(segments, segments[1:])):
        raise ConfigError(f"{path}: times must be strictly increasing")
    return segments


class PathScript:
    """Piecewise-constant (v, omega) command source over sim time."""

    def __init__(self, segments: list[PathSegment]):
        if not segments:
            raise ValueError("path script needs at least one row")
        self.segments = sorted(segments, key=lambda s: s.t)

    @property
    def duration(self) -> float:
        return self.segments[-1].t

    def command(self, t: float) -> tuple[float, float]:
        if t < self.segments[0].t or t >= self.duration:
            return (0.0, 0.0)
        current = self.segments[0]
        for seg in self.segments[1:]:
            if seg.t > t:
                break
            current = seg
        return (current.v, current.omega)


def rectangle_loop_path(side_x: float = 3.2, side_y: float = 1.9,
                        v: float = 0.3, omega_turn: float = 0.5,
                        loops: int = 2) -> list[PathSegment]:
    """Rectangle perimeter loops with in-place 90-degree left turns at the
    corners; the default traces ~20 m inside the built-in demo room when
    started at the origin facing +x.
    """
    segments: list[PathSegment] = []
    t = 0.0
    quarter_turn = (0.5 * math.pi) / omega_turn
    for _ in range(loops):
        for leg in (side_x, side_y, side_x, side_y):
            segments.append(PathSegment(round(t, 6), v, 0.0))
            t += leg / v
            segments.append(PathSegment(round(t, 6), 0.0, omega_turn))
            t += quarter_turn
    segments.append(PathSegment(round(t, 6), 0.0, 0.0))
    return segments


def write_path(segments, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# t v omega\n")
        for seg in segments:
            fh.write(f"{seg.t:.6f} {seg.v:.6f} {seg.omega:.6f}\n")
