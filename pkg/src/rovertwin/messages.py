"""Bus message types and their binary/JSON codecs.

Binary payloads are ``schema_tag (u8) | stamp (f64 LE) | body`` with all
multi-byte fields little-endian and f64 floats throughout, so decode
(encode(m)) reproduces m bit-exactly. JSON encoding (used by the
WebSocket bridge) carries SI-unit numbers; +inf lidar ranges map to null
because standard JSON has no Infinity literal.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .core import ImuSample, LaserScan, OccupancyGrid, Pose2D, Twist2D
from .mapfiles import PIXEL_FREE, PIXEL_OCCUPIED, quantize
from .mapfiles import LOAD_L_FREE, LOAD_L_OCC, LOAD_L_UNKNOWN


@dataclass(frozen=True)
class TfPair:
    """Single parent->child transform (the only one this system has)."""

    parent: str
    child: str
    pose: Pose2D


@dataclass(frozen=True)
class Odometry:
    """Integrated wheel odometry pose plus the current body twist."""

    pose: Pose2D
    twist: Twist2D


@dataclass(frozen=True)
class PoseWithCovariance:
    pose: Pose2D
    covariance: tuple[float, ...]  # row-major 3x3

    def __post_init__(self):
        if len(self.covariance) != 9:
            raise ValueError("covariance must have 9 entries")


@dataclass(frozen=True)
class StabilitySample:
    """One stability-harness step for live dashboards."""

    v_cmd: float
    omega_cmd: float
    ax: float
    ay: float
    gz: float
    flag: str


class UnframableTopic(Exception):
    """Topic schema has no binary codec (JSON/bridge only)."""


# -- binary codecs ------------------------------------------------------

_TAGS = {
    Twist2D: 0x01,
    Pose2D: 0x02,
    LaserScan: 0x03,
    ImuSample: 0x04,
    TfPair: 0x05,
    PoseWithCovariance: 0x06,
    Odometry: 0x07,
    StabilitySample: 0x08,
}


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def _unpack_str(buf: bytes, offset: int) -> tuple[str, int]:
    (n,) = struct.unpack_from("<H", buf, offset)
    start = offset + 2
    return buf[start:start + n].decode("utf-8"), start + n


def _pack_body(payload) -> bytes:
    if isinstance(payload, Twist2D):
        return struct.pack("<dd", payload.v, payload.omega)
    if isinstance(payload, Pose2D):
        return struct.pack("<ddd", payload.x, payload.y, payload.theta)
    if isinstance(payload, LaserScan):
        head = struct.pack(
            "<dddddH", payload.angle_min, payload.angle_max, payload.angle_increment,
            payload.range_min, payload.range_max, len(payload.ranges))
        return head + struct.pack(f"<{len(payload.ranges)}d", *payload.ranges)
    if isinstance(payload, ImuSample):
        return struct.pack("<6d", *payload.accel, *payload.gyro)
    if isinstance(payload, TfPair):
        return (_pack_str(payload.parent) + _pack_str(payload.child)
                + struct.pack("<ddd", payload.pose.x, payload.pose.y, payload.pose.theta))
    if isinstance(payload, PoseWithCovariance):
        return struct.pack("<ddd", payload.pose.x, payload.pose.y, payload.pose.theta) \
            + struct.pack("<9d", *payload.covariance)
    if isinstance(payload, Odometry):
        return struct.pack("<ddddd", payload.pose.x, payload.pose.y, payload.pose.theta,
                           payload.twist.v, payload.twist.omega)
    if isinstance(payload, StabilitySample):
        return struct.pack("<5d", payload.v_cmd, payload.omega_cmd,
                           payload.ax, payload.ay, payload.gz) + _pack_str(payload.flag)
    raise UnframableTopic(f"no binary codec for {type(payload).__name__}")


def _unpack_body(schema, buf: bytes):
    if schema is Twist2D:
        return Twist2D(*struct.unpack("<dd", buf))
    if schema is Pose2D:
        return Pose2D(*struct.unpack("<ddd", buf))
    if schema is LaserScan:
        a_min, a_max, a_inc, r_min, r_max, n = struct.unpack_from("<dddddH", buf)
        ranges = struct.unpack_from(f"<{n}d", buf, struct.calcsize("<dddddH"))
        return LaserScan(a_min, a_max, a_inc, tuple(ranges), r_min, r_max)
    if schema is ImuSample:
        vals = struct.unpack("<6d", buf)
        return ImuSample(vals[0:3], vals[3:6])
    if schema is TfPair:
        parent, off = _unpack_str(buf, 0)
        child, off = _unpack_str(buf, off)
        return TfPair(parent, child, Pose2D(*struct.unpack_from("<ddd", buf, off)))
    if schema is PoseWithCovariance:
        vals = struct.unpack("<12d", buf)
        return PoseWithCovariance(Pose2D(*vals[0:3]), tuple(vals[3:12]))
    if schema is Odometry:
        vals = struct.unpack("<5d", buf)
        return Odometry(Pose2D(*vals[0:3]), Twist2D(*vals[3:5]))
    if schema is StabilitySample:
        vals = struct.unpack_from("<5d", buf)
        flag, _ = _unpack_str(buf, struct.calcsize("<5d"))
        return StabilitySample(*vals, flag)
    raise UnframableTopic(f"no binary codec for {schema.__name__}")


def encode_payload(payload, stamp: float) -> bytes:
    """schema tag + stamp + packed body; raises UnframableTopic for JSON-only types."""
    tag = _TAGS.get(type(payload))
    if tag is None:
        raise UnframableTopic(f"no binary codec for {type(payload).__name__}")
    return struct.pack("<Bd", tag, stamp) + _pack_body(payload)


def decode_payload(schema, buf: bytes):
    """Inverse of encode_payload; returns (payload, stamp)."""
    tag, stamp = struct.unpack_from("<Bd", buf)
    expected = _TAGS.get(schema)
    if expected is None:
        raise UnframableTopic(f"no binary codec for {schema.__name__}")
    if tag != expected:
        raise ValueError(f"schema tag {tag:#x} does not match {schema.__name__}")
    return _unpack_body(schema, buf[struct.calcsize("<Bd"):]), stamp


def has_binary_codec(schema) -> bool:
    return schema in _TAGS


# -- JSON codecs ---------------------------------------------------------


def _num(x: float):
    return None if not math.isfinite(x) else x


def to_jsonable(payload):
    """Payload -> plain dict/list tree for the UI wire protocol."""
    if isinstance(payload, Twist2D):
        return {"v": payload.v, "omega": payload.omega}
    if isinstance(payload, Pose2D):
        return {"x": payload.x, "y": payload.y, "theta": payload.theta}
    if isinstance(payload, LaserScan):
        return {
            "angle_min": payload.angle_min,
            "angle_max": payload.angle_max,
            "angle_increment": payload.angle_increment,
            "range_min": payload.range_min,
            "range_max": payload.range_max,
            "ranges": [_num(r) for r in payload.ranges],
        }
    if isinstance(payload, ImuSample):
        return {"accel": list(payload.accel), "gyro": list(payload.gyro)}
    if isinstance(payload, TfPair):
        return {"parent": payload.parent, "child": payload.child,
                "pose": to_jsonable(payload.pose)}
    if isinstance(payload, PoseWithCovariance):
        return {"pose": to_jsonable(payload.pose), "covariance": list(payload.covariance)}
    if isinstance(payload, Odometry):
        return {"pose": to_jsonable(payload.pose), "twist": to_jsonable(payload.twist)}
    if isinstance(payload, StabilitySample):
        return {"v_cmd": payload.v_cmd, "omega_cmd": payload.omega_cmd,
                "ax": payload.ax, "ay": payload.ay, "gz": payload.gz,
                "flag": payload.flag}
    if isinstance(payload, OccupancyGrid):
        pixels = quantize(payload)[::-1, :]  # back to row 0 = lowest y
        return {
            "resolution": payload.resolution,
            "width": payload.width,
            "height": payload.height,
            "origin": [payload.origin.x, payload.origin.y, payload.origin.theta],
            "pixels": pixels.reshape(-1).tolist(),
        }
    raise TypeError(f"no JSON codec for {type(payload).__name__}")


def from_jsonable(schema, obj):
    """JSON tree -> payload instance of the topic's schema."""
    if schema is Twist2D:
        return Twist2D(float(obj["v"]), float(obj["omega"]))
    if schema is Pose2D:
        return Pose2D(float(obj["x"]), float(obj["y"]), float(obj["theta"]))
    if schema is LaserScan:
        ranges = tuple(math.inf if r is None else float(r) for r in obj["ranges"])
        return LaserScan(
            float(obj["angle_min"]), float(obj["angle_max"]),
            float(obj["angle_increment"]), ranges,
            float(obj["range_min"]), float(obj["range_max"]))
    if schema is ImuSample:
        return ImuSample(tuple(float(v) for v in obj["accel"]),
                         tuple(float(v) for v in obj["gyro"]))
    if schema is TfPair:
        return TfPair(str(obj["parent"]), str(obj["child"]),
                      from_jsonable(Pose2D, obj["pose"]))
    if schema is PoseWithCovariance:
        return PoseWithCovariance(from_jsonable(Pose2D, obj["pose"]),
                                  tuple(float(v) for v in obj["covariance"]))
    if schema is Odometry:
        return Odometry(from_jsonable(Pose2D, obj["pose"]),
                        from_jsonable(Twist2D, obj["twist"]))
    if schema is StabilitySample:
        return StabilitySample(float(obj["v_cmd"]), float(obj["omega_cmd"]),
                               float(obj["ax"]), float(obj["ay"]), float(obj["gz"]),
                               str(obj["flag"]))
    if schema is OccupancyGrid:
        pixels = np.array(obj["pixels"], dtype=np.uint8).reshape(
            int(obj["height"]), int(obj["width"]))
        cells = np.full(pixels.shape, LOAD_L_UNKNOWN, dtype=float)
        cells[pixels == PIXEL_OCCUPIED] = LOAD_L_OCC
        cells[pixels == PIXEL_FREE] = LOAD_L_FREE
        return OccupancyGrid(float(obj["resolution"]), int(obj["width"]),
                             int(obj["height"]), Pose2D(*obj["origin"]), cells)
    raise TypeError(f"no JSON codec for {schema.__name__}")


# Standard topic map used by every session; registration order fixes the
# frame-codec topic ids.
STANDARD_TOPICS: tuple[tuple[str, type], ...] = (
    ("/cmd_vel", Twist2D),
    ("/odom", Odometry),
    ("/scan", LaserScan),
    ("/imu/data_raw", ImuSample),
    ("/tf", TfPair),
    ("/amcl_pose", PoseWithCovariance),
    ("/stability", StabilitySample),
    ("/map", OccupancyGrid),
)
