"""Record/replay of bus traffic as a length-prefixed frame log.

Bag layout: an 8-byte magic header followed by records of u32-LE length +
one encoded frame. Replay re-publishes with the original stamps, so a
bag recorded from a replay is byte-identical to its source.
"""

from __future__ import annotations

import struct
import time
from pathlib import Path

from .bus import Bus, TopicMessage
from .framing import FrameError, TopicRegistry, decode_frame, encode_frame
from .messages import UnframableTopic

BAG_MAGIC = b"RTBAG01\n"
_LEN = struct.Struct("<I")


class BagError(Exception):
    pass


class BagWriter:
    """Subscribes to every framable topic on a bus and logs each message."""

    def __init__(self, path, bus: Bus, registry: TopicRegistry | None = None):
        self.path = Path(path)
        self.registry = registry or TopicRegistry.from_bus(bus)
        self._fh = open(self.path, "wb")
        self._fh.write(BAG_MAGIC)
        self.message_count = 0
        self.skipped = 0
        self._subs = []
        for name, _schema in bus.topics():
            if self.registry.framable(name):
                self._subs.append(bus.subscribe(name, self._on_message))

    def _on_message(self, msg: TopicMessage) -> None:
        try:
            frame = encode_frame(msg, self.registry)
        except (FrameError, UnframableTopic):
            self.skipped += 1
            return
        self._fh.write(_LEN.pack(len(frame)))
        self._fh.write(frame)
        self.message_count += 1

    def close(self) -> None:
        for sub in self._subs:
            sub.unsubscribe()
        self._subs.clear()
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_bag(path, registry: TopicRegistry) -> list[TopicMessage]:
    """All messages of a bag, in recorded order."""
    data = Path(path).read_bytes()
    if not data.startswith(BAG_MAGIC):
        raise BagError(f"{path}: not a bag file")
    pos = len(BAG_MAGIC)
    out: list[TopicMessage] = []
    while pos < len(data):
        if pos + _LEN.size > len(data):
            raise BagError(f"{path}: truncated record length at byte {pos}")
        (length,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        if pos + length > len(data):
            raise BagError(f"{path}: truncated record at byte {pos}")
        msg, consumed = decode_frame(data, registry, pos)
        if consumed != length:
            raise BagError(f"{path}: record length mismatch at byte {pos}")
        out.append(msg)
        pos += length
    return out


def replay(path, bus: Bus, registry: TopicRegistry | None = None,
           realtime: bool = False) -> int:
    """Re-publish a bag onto ``bus`` with original stamps.

    With ``realtime`` the original inter-message timing is reproduced by
    sleeping on stamp deltas; otherwise messages go out as fast as
    possible. Returns the message count.
    """
    registry = registry or TopicRegistry.from_bus(bus)
    messages = read_bag(path, registry)
    previous = None
    for msg in messages:
        if realtime and previous is not None and msg.stamp > previous:
            time.sleep(msg.stamp - previous)
        previous = msg.stamp
        bus.publish(msg.topic, msg.payload, stamp=msg.stamp)
    return len(messages)
