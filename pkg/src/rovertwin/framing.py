"""Serial-style frame codec for bus messages.

Frame layout (all multi-byte fields little-endian):

    0xFF 0xFE | topic_id (u16) | length (u16) | payload | checksum (u8)

The checksum is the two's complement of the byte sum over topic id,
length, and payload, so a valid frame sums to zero mod 256. Topic ids
are assigned from registration order, which every session derives from
the same standard topic list.
"""

from __future__ import annotations

import struct

from .bus import Bus
from .messages import decode_payload, encode_payload, has_binary_codec
from .bus import TopicMessage

SYNC = b"\xff\xfe"
HEADER = struct.Struct("<HH")  # topic_id, length
MAX_PAYLOAD = 0xFFFF


class FrameError(Exception):
    pass


class ChecksumMismatch(FrameError):
    pass


class TruncatedFrame(FrameError):
    pass


class UnknownTopicId(FrameError):
    pass


class PayloadTooLarge(FrameError):
    pass


class TopicRegistry:
    """Bidirectional topic name/id map with per-topic schemas."""

    def __init__(self, topics: list[tuple[str, type]] | None = None):
        self._by_name: dict[str, tuple[int, type]] = {}
        self._by_id: dict[int, tuple[str, type]] = {}
        for name, schema in topics or []:
            self.register(name, schema)

    @classmethod
    def from_bus(cls, bus: Bus) -> "TopicRegistry":
        return cls(bus.topics())

    def register(self, name: str, schema: type) -> int:
        if name in self._by_name:
            return self._by_name[name][0]
        topic_id = len(self._by_name)
        self._by_name[name] = (topic_id, schema)
        self._by_id[topic_id] = (name, schema)
        return topic_id

    def id_of(self, name: str) -> int:
        if name not in self._by_name:
            raise KeyError(f"topic {name} not registered")
        return self._by_name[name][0]

    def schema_of(self, name: str) -> type:
        return self._by_name[name][1]

    def lookup(self, topic_id: int) -> tuple[str, type]:
        if topic_id not in self._by_id:
            raise UnknownTopicId(f"topic id {topic_id}")
        return self._by_id[topic_id]

    def framable(self, name: str) -> bool:
        return name in self._by_name and has_binary_codec(self._by_name[name][1])


def _checksum(body: bytes) -> int:
    return (-sum(body)) & 0xFF


def build_frame(topic_id: int, payload: bytes) -> bytes:
    """Raw frame around arbitrary payload bytes (possibly empty)."""
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"{len(payload)} bytes exceeds the u16 length field")
    header = HEADER.pack(topic_id, len(payload))
    return SYNC + header + payload + bytes([_checksum(header + payload)])


def parse_frame(buf: bytes, offset: int = 0) -> tuple[int, bytes, int]:
    """Inverse of build_frame at ``offset``: (topic_id, payload, consumed).

    Raises TruncatedFrame when the buffer ends mid-frame and
    ChecksumMismatch when the frame fails to sum to zero.
    """
    if buf[offset:offset + 2] != SYNC:
        raise FrameError("frame does not start with the sync pattern")
    head_end = offset + 2 + HEADER.size
    if len(buf) < head_end:
        raise TruncatedFrame("incomplete header")
    topic_id, length = HEADER.unpack_from(buf, offset + 2)
    end = head_end + length + 1
    if len(buf) < end:
        raise TruncatedFrame(f"need {end - offset} bytes, have {len(buf) - offset}")
    body = buf[offset + 2:head_end + length]
    if (sum(body) + buf[end - 1]) & 0xFF != 0:
        raise ChecksumMismatch("frame checksum failed")
    return topic_id, bytes(buf[head_end:head_end + length]), end - offset


def encode_frame(msg: TopicMessage, registry: TopicRegistry) -> bytes:
    """Message -> framed bytes; raises PayloadTooLarge beyond the u16 length."""
    topic_id = registry.id_of(msg.topic)
    payload = encode_payload(msg.payload, msg.stamp)
    return build_frame(topic_id, payload)


def decode_frame(buf: bytes, registry: TopicRegistry, offset: int = 0) -> tuple[TopicMessage, int]:
    """Strictly decode one frame starting at ``offset``.

    Returns (message, bytes consumed). Raises TruncatedFrame when the
    buffer ends mid-frame, ChecksumMismatch, or UnknownTopicId.
    """
    topic_id, payload, consumed = parse_frame(buf, offset)
    name, schema = registry.lookup(topic_id)
    decoded, stamp = decode_payload(schema, payload)
    return TopicMessage(name, stamp, decoded), consumed


class FrameDecoder:
    """Streaming decoder that resynchronizes on the sync pattern.

    feed() consumes as much of the stream as currently parses; bytes that
    might still grow into a frame are buffered until more data or flush().
    Corrupted candidates advance the scan by one byte so real frames
    hiding behind a false sync are still found.
    """

    def __init__(self, registry: TopicRegistry):
        self.registry = registry
        self._buf = bytearray()
        self.checksum_errors = 0
        self.resyncs = 0
        self.truncated = 0

    def feed(self, data: bytes) -> list[TopicMessage]:
        self._buf.extend(data)
        return self._drain(final=False)

    def flush(self) -> list[TopicMessage]:
        """Parse whatever remains, discarding bytes that never complete."""
        out = self._drain(final=True)
        if self._buf:
            self.truncated += 1
            self._buf.clear()
        return out

    def _drain(self, final: bool) -> list[TopicMessage]:
        out: list[TopicMessage] = []
        pos = 0
        while True:
            idx = self._buf.find(SYNC, pos)
            if idx < 0:
                # keep a trailing 0xFF which may be half a sync pair
                keep = len(self._buf) - 1 if self._buf[-1:] == b"\xff" else len(self._buf)
                del self._buf[:keep]
                return out
            try:
                msg, consumed = decode_frame(self._buf, self.registry, idx)
            except TruncatedFrame:
                if not final:
                    del self._buf[:idx]
                    return out
                pos = idx + 1
                continue
            except (ChecksumMismatch, UnknownTopicId, ValueError):
                self.checksum_errors += 1
                self.resyncs += 1
                pos = idx + 1
                continue
            out.append(msg)
            del self._buf[:idx + consumed]
            pos = 0
