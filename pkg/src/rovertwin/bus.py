"""Minimal in-process publish/subscribe topic bus.

Topics are registered with a schema type before use; publishing delivers
synchronously on the caller's thread, in subscription order, so each
subscriber observes per-topic FIFO. Registration and subscription are
safe from any thread.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Callable


class BusError(Exception):
    pass


class UnknownTopic(BusError):
    pass


class SchemaMismatch(BusError):
    pass


@dataclass(frozen=True)
class TopicMessage:
    topic: str
    stamp: float
    payload: object


class Subscription:
    def __init__(self, bus: "Bus", topic: str, callback):
        self._bus = bus
        self.topic = topic
        self.callback = callback

    def unsubscribe(self) -> None:
        self._bus._remove(self)


class Bus:
    """Topic registry plus synchronous fan-out delivery."""

    def __init__(self, clock: Callable[[], float] = time.time):
        self.clock = clock
        self._lock = threading.Lock()
        self._schemas: dict[str, type] = {}
        self._order: list[str] = []
        self._subs: dict[str, list[Subscription]] = {}

    def register(self, topic: str, schema: type) -> None:
        """Declare a topic; re-registering with the same schema is a no-op."""
        with self._lock:
            existing = self._schemas.get(topic)
            if existing is not None:
                if existing is not schema:
                    raise SchemaMismatch(
                        f"topic {topic} already registered with {existing.__name__}")
                return
            self._schemas[topic] = schema
            self._order.append(topic)
            self._subs[topic] = []

    def topics(self) -> list[tuple[str, type]]:
        """Registered (name, schema) pairs in registration order."""
        with self._lock:
            return [(t, self._schemas[t]) for t in self._order]

    def schema(self, topic: str) -> type:
        with self._lock:
            if topic not in self._schemas:
                raise UnknownTopic(topic)
            return self._schemas[topic]

    def subscribe(self, topic: str, callback: Callable[[TopicMessage], None]) -> Subscription:
        with self._lock:
            if topic not in self._schemas:
                raise UnknownTopic(topic)
            sub = Subscription(self, topic, callback)
            self._subs[topic].append(sub)
            return sub

    def publish(self, topic: str, payload, stamp: float | None = None) -> int:
        """Deliver to all current subscribers; returns how many were reached."""
        with self._lock:
            schema = self._schemas.get(topic)
            if schema is None:
                raise UnknownTopic(topic)
            if not isinstance(payload, schema):
                raise SchemaMismatch(
                    f"topic {topic} expects {schema.__name__}, got {type(payload).__name__}")
            subs = list(self._subs[topic])
        msg = TopicMessage(topic, self.clock() if stamp is None else stamp, payload)
        for sub in subs:
            sub.callback(msg)
        return len(subs)

    def _remove(self, sub: Subscription) -> None:
        with self._lock:
            subs = self._subs.get(sub.topic, [])
            if sub in subs:
                subs.remove(sub)
