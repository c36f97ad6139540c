"""WebSocket bridge between the in-process bus and browser clients.

Wire protocol: each text message is one JSON object.

    client -> server: {"op": "subscribe", "topic": "/scan"}
                      {"op": "publish", "topic": "/cmd_vel", "msg": {...}}
    server -> client: {"topic": "/scan", "stamp": 12.3, "msg": {...}}

Client publishes are stamped on arrival with the bus clock. Each client
owns a bounded send queue (drop-oldest, depth 64) so a slow consumer
sheds its own backlog without stalling bus delivery or other clients.
"""

from __future__ import annotations

import asyncio
import json
import threading
from collections import deque

import websockets

from .bus import Bus, BusError
from .messages import from_jsonable, to_jsonable

QUEUE_DEPTH = 64


class _ClientSession:
    """Per-connection subscription set and bounded outgoing queue."""

    def __init__(self, bus: Bus, loop: asyncio.AbstractEventLoop):
        self.bus = bus
        self.loop = loop
        self.queue: deque = deque(maxlen=QUEUE_DEPTH)
        self.wakeup = asyncio.Event()
        self.subscriptions = []
        self.dropped = 0

    def on_bus_message(self, msg) -> None:
        # called on the publisher's thread; hop into the asyncio loop
        def _enqueue():
            if len(self.queue) == self.queue.maxlen:
                self.dropped += 1
            self.queue.append(msg)
            self.wakeup.set()

        try:
            self.loop.call_soon_threadsafe(_enqueue)
        except RuntimeError:
            pass  # loop already closed mid-shutdown

    def subscribe(self, topic: str) -> None:
        self.subscriptions.append(self.bus.subscribe(topic, self.on_bus_message))

    def close(self) -> None:
        for sub in self.subscriptions:
            sub.unsubscribe()
        self.subscriptions.clear()


class WebSocketBridge:
    """Runs a websockets server on a daemon thread next to the bus."""

    def __init__(self, bus: Bus, host: str = "127.0.0.1", port: int = 0):
        self.bus = bus
        self.host = host
        self.port = port
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._started = threading.Event()
        self._server = None

    # -- lifecycle ------------------------------------------------------

    def start(self) -> "WebSocketBridge":
        self._thread = threading.Thread(target=self._run, name="ws-bridge", daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=10.0):
            raise RuntimeError("bridge failed to start")
        return self

    def stop(self) -> None:
        if self._loop is None:
            return
        loop = self._loop

        async def _shutdown():
            if self._server is not None:
                self._server.close()
                await self._server.wait_closed()
            loop.stop()

        asyncio.run_coroutine_threadsafe(_shutdown(), loop)
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def _run(self) -> None:
        loop = asyncio.new_event_loop()
        asyncio.set_event_loop(loop)
        self._loop = loop

        async def _serve():
            self._server = await websockets.serve(self._handler, self.host, self.port)
            self.port = self._server.sockets[0].getsockname()[1]
            self._started.set()

        loop.run_until_complete(_serve())
        try:
            loop.run_forever()
        finally:
            loop.close()

    @property
    def url(self) -> str:
        return f"ws://{self.host}:{self.port}"

    # -- per-client handling ---------------------------------------------

    async def _handler(self, websocket) -> None:
        session = _ClientSession(self.bus, self._loop)
        sender = asyncio.create_task(self._send_loop(websocket, session))
        try:
            async for raw in websocket:
                self._handle_client_message(session, raw)
        except websockets.ConnectionClosed:
            pass
        finally:
            session.close()
            sender.cancel()

    def _handle_client_message(self, session: _ClientSession, raw: str) -> None:
        # malformed input is isolated to this client: count and carry on
        try:
            obj = json.loads(raw)
            op = obj.get("op")
            topic = obj.get("topic")
            if op == "subscribe":
                session.subscribe(topic)
            elif op == "publish":
                schema = self.bus.schema(topic)
                payload = from_jsonable(schema, obj.get("msg"))
                self.bus.publish(topic, payload)  # stamped on arrival
            else:
                session.dropped += 1
        except (BusError, ValueError, KeyError, TypeError, json.JSONDecodeError):
            session.dropped += 1

    async def _send_loop(self, websocket, session: _ClientSession) -> None:
        while True:
            await session.wakeup.wait()
            session.wakeup.clear()
            while session.queue:
                msg = session.queue.popleft()
                text = json.dumps(
                    {"topic": msg.topic, "stamp": msg.stamp, "msg": to_jsonable(msg.payload)},
                    separators=(",", ":"))
                await websocket.send(text)


def websocket_bridge(bus: Bus, port: int = 0, host: str = "127.0.0.1") -> WebSocketBridge:
    """Start a bridge and return it (``.url`` carries the bound address)."""
    return WebSocketBridge(bus, host, port).start()
