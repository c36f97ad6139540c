import { test } from "node:test";
import assert from "node:assert/strict";

import { BridgeClient, SocketLike } from "../src/wire.js";

class FakeSocket implements SocketLike {
  readyState = 0;
  sent: string[] = [];
  handlers = new Map<string, Array<(event: any) => void>>();

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.fire("close", {});
  }

  addEventListener(type: string, handler: (event: any) => void): void {
    const list = this.handlers.get(type) ?? [];
    list.push(handler);
    this.handlers.set(type, list);
  }

  fire(type: string, event: any): void {
    for (const handler of this.handlers.get(type) ?? []) handler(event);
  }
}

function connected(): [BridgeClient, FakeSocket] {
  let socket!: FakeSocket;
  const client = new BridgeClient("ws://test", (_url) => {
    socket = new FakeSocket();
    return socket;
  });
  socket.readyState = 1;
  socket.fire("open", {});
  return [client, socket];
}

test("subscribe and publish emit protocol JSON", () => {
  const [client, socket] = connected();
  client.subscribe("/scan");
  client.publish("/cmd_vel", { v: 0.5, omega: 0 });
  assert.deepEqual(socket.sent.map((s) => JSON.parse(s)), [
    { op: "subscribe", topic: "/scan" },
    { op: "publish", topic: "/cmd_vel", msg: { v: 0.5, omega: 0 } },
  ]);
});

test("messages before open are queued, then flushed in order", () => {
  let socket!: FakeSocket;
  const client = new BridgeClient("ws://test", () => (socket = new FakeSocket()));
  client.subscribe("/scan");
  client.publish("/cmd_vel", { v: 1, omega: 0 });
  assert.equal(socket.sent.length, 0);
  socket.fire("open", {});
  assert.equal(socket.sent.length, 2);
  assert.equal(JSON.parse(socket.sent[0]).op, "subscribe");
});

test("incoming messages update the latest-value cache and bump seq", () => {
  const [client, socket] = connected();
  socket.fire("message", { data: JSON.stringify({ topic: "/odom", stamp: 1.5, msg: { x: 2 } }) });
  const first = client.latest("/odom");
  assert.equal(first?.stamp, 1.5);
  assert.equal(first?.seq, 1);
  socket.fire("message", { data: JSON.stringify({ topic: "/odom", stamp: 1.6, msg: { x: 3 } }) });
  const second = client.latest("/odom");
  assert.equal(second?.msg.x, 3);
  assert.equal(second?.seq, 2);
});

test("handlers run per arrival; malformed input is ignored", () => {
  const [client, socket] = connected();
  const seen: number[] = [];
  client.subscribe("/scan", (_msg, stamp) => seen.push(stamp));
  socket.fire("message", { data: "not json" });
  socket.fire("message", { data: JSON.stringify({ nope: 1 }) });
  socket.fire("message", { data: JSON.stringify({ topic: "/scan", stamp: 4, msg: {} }) });
  assert.deepEqual(seen, [4]);
});

test("close propagates to the onclose hook", () => {
  const [client, socket] = connected();
  let closed = false;
  client.onclose = () => (closed = true);
  socket.fire("close", {});
  assert.ok(closed);
});
