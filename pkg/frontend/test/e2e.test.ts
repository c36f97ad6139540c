/**
 * End-to-end smoke against a real simulation session: spawn
 * `rovertwin sim --serve 0`, connect through the WebSocket bridge, drive
 * a scripted joystick drag, and watch the sensor topics stream back.
 *
 * Needs the Python package on PATH (pip install -e ..) and Node's
 * WebSocket client (--experimental-websocket on Node 20).
 */

import { test } from "node:test";
import assert from "node:assert/strict";
import { spawn, ChildProcess } from "node:child_process";

import { BridgeClient } from "../src/wire.js";
import { JoystickModel } from "../src/joystick.js";
import { MapMsg, mapToRgba } from "../src/render.js";

const COMMAND = process.env.ROVERTWIN_CMD ?? "rovertwin";

function startSession(): Promise<{ child: ChildProcess; url: string }> {
  return new Promise((resolve, reject) => {
    const child = spawn(
      COMMAND, ["sim", "--serve", "0", "--duration", "30", "--seed", "7"],
      { env: { ...process.env, PYTHONUNBUFFERED: "1" } },
    );
    let buffer = "";
    const onData = (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/serving bus on (ws:\/\/[\d.]+:\d+)/);
      if (match) {
        child.stdout?.off("data", onData);
        resolve({ child, url: match[1] });
      }
    };
    child.stdout?.on("data", onData);
    child.on("error", reject);
    child.on("exit", (code) => reject(new Error(`session exited early (${code})`)));
    setTimeout(() => reject(new Error("session did not start in time")), 15000);
  });
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

test("panel smoke: joystick publishes at 10 Hz, sensors stream, renders update", async () => {
  const { child, url } = await startSession();
  try {
    const client = new BridgeClient(url);
    const received: Array<{ v: number; omega: number; at: number }> = [];
    client.subscribe("/cmd_vel", (msg) =>
      received.push({ v: msg.v, omega: msg.omega, at: Date.now() }));
    client.subscribe("/scan");
    client.subscribe("/odom");
    client.subscribe("/map");

    // scans arrive on their own (10 Hz lidar): the render cache goes dirty
    await sleep(700);
    const scanA = client.latest("/scan");
    assert.ok(scanA, "no scan arrived");
    await sleep(350);
    const scanB = client.latest("/scan");
    assert.ok(scanB && scanB.seq > scanA.seq, "scan cache did not refresh");
    assert.ok(scanB.stamp > scanA.stamp);
    assert.ok(scanB.msg.ranges.length === 360);

    // a map message refreshes the map layer (palette render path)
    const map: MapMsg = {
      resolution: 0.5, width: 2, height: 2, origin: [0, 0, 0],
      pixels: [0, 254, 205, 205],
    };
    client.publish("/map", map);
    await sleep(300);
    const mapValue = client.latest("/map");
    assert.ok(mapValue, "map did not round-trip");
    const rgba = mapToRgba(mapValue.msg);
    assert.equal(rgba[8], 0);
    assert.equal(rgba[12], 254);

    // scripted joystick drag: full forward for ~1 s at 10 Hz
    const joystick = new JoystickModel(
      { vMax: 1.0, omegaMax: 1.0 },
      (v, omega) => client.publish("/cmd_vel", { v, omega }),
    );
    const before = received.length;
    joystick.engage(0, 1);
    await sleep(1050);
    joystick.release();
    await sleep(400);
    const during = received.slice(before);
    assert.ok(during.length >= 9 && during.length <= 16,
              `expected ~12 commands, saw ${during.length}`);
    assert.deepEqual(
      { v: during[during.length - 1].v, omega: during[during.length - 1].omega },
      { v: 0, omega: 0 },
      "release must publish an immediate stop");
    assert.ok(during.slice(0, -1).every((m) => m.v === 1.0));

    // the driven robot actually moved: odometry x advanced
    const odom = client.latest("/odom");
    assert.ok(odom && odom.msg.pose.x > 0.2,
              `robot did not move (${JSON.stringify(odom?.msg)})`);
    client.close();
  } finally {
    child.kill("SIGINT");
    await sleep(200);
    child.kill("SIGKILL");
  }
});
