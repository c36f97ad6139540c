import { test } from "node:test";
import assert from "node:assert/strict";

import { JoystickModel, stickToTwist } from "../src/joystick.js";

const LIMITS = { vMax: 1.0, omegaMax: 1.0 };

test("stick mapping: centered is zero, axes map linearly", () => {
  assert.deepEqual(stickToTwist(0, 0, LIMITS), { v: 0, omega: -0 });
  assert.deepEqual(stickToTwist(0, 1, LIMITS), { v: 1, omega: -0 });
  assert.deepEqual(stickToTwist(0, -0.5, LIMITS), { v: -0.5, omega: -0 });
  // stick right turns clockwise: negative omega
  assert.equal(stickToTwist(1, 0, LIMITS).omega, -1);
  assert.equal(stickToTwist(-0.25, 0, LIMITS).omega, 0.25);
});

test("stick mapping clamps beyond the rim", () => {
  const twist = stickToTwist(3, -4, { vMax: 0.8, omegaMax: 1.2 });
  assert.equal(twist.v, -0.8);
  assert.equal(twist.omega, -1.2);
});

test("engage publishes immediately and ticks republish", () => {
  const published: Array<[number, number]> = [];
  const model = new JoystickModel(LIMITS, (v, o) => published.push([v, o]), false);
  model.engage(0, 0.6);
  assert.deepEqual(published, [[0.6, -0]]);
  model.move(0.5, 0.6);
  model.tick();
  model.tick();
  assert.equal(published.length, 3);
  assert.deepEqual(published[2], [0.6, -0.5]);
});

test("release snaps to zero and publishes it exactly once, immediately", () => {
  const published: Array<[number, number]> = [];
  const model = new JoystickModel(LIMITS, (v, o) => published.push([v, o]), false);
  model.engage(0.2, 0.9);
  model.release();
  assert.deepEqual(published[published.length - 1], [0, 0]);
  const count = published.length;
  model.tick(); // disengaged: no further publishes
  model.tick();
  assert.equal(published.length, count);
  assert.deepEqual(model.position, { x: 0, y: 0, engaged: false });
});

test("move before engage is ignored", () => {
  const published: Array<[number, number]> = [];
  const model = new JoystickModel(LIMITS, (v, o) => published.push([v, o]), false);
  model.move(1, 1);
  model.tick();
  assert.equal(published.length, 0);
});

test("scheduled publishing runs at 10 Hz while engaged", async () => {
  const published: Array<[number, number]> = [];
  const model = new JoystickModel(LIMITS, (v, o) => published.push([v, o]));
  model.engage(0, 1);
  await new Promise((resolve) => setTimeout(resolve, 1050));
  model.release();
  // 1 immediate + ~10 ticks + 1 release; allow scheduler jitter
  assert.ok(published.length >= 9 && published.length <= 15,
            `expected ~12 publishes, got ${published.length}`);
  assert.deepEqual(published[published.length - 1], [0, 0]);
  const count = published.length;
  await new Promise((resolve) => setTimeout(resolve, 250));
  assert.equal(published.length, count, "timer keeps firing after release");
});
