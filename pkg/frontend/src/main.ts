/**
 * Page wiring: connect to a simulation session's WebSocket bridge, hook up
 * the joystick, the live map/scan view, and the stability dashboard.
 */

import { BridgeClient } from "./wire.js";
import { JoystickWidget } from "./joystick.js";
import { LiveView, covarianceCluster } from "./render.js";
import { StabilityDashboard } from "./dashboard.js";

const V_MAX_CMD = 1.0;
const OMEGA_MAX_CMD = 1.0;

function element<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function defaultUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("bridge") ?? "ws://127.0.0.1:9090";
}

function start(): void {
  const url = defaultUrl();
  const status = element<HTMLSpanElement>("status");
  const client = new BridgeClient(url);
  status.textContent = `connecting to ${url}`;
  client.onclose = () => {
    status.textContent = "disconnected";
    status.className = "bad";
  };

  // the panel only ever *publishes* /cmd_vel; everything else is read-only
  const joystick = new JoystickWidget(
    element<HTMLCanvasElement>("joystick"),
    { vMax: V_MAX_CMD, omegaMax: OMEGA_MAX_CMD },
    (v, omega) => client.publish("/cmd_vel", { v, omega }),
  );
  window.addEventListener("blur", () => joystick.model.release());

  const view = new LiveView(element<HTMLCanvasElement>("view"));
  const dashboard = new StabilityDashboard(element<HTMLCanvasElement>("dashboard"));

  for (const topic of ["/map", "/scan", "/odom", "/amcl_pose", "/tf"]) {
    client.subscribe(topic);
  }
  client.subscribe("/stability", (msg, stamp) => dashboard.push(stamp, msg));
  client.subscribe("/odom", (msg) => view.pushPose(msg.pose));
  client.subscribe("/scan", () => {
    status.textContent = `live @ ${url}`;
    status.className = "ok";
  });

  const frame = () => {
    const map = client.latest("/map");
    if (map) view.setMap(map.msg, map.seq);
    const odom = client.latest("/odom");
    const scan = client.latest("/scan");
    const amcl = client.latest("/amcl_pose");
    const cloud = amcl ? covarianceCluster(amcl.msg.pose, amcl.msg.covariance) : null;
    view.draw(odom ? odom.msg.pose : null, scan ? scan.msg : null, cloud);
    dashboard.draw();
    const twist = client.latest("/cmd_vel");
    if (twist) {
      element<HTMLSpanElement>("cmd").textContent =
        `v=${twist.msg.v.toFixed(2)} m/s  omega=${twist.msg.omega.toFixed(2)} rad/s`;
    }
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

start();
