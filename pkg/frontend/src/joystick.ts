/**
 * Virtual joystick: position-proportional twist commands.
 *
 * Stick up = forward (+v), stick right = clockwise (-omega). While the
 * stick is engaged the current command is published at a fixed 10 Hz;
 * releasing snaps to zero and publishes (0, 0) immediately (dead-man
 * behavior, backed by the server-side watchdog).
 */

export interface JoystickLimits {
  vMax: number;
  omegaMax: number;
}

export type TwistPublisher = (v: number, omega: number) => void;

const PUBLISH_PERIOD_MS = 100; // 10 Hz

function clamp(value: number): number {
  return Math.max(-1, Math.min(1, value));
}

/** Normalized stick position -> twist. Exposed for tests and the widget. */
export function stickToTwist(x: number, y: number, limits: JoystickLimits) {
  return { v: limits.vMax * clamp(y), omega: -limits.omegaMax * clamp(x) };
}

export class JoystickModel {
  private engaged = false;
  private x = 0;
  private y = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private limits: JoystickLimits,
    private publish: TwistPublisher,
    private schedule: boolean = true,
  ) {}

  get position() {
    return { x: this.x, y: this.y, engaged: this.engaged };
  }

  engage(x: number, y: number): void {
    this.engaged = true;
    this.move(x, y);
    this.publishCurrent();
    if (this.schedule && this.timer === null) {
      this.timer = setInterval(() => this.tick(), PUBLISH_PERIOD_MS);
    }
  }

  move(x: number, y: number): void {
    if (!this.engaged) return;
    this.x = clamp(x);
    this.y = clamp(y);
  }

  /** Periodic publish while engaged; no-op after release. */
  tick(): void {
    if (this.engaged) this.publishCurrent();
  }

  release(): void {
    if (!this.engaged && this.x === 0 && this.y === 0) return;
    this.engaged = false;
    this.x = 0;
    this.y = 0;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.publish(0, 0); // immediate stop, not deferred to the next tick
  }

  private publishCurrent(): void {
    const { v, omega } = stickToTwist(this.x, this.y, this.limits);
    this.publish(v, omega);
  }
}

/** Canvas-drawn joystick widget wiring pointer events to a JoystickModel. */
export class JoystickWidget {
  readonly model: JoystickModel;

  constructor(
    private canvas: HTMLCanvasElement,
    limits: JoystickLimits,
    publish: TwistPublisher,
  ) {
    this.model = new JoystickModel(limits, publish);
    canvas.addEventListener("pointerdown", (e) => {
      canvas.setPointerCapture(e.pointerId);
      const { x, y } = this.toStick(e);
      this.model.engage(x, y);
      this.draw();
    });
    canvas.addEventListener("pointermove", (e) => {
      const { x, y } = this.toStick(e);
      this.model.move(x, y);
      this.draw();
    });
    const stop = () => {
      this.model.release();
      this.draw();
    };
    canvas.addEventListener("pointerup", stop);
    canvas.addEventListener("pointercancel", stop);
    window.addEventListener("blur", stop); // dead-man on tab switch
    this.draw();
  }

  private toStick(e: PointerEvent): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    const half = Math.min(rect.width, rect.height) / 2;
    return {
      x: (e.clientX - rect.left - rect.width / 2) / half,
      y: -(e.clientY - rect.top - rect.height / 2) / half, // screen y is down
    };
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    const half = Math.min(width, height) / 2;
    ctx.clearRect(0, 0, width, height);
    ctx.strokeStyle = "#888";
    ctx.beginPath();
    ctx.arc(width / 2, height / 2, half - 4, 0, 2 * Math.PI);
    ctx.stroke();
    const pos = this.model.position;
    ctx.fillStyle = pos.engaged ? "#2a7" : "#555";
    ctx.beginPath();
    ctx.arc(
      width / 2 + pos.x * (half - 18),
      height / 2 - pos.y * (half - 18),
      14, 0, 2 * Math.PI,
    );
    ctx.fill();
  }
}
