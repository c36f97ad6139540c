/**
 * Stability dashboard: strip charts of commanded v and omega plus the
 * stability flag, with unstable intervals highlighted.
 */

export interface StabilitySampleMsg {
  v_cmd: number;
  omega_cmd: number;
  ax: number;
  ay: number;
  gz: number;
  flag: string;
}

export interface Sample {
  t: number;
  value: number;
}

export class SeriesBuffer {
  private samples: Sample[] = [];

  constructor(private windowSeconds: number = 30) {}

  push(t: number, value: number): void {
    this.samples.push({ t, value });
    const cutoff = t - this.windowSeconds;
    while (this.samples.length && this.samples[0].t < cutoff) {
      this.samples.shift();
    }
  }

  get data(): readonly Sample[] {
    return this.samples;
  }

  extent(): { t0: number; t1: number; lo: number; hi: number } | null {
    if (!this.samples.length) return null;
    let lo = Infinity;
    let hi = -Infinity;
    for (const s of this.samples) {
      lo = Math.min(lo, s.value);
      hi = Math.max(hi, s.value);
    }
    return { t0: this.samples[0].t, t1: this.samples[this.samples.length - 1].t, lo, hi };
  }
}

export interface FlagSample {
  t: number;
  flag: string;
}

/** Merge consecutive non-"stable" samples into [start, end] intervals. */
export function unstableIntervals(samples: readonly FlagSample[]): Array<[number, number]> {
  const intervals: Array<[number, number]> = [];
  let start: number | null = null;
  let last = 0;
  for (const s of samples) {
    if (s.flag !== "stable") {
      if (start === null) start = s.t;
      last = s.t;
    } else if (start !== null) {
      intervals.push([start, last]);
      start = null;
    }
  }
  if (start !== null) intervals.push([start, last]);
  return intervals;
}

export class StabilityDashboard {
  readonly v = new SeriesBuffer();
  readonly omega = new SeriesBuffer();
  private flags: FlagSample[] = [];

  constructor(private canvas: HTMLCanvasElement, private windowSeconds = 30) {}

  push(stamp: number, sample: StabilitySampleMsg): void {
    this.v.push(stamp, sample.v_cmd);
    this.omega.push(stamp, sample.omega_cmd);
    this.flags.push({ t: stamp, flag: sample.flag });
    const cutoff = stamp - this.windowSeconds;
    while (this.flags.length && this.flags[0].t < cutoff) this.flags.shift();
  }

  get currentFlag(): string {
    return this.flags.length ? this.flags[this.flags.length - 1].flag : "stable";
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = "#222";
    ctx.fillRect(0, 0, width, height);
    const extent = this.v.extent();
    if (!extent) return;
    const t0 = extent.t0;
    const span = Math.max(extent.t1 - t0, 1e-6);
    const toX = (t: number) => ((t - t0) / span) * width;
    // red bands where the platform reported tipping or sliding
    ctx.fillStyle = "rgba(220, 60, 60, 0.25)";
    for (const [a, b] of unstableIntervals(this.flags)) {
      ctx.fillRect(toX(a), 0, Math.max(toX(b) - toX(a), 2), height);
    }
    this.strip(ctx, this.v, "#4af", 0, height / 2, toX);
    this.strip(ctx, this.omega, "#fa4", height / 2, height / 2, toX);
    ctx.fillStyle = "#ccc";
    ctx.font = "12px sans-serif";
    ctx.fillText("v [m/s]", 6, 14);
    ctx.fillText("omega [rad/s]", 6, height / 2 + 14);
  }

  private strip(ctx: CanvasRenderingContext2D, series: SeriesBuffer,
                color: string, top: number, h: number, toX: (t: number) => number): void {
    const extent = series.extent();
    if (!extent) return;
    const lo = Math.min(extent.lo, 0);
    const hi = Math.max(extent.hi, 1e-6);
    const toY = (v: number) => top + h - ((v - lo) / (hi - lo || 1)) * (h - 8) - 4;
    ctx.strokeStyle = color;
    ctx.beginPath();
    series.data.forEach((s, i) => {
      if (i === 0) ctx.moveTo(toX(s.t), toY(s.value));
      else ctx.lineTo(toX(s.t), toY(s.value));
    });
    ctx.stroke();
  }
}
