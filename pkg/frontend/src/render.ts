/**
 * Live-view rendering: the occupancy grid in the same 0/205/254 palette as
 * the saved PGM files, lidar points, the trajectory polyline, the robot
 * marker, and the localization particle cloud.
 *
 * The geometry helpers are pure so they can be unit-tested without a DOM;
 * LiveView owns the canvas.
 */

export interface MapMsg {
  resolution: number;
  width: number;
  height: number;
  origin: [number, number, number];
  pixels: number[]; // row-major from the lowest-y row, 0 | 205 | 254
}

export interface ScanMsg {
  angle_min: number;
  angle_increment: number;
  ranges: Array<number | null>;
  range_max: number;
}

export interface PoseMsg {
  x: number;
  y: number;
  theta: number;
}

/** Grid pixels -> RGBA image data, mirroring the PGM gray levels. */
export function mapToRgba(map: MapMsg): Uint8ClampedArray {
  const out = new Uint8ClampedArray(map.width * map.height * 4);
  for (let i = 0; i < map.pixels.length; i++) {
    const value = map.pixels[i];
    // image rows draw top-down while grid rows grow upward: flip y
    const row = Math.floor(i / map.width);
    const col = i % map.width;
    const j = ((map.height - 1 - row) * map.width + col) * 4;
    out[j] = out[j + 1] = out[j + 2] = value;
    out[j + 3] = 255;
  }
  return out;
}

// fixed unit-disc offsets scaled by the pose covariance: the estimate
// cluster rendering for /amcl_pose (pose + 3x3 covariance, no raw cloud)
const CLUSTER_OFFSETS: Array<[number, number]> = [];
for (let ring = 1; ring <= 3; ring++) {
  for (let k = 0; k < 12 * ring; k++) {
    const angle = (2 * Math.PI * k) / (12 * ring);
    CLUSTER_OFFSETS.push([
      (ring / 3) * Math.cos(angle),
      (ring / 3) * Math.sin(angle),
    ]);
  }
}

/** 2-sigma scatter of the estimate from its row-major 3x3 covariance. */
export function covarianceCluster(
  pose: { x: number; y: number },
  covariance: number[],
): Array<[number, number]> {
  const a = Math.max(covariance[0], 1e-8);
  const b = covariance[1];
  const c = Math.max(covariance[4], 1e-8);
  // Cholesky of the xy block
  const l00 = Math.sqrt(a);
  const l10 = b / l00;
  const l11 = Math.sqrt(Math.max(c - l10 * l10, 1e-10));
  return CLUSTER_OFFSETS.map(([ux, uy]) => [
    pose.x + 2 * (l00 * ux),
    pose.y + 2 * (l10 * ux + l11 * uy),
  ]);
}

/** Finite beams of a scan as world-frame points for the given robot pose. */
export function scanToWorldPoints(scan: ScanMsg, pose: PoseMsg): Array<[number, number]> {
  const points: Array<[number, number]> = [];
  for (let i = 0; i < scan.ranges.length; i++) {
    const r = scan.ranges[i];
    if (r === null || !isFinite(r)) continue; // no-return beams
    const angle = pose.theta + scan.angle_min + i * scan.angle_increment;
    points.push([pose.x + r * Math.cos(angle), pose.y + r * Math.sin(angle)]);
  }
  return points;
}

/** World (x, y) -> canvas pixel transform (y up in world, down on canvas). */
export class Viewport {
  constructor(
    public originX: number,
    public originY: number,
    public scale: number, // canvas pixels per meter
    public canvasHeight: number,
  ) {}

  static fit(map: MapMsg, canvasWidth: number, canvasHeight: number): Viewport {
    const scale = Math.min(
      canvasWidth / (map.width * map.resolution),
      canvasHeight / (map.height * map.resolution),
    );
    return new Viewport(map.origin[0], map.origin[1], scale, canvasHeight);
  }

  toCanvas(x: number, y: number): [number, number] {
    return [
      (x - this.originX) * this.scale,
      this.canvasHeight - (y - this.originY) * this.scale,
    ];
  }
}

export class LiveView {
  private trajectory: Array<[number, number]> = [];
  private mapLayer: OffscreenCanvas | null = null;
  private mapMeta: MapMsg | null = null;
  private mapSeq = -1;
  private viewport: Viewport | null = null;

  constructor(private canvas: HTMLCanvasElement) {}

  /** Rebuild the cached map layer only when a new /map message arrived. */
  setMap(map: MapMsg, seq: number): void {
    if (seq === this.mapSeq) return;
    this.mapSeq = seq;
    this.mapMeta = map;
    this.mapLayer = new OffscreenCanvas(map.width, map.height);
    this.mapLayer.getContext("2d")!.putImageData(
      new ImageData(mapToRgba(map), map.width, map.height), 0, 0);
    this.viewport = Viewport.fit(map, this.canvas.width, this.canvas.height);
  }

  pushPose(pose: PoseMsg): void {
    this.trajectory.push([pose.x, pose.y]);
    if (this.trajectory.length > 5000) this.trajectory.shift();
  }

  draw(pose: PoseMsg | null, scan: ScanMsg | null,
       particles: Array<[number, number]> | null): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.fillStyle = "#333";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.viewport === null) {
      // no map yet: a default 10 m viewport centered on the origin
      this.viewport = new Viewport(-5, -5, this.canvas.width / 10, this.canvas.height);
    }
    const view = this.viewport;
    if (this.mapLayer && this.mapMeta) {
      const widthM = this.mapMeta.width * this.mapMeta.resolution;
      const heightM = this.mapMeta.height * this.mapMeta.resolution;
      const [left, top] = view.toCanvas(this.mapMeta.origin[0],
                                        this.mapMeta.origin[1] + heightM);
      ctx.imageSmoothingEnabled = false;
      ctx.drawImage(this.mapLayer, left, top,
                    widthM * view.scale, heightM * view.scale);
    }
    if (this.trajectory.length > 1) {
      ctx.strokeStyle = "#3c6";
      ctx.beginPath();
      this.trajectory.forEach(([x, y], i) => {
        const [cx, cy] = view.toCanvas(x, y);
        if (i === 0) ctx.moveTo(cx, cy);
        else ctx.lineTo(cx, cy);
      });
      ctx.stroke();
    }
    if (particles) {
      ctx.fillStyle = "rgba(40, 160, 70, 0.6)";
      for (const [x, y] of particles) {
        const [cx, cy] = view.toCanvas(x, y);
        ctx.fillRect(cx - 1, cy - 1, 2, 2);
      }
    }
    if (scan && pose) {
      ctx.fillStyle = "#e55";
      for (const [x, y] of scanToWorldPoints(scan, pose)) {
        const [cx, cy] = view.toCanvas(x, y);
        ctx.fillRect(cx - 1, cy - 1, 2, 2);
      }
    }
    if (pose) {
      const [cx, cy] = view.toCanvas(pose.x, pose.y);
      ctx.fillStyle = "#4af";
      ctx.beginPath();
      ctx.arc(cx, cy, 6, 0, 2 * Math.PI);
      ctx.fill();
      ctx.strokeStyle = "#fff";
      ctx.beginPath();
      ctx.moveTo(cx, cy);
      // canvas y points down: negate the heading for drawing
      ctx.lineTo(cx + 12 * Math.cos(-pose.theta), cy + 12 * Math.sin(-pose.theta));
      ctx.stroke();
    }
  }
}
