/** Canvas scatter renderer: every point drawn each frame, no decimation.
 *
 * Points are batched per color into a single fill call each; below a small
 * radius they are drawn as squares (much cheaper than arcs), which keeps a
 * full 10^5-point redraw inside a pan frame budget.  The current sample is
 * highlighted with a large yellow ring.
 */

import { SpatialGrid } from "./grid.js";
import { pointColor, pointRadius, type ViewState } from "./state.js";
import { UNLABELED_COLOR } from "./types.js";

/** The subset of CanvasRenderingContext2D the renderer needs. */
export interface DrawContext {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  rect(x: number, y: number, w: number, h: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  fill(): void;
  stroke(): void;
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

export const HIGHLIGHT_COLOR = "#ffd700";
const CIRCLE_RADIUS_THRESHOLD = 2.5;

export interface FrameStats {
  drawnPoints: number;
  colorBatches: number;
}

export class ScatterView {
  private grid: SpatialGrid;
  private baseScale = 1;
  private centerX = 0;
  private centerY = 0;

  constructor(
    private coords: Float32Array,
    private readonly width: number,
    private readonly height: number,
  ) {
    this.grid = new SpatialGrid(coords);
    this.fit();
  }

  get pointCount(): number {
    return this.coords.length / 2;
  }

  /** Swap in another projection's coordinates; view-only change. */
  setCoords(coords: Float32Array): void {
    if (coords.length !== this.coords.length) {
      throw new Error(
        `coordinate count changed: ${coords.length / 2} vs ${this.coords.length / 2}`,
      );
    }
    this.coords = coords;
    this.grid = new SpatialGrid(coords);
    this.fit();
  }

  private fit(): void {
    const { minX, minY, maxX, maxY } = this.grid;
    this.centerX = (minX + maxX) / 2;
    this.centerY = (minY + maxY) / 2;
    const span = Math.max(maxX - minX, maxY - minY, 1e-9);
    this.baseScale = (0.9 * Math.min(this.width, this.height)) / span;
  }

  toScreen(state: ViewState, i: number): [number, number] {
    const scale = this.baseScale * state.zoom;
    const x = (this.coords[2 * i] - this.centerX - state.panX) * scale + this.width / 2;
    const y = (this.coords[2 * i + 1] - this.centerY - state.panY) * scale + this.height / 2;
    return [x, y];
  }

  /** Data-space position of a screen point (for clicks and pans). */
  toData(state: ViewState, sx: number, sy: number): [number, number] {
    const scale = this.baseScale * state.zoom;
    return [
      (sx - this.width / 2) / scale + this.centerX + state.panX,
      (sy - this.height / 2) / scale + this.centerY + state.panY,
    ];
  }

  /** Nearest point within `tolerancePx` of a screen position, or null. */
  hitTest(state: ViewState, sx: number, sy: number, tolerancePx = 6): number | null {
    const [dx, dy] = this.toData(state, sx, sy);
    const radius =
      (tolerancePx + pointRadius(state.zoom)) / (this.baseScale * state.zoom);
    return this.grid.nearest(dx, dy, radius);
  }

  /** Redraw every point; returns stats so tests can assert no decimation. */
  draw(ctx: DrawContext, state: ViewState, colors: Map<string, string>): FrameStats {
    ctx.clearRect(0, 0, this.width, this.height);
    const n = this.pointCount;
    const radius = pointRadius(state.zoom);
    const scale = this.baseScale * state.zoom;
    const offsetX = this.width / 2 - (this.centerX + state.panX) * scale;
    const offsetY = this.height / 2 - (this.centerY + state.panY) * scale;
    const asCircles = radius >= CIRCLE_RADIUS_THRESHOLD;

    // one pass over the points, one fill per distinct color
    const batches = new Map<string, number[]>();
    let drawn = 0;
    for (let i = 0; i < n; i++) {
      const label = state.labels.get(i);
      if (label !== undefined && state.hiddenClasses.has(label)) continue;
      const color = pointColor(state.labels, colors, i);
      let bucket = batches.get(color);
      if (!bucket) {
        bucket = [];
        batches.set(color, bucket);
      }
      bucket.push(i);
      drawn++;
    }
    for (const [color, bucket] of batches) {
      ctx.beginPath();
      for (const i of bucket) {
        const x = this.coords[2 * i] * scale + offsetX;
        const y = this.coords[2 * i + 1] * scale + offsetY;
        if (asCircles) {
          ctx.moveTo(x + radius, y);
          ctx.arc(x, y, radius, 0, 2 * Math.PI);
        } else {
          ctx.rect(x - radius, y - radius, 2 * radius, 2 * radius);
        }
      }
      ctx.fillStyle = color;
      ctx.fill();
    }

    if (state.currentIndex !== null && state.currentIndex < n) {
      const [x, y] = this.toScreen(state, state.currentIndex);
      ctx.beginPath();
      ctx.arc(x, y, radius + 5, 0, 2 * Math.PI);
      ctx.strokeStyle = HIGHLIGHT_COLOR;
      ctx.lineWidth = 3;
      ctx.stroke();
    }
    return { drawnPoints: drawn, colorBatches: batches.size };
  }
}

export { UNLABELED_COLOR };
