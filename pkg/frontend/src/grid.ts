/** Uniform spatial grid for point hit-testing at 10^5-point scale.
 *
 * Built once per projection; queries walk only the cells overlapping the
 * search radius, so click hit-tests stay sub-millisecond regardless of N.
 */

export class SpatialGrid {
  private readonly cells = new Map<number, number[]>();
  private readonly cellSize: number;
  readonly minX: number;
  readonly minY: number;
  readonly maxX: number;
  readonly maxY: number;
  private readonly columns: number;

  constructor(private readonly coords: Float32Array) {
    const n = coords.length / 2;
    let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
    for (let i = 0; i < n; i++) {
      const x = coords[2 * i];
      const y = coords[2 * i + 1];
      if (x < minX) minX = x;
      if (x > maxX) maxX = x;
      if (y < minY) minY = y;
      if (y > maxY) maxY = y;
    }
    if (n === 0) {
      minX = minY = 0;
      maxX = maxY = 1;
    }
    this.minX = minX;
    this.minY = minY;
    this.maxX = maxX;
    this.maxY = maxY;
    const span = Math.max(maxX - minX, maxY - minY, 1e-9);
    // aim for O(1) points per cell on average
    const target = Math.max(Math.ceil(Math.sqrt(n)), 1);
    this.cellSize = span / target;
    this.columns = target + 1;
    for (let i = 0; i < n; i++) {
      const key = this.key(coords[2 * i], coords[2 * i + 1]);
      const bucket = this.cells.get(key);
      if (bucket) bucket.push(i);
      else this.cells.set(key, [i]);
    }
  }

  private key(x: number, y: number): number {
    const cx = Math.floor((x - this.minX) / this.cellSize);
    const cy = Math.floor((y - this.minY) / this.cellSize);
    return cy * this.columns + cx;
  }

  /** Index of the nearest point within `radius` of (x, y), or null. */
  nearest(x: number, y: number, radius: number): number | null {
    const c0x = Math.floor((x - radius - this.minX) / this.cellSize);
    const c1x = Math.floor((x + radius - this.minX) / this.cellSize);
    const c0y = Math.floor((y - radius - this.minY) / this.cellSize);
    const c1y = Math.floor((y + radius - this.minY) / this.cellSize);
    let best = -1;
    let bestDist = radius * radius;
    for (let cy = c0y; cy <= c1y; cy++) {
      for (let cx = c0x; cx <= c1x; cx++) {
        const bucket = this.cells.get(cy * this.columns + cx);
        if (!bucket) continue;
        for (const i of bucket) {
          const dx = this.coords[2 * i] - x;
          const dy = this.coords[2 * i + 1] - y;
          const d2 = dx * dx + dy * dy;
          if (d2 <= bestDist) {
            bestDist = d2;
            best = i;
          }
        }
      }
    }
    return best >= 0 ? best : null;
  }
}
