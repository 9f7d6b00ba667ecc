/** Frame-timing harness: renders a synthetic 100k-point cloud and measures
 * fps during a scripted pan.  Open perf.html on target hardware; the page
 * reports mean/min fps over a 5-second pan with every point drawn.
 */

import { ScatterView } from "./scatter.js";
import { initialViewState } from "./state.js";
import type { SessionView } from "./types.js";

const N = 100_000;

function syntheticCoords(n: number): Float32Array {
  const coords = new Float32Array(2 * n);
  let seed = 42;
  const rand = () => {
    // xorshift: deterministic, no dependencies
    seed ^= seed << 13;
    seed ^= seed >>> 17;
    seed ^= seed << 5;
    return ((seed >>> 0) / 0xffffffff) * 2 - 1;
  };
  for (let i = 0; i < 2 * n; i++) coords[i] = rand() * 100;
  return coords;
}

function fakeView(n: number): SessionView {
  return {
    session_id: "perf",
    config: {
      dataset_name: "perf",
      track: "t",
      method: "2DV",
      budget: n,
      seed: 0,
      annotator_id: "perf",
      annotator_group: "expert",
    },
    status: "active",
    labeled_count: 0,
    total_count: n,
    current: { index: 0, sample_id: "s0" },
    queue: [],
    order_length: 0,
    labels: {},
  };
}

function run(): void {
  const canvas = document.getElementById("perf-canvas") as HTMLCanvasElement;
  const out = document.getElementById("perf-out")!;
  const ctx = canvas.getContext("2d")!;
  const coords = syntheticCoords(N);
  const view = new ScatterView(coords, canvas.width, canvas.height);
  const state = initialViewState(fakeView(N), "synthetic");
  const colors = new Map([["a", "#1f77b4"], ["b", "#ff7f0e"]]);
  for (let i = 0; i < N; i += 3) state.labels.set(i, i % 6 ? "a" : "b");
  state.zoom = 2;

  const frameTimes: number[] = [];
  let last = performance.now();
  const deadline = last + 5000;

  function frame(now: number): void {
    state.panX = 30 * Math.sin(now / 700);
    state.panY = 20 * Math.cos(now / 900);
    const stats = view.draw(ctx, state, colors);
    frameTimes.push(now - last);
    last = now;
    if (now < deadline) {
      requestAnimationFrame(frame);
    } else {
      frameTimes.shift();
      const mean = frameTimes.reduce((a, b) => a + b, 0) / frameTimes.length;
      const worst = Math.max(...frameTimes);
      out.textContent =
        `points drawn per frame: ${stats.drawnPoints} (no decimation)\n` +
        `frames: ${frameTimes.length}\n` +
        `mean fps: ${(1000 / mean).toFixed(1)}\n` +
        `worst-frame fps: ${(1000 / worst).toFixed(1)}\n` +
        `target: >= 20 fps during pan`;
    }
  }

  requestAnimationFrame(frame);
}

run();
