import { describe, expect, it } from "vitest";

import {
  classColorMap,
  counterText,
  initialViewState,
  legendEntries,
  pointColor,
  pointRadius,
  shortcutMap,
} from "../src/state.js";
import { UNLABELED_COLOR } from "../src/types.js";
import { DEFAULT_CLASSES, MockServer } from "./mockserver.js";

describe("pointRadius", () => {
  it("is monotone non-decreasing in zoom", () => {
    let previous = 0;
    for (const zoom of [0.2, 0.5, 1, 2, 4, 8, 16, 100]) {
      const radius = pointRadius(zoom);
      expect(radius).toBeGreaterThanOrEqual(previous);
      previous = radius;
    }
  });

  it("is strictly larger at 4x zoom than at 1x", () => {
    expect(pointRadius(4)).toBeGreaterThan(pointRadius(1));
  });

  it("is clamped to a sane range", () => {
    expect(pointRadius(1e-9)).toBeGreaterThanOrEqual(0.5);
    expect(pointRadius(1e9)).toBeLessThanOrEqual(14);
  });
});

describe("pointColor", () => {
  const colors = classColorMap(DEFAULT_CLASSES);

  it("is green for unlabeled points", () => {
    expect(pointColor(new Map(), colors, 3)).toBe(UNLABELED_COLOR);
  });

  it("uses the class color for labeled points", () => {
    const labels = new Map([[3, "beta"]]);
    expect(pointColor(labels, colors, 3)).toBe("#ff7f0e");
    expect(pointColor(labels, colors, 4)).toBe(UNLABELED_COLOR);
  });
});

describe("shortcutMap", () => {
  it("exactly equals the scheme's declared shortcuts", () => {
    const map = shortcutMap(DEFAULT_CLASSES);
    expect([...map.entries()]).toEqual([
      ["1", "alpha"],
      ["2", "beta"],
      ["3", "gamma"],
    ]);
  });
});

describe("legendEntries", () => {
  it("lists class colors and shortcuts plus the unlabeled entry", () => {
    const rows = legendEntries(DEFAULT_CLASSES);
    expect(rows).toHaveLength(4);
    expect(rows[1]).toEqual({
      label: "Beta",
      color: "#ff7f0e",
      shortcut: "2",
      classId: "beta",
    });
    expect(rows[3].label).toBe("unlabeled");
    expect(rows[3].color).toBe(UNLABELED_COLOR);
  });
});

describe("view state", () => {
  it("initializes from a session view and renders counters", () => {
    const server = new MockServer({ nSamples: 30, budget: 5 });
    server.labels.set(2, "alpha");
    server.labelOrder.push(2);
    const state = initialViewState(server.view(), "pca");
    expect(state.labels.get(2)).toBe("alpha");
    expect(state.labeledCount).toBe(1);
    expect(counterText(state)).toBe("1 / 5 labeled (30 samples)");
  });
});
