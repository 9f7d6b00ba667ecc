/** View state and the pure helpers that update and query it.
 *
 * The server is the single source of truth for labels and counters: state
 * only changes in response to acknowledged API responses, never ahead of
 * them.
 */

import type { ClassInfo, SessionView } from "./types.js";
import { UNLABELED_COLOR } from "./types.js";

export interface ViewState {
  projection: string;
  zoom: number;                       // multiplicative zoom factor, 1 = fit
  panX: number;                       // data-space offset of the view center
  panY: number;
  currentIndex: number | null;
  queue: number[];
  labels: Map<number, string>;        // server-acknowledged labels only
  labeledCount: number;
  totalCount: number;
  budget: number;
  status: "active" | "complete";
  hiddenClasses: Set<string>;         // legend visibility toggles
}

export function initialViewState(view: SessionView, projection: string): ViewState {
  const labels = new Map<number, string>();
  for (const [idx, value] of Object.entries(view.labels)) {
    labels.set(Number(idx), value);
  }
  return {
    projection,
    zoom: 1,
    panX: 0,
    panY: 0,
    currentIndex: view.current ? view.current.index : null,
    queue: [...view.queue],
    labels,
    labeledCount: view.labeled_count,
    totalCount: view.total_count,
    budget: view.config.budget,
    status: view.status,
    hiddenClasses: new Set(),
  };
}

/** Point radius in CSS pixels: monotone non-decreasing in zoom. */
export function pointRadius(zoom: number, base = 2.0, max = 14): number {
  const radius = base * Math.sqrt(Math.max(zoom, 1e-6));
  return Math.min(Math.max(radius, 0.5), max);
}

export function applyZoom(state: ViewState, factor: number): void {
  state.zoom = Math.min(Math.max(state.zoom * factor, 0.1), 1000);
}

export function applyPan(state: ViewState, dxData: number, dyData: number): void {
  state.panX += dxData;
  state.panY += dyData;
}

/** Color of a point given the confirmed label map; unlabeled points are green. */
export function pointColor(
  labels: Map<number, string>,
  colors: Map<string, string>,
  index: number,
): string {
  const label = labels.get(index);
  if (label === undefined) return UNLABELED_COLOR;
  return colors.get(label) ?? "#666666";
}

export function classColorMap(classes: ClassInfo[]): Map<string, string> {
  return new Map(classes.map((c) => [c.class_id, c.color]));
}

/** Keyboard shortcut map: exactly the scheme's declared shortcuts. */
export function shortcutMap(classes: ClassInfo[]): Map<string, string> {
  return new Map(classes.map((c) => [c.shortcut_key, c.class_id]));
}

export interface LegendEntry {
  label: string;
  color: string;
  shortcut: string | null;
  classId: string | null;
}

/** Legend rows: one per class (color + shortcut) plus the unlabeled entry. */
export function legendEntries(classes: ClassInfo[]): LegendEntry[] {
  const rows: LegendEntry[] = classes.map((c) => ({
    label: c.display_name,
    color: c.color,
    shortcut: c.shortcut_key,
    classId: c.class_id,
  }));
  rows.push({ label: "unlabeled", color: UNLABELED_COLOR, shortcut: null, classId: null });
  return rows;
}

export function counterText(state: ViewState): string {
  return `${state.labeledCount} / ${state.budget} labeled (${state.totalCount} samples)`;
}
