/** Translates user events into API calls and acknowledged state updates.
 *
 * Nothing mutates locally before the server confirms: a label press fires
 * the POST, and only its response updates the label map and counters.
 * Rejected mutations surface through `onError` and leave state untouched.
 */

import type { ApiClient } from "./api.js";
import type { ViewState } from "./state.js";
import { shortcutMap } from "./state.js";
import type { ClassInfo, SessionView } from "./types.js";
import { ERRONEOUS } from "./types.js";

export interface ControllerHooks {
  onState: (state: ViewState) => void;
  onError: (message: string) => void;
}

export class InputController {
  private readonly shortcuts: Map<string, string>;
  readonly sampleIds: string[];

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly method: "RND" | "FAFT" | "2DV",
    classes: ClassInfo[],
    sampleIds: string[],
    private readonly state: ViewState,
    private readonly hooks: ControllerHooks,
  ) {
    this.shortcuts = shortcutMap(classes);
    this.sampleIds = sampleIds;
  }

  get freeForm(): boolean {
    return this.method === "2DV";
  }

  private notify(): void {
    this.hooks.onState(this.state);
  }

  private fail(err: unknown): void {
    this.hooks.onError(err instanceof Error ? err.message : String(err));
  }

  /** Left click on a point: select it (2DV only; ordered modes have no scatter). */
  async leftClick(index: number): Promise<void> {
    if (!this.freeForm) return;
    try {
      const response = await this.api.navigate(
        this.sessionId, "select", this.sampleIds[index],
      );
      this.state.currentIndex = response.current ? response.current.index : null;
      this.state.queue = [...response.queue];
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Right click on a point: enqueue it for later review (2DV only). */
  async rightClick(index: number): Promise<void> {
    if (!this.freeForm) return;
    try {
      const response = await this.api.enqueue(this.sessionId, this.sampleIds[index]);
      this.state.queue = [...response.queue];
      this.state.labeledCount = response.labeled_count;
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Class shortcut key (or explicit class choice from the dropdown). */
  async key(char: string): Promise<void> {
    const classId = this.shortcuts.get(char);
    if (classId === undefined) return;
    await this.labelCurrent(classId);
  }

  /** Label the current sample; used by shortcuts, dropdown and the erroneous button. */
  async labelCurrent(value: string): Promise<void> {
    const index = this.state.currentIndex;
    if (index === null) {
      this.hooks.onError("no sample selected");
      return;
    }
    try {
      const response = await this.api.label(this.sessionId, this.sampleIds[index], value);
      this.state.labels.set(index, value);
      this.state.labeledCount = response.labeled_count;
      this.state.status = response.status;
      if (!this.freeForm) {
        // ordered sessions advance server-side on first-time labels
        const view = await this.api.session(this.sessionId);
        this.state.currentIndex = view.current ? view.current.index : null;
      }
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  async markErroneous(): Promise<void> {
    await this.labelCurrent(ERRONEOUS);
  }

  /** Enter / next button: queue head (2DV) or next order element. */
  async next(): Promise<void> {
    try {
      const response = await this.api.navigate(this.sessionId, "next");
      this.state.currentIndex = response.current ? response.current.index : null;
      this.state.queue = [...response.queue];
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Previous button: step back through visit history. */
  async previous(): Promise<void> {
    try {
      const response = await this.api.navigate(this.sessionId, "previous");
      this.state.currentIndex = response.current ? response.current.index : null;
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Swap the active projection; labels, queue and selection are untouched. */
  async selectProjection(
    name: string,
    loadCoords: (name: string) => Promise<Float32Array>,
    apply: (coords: Float32Array) => void,
  ): Promise<void> {
    try {
      const coords = await loadCoords(name);
      apply(coords);
      this.state.projection = name;
      this.notify();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Re-sync counters and current sample from the server view. */
  applyView(view: SessionView): void {
    this.state.labeledCount = view.labeled_count;
    this.state.status = view.status;
    this.state.queue = [...view.queue];
    this.state.currentIndex = view.current ? view.current.index : null;
    this.state.labels.clear();
    for (const [idx, value] of Object.entries(view.labels)) {
      this.state.labels.set(Number(idx), value);
    }
    this.notify();
  }
}
