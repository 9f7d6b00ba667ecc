/** Media playback panel: HTML5 video/audio plus signal playhead sync.
 *
 * Signal panels draw a vertical cursor whose horizontal position tracks
 * playback time; a missing media file shows a placeholder and annotation
 * stays possible (the erroneous path).
 */

import type { ApiClient } from "./api.js";
import type { SampleInfo } from "./types.js";

/** Fraction of the panel width the playhead sits at for time t. */
export function playheadFraction(timeS: number, durationS: number): number {
  if (durationS <= 0) return 0;
  return Math.min(Math.max(timeS / durationS, 0), 1);
}

export function playheadX(timeS: number, durationS: number, panelWidth: number): number {
  return playheadFraction(timeS, durationS) * panelWidth;
}

export class MediaPanel {
  readonly element: HTMLElement;
  private player: HTMLMediaElement | null = null;
  private cursor: HTMLElement | null = null;
  private signalArea: HTMLElement | null = null;

  constructor(private readonly api: ApiClient, private readonly doc: Document) {
    this.element = doc.createElement("div");
    this.element.className = "media-panel";
  }

  show(sample: SampleInfo): void {
    this.element.replaceChildren();
    this.player = null;
    this.cursor = null;
    const video = sample.media.find((m) => m.kind === "video");
    const audio = sample.media.find((m) => m.kind === "audio");
    const signals = sample.media.filter((m) => m.kind === "signal");

    if (video) {
      const el = this.doc.createElement("video");
      el.controls = true;
      el.src = this.api.mediaUrl(sample.sample_id, "video");
      this.player = el;
      this.element.appendChild(el);
    } else if (audio) {
      const el = this.doc.createElement("audio");
      el.controls = true;
      el.src = this.api.mediaUrl(sample.sample_id, "audio");
      this.player = el;
      this.element.appendChild(el);
    } else if (signals.length === 0) {
      const placeholder = this.doc.createElement("div");
      placeholder.className = "media-placeholder";
      placeholder.textContent = "no media for this sample";
      this.element.appendChild(placeholder);
    }

    if (signals.length > 0) {
      this.signalArea = this.doc.createElement("div");
      this.signalArea.className = "signal-panels";
      for (const signal of signals) {
        const panel = this.doc.createElement("div");
        panel.className = "signal-panel";
        panel.textContent = signal.channels || "signal";
        this.signalArea.appendChild(panel);
      }
      this.cursor = this.doc.createElement("div");
      this.cursor.className = "playhead-cursor";
      this.signalArea.appendChild(this.cursor);
      this.element.appendChild(this.signalArea);
      if (this.player) {
        this.player.addEventListener("timeupdate", () => {
          this.syncCursor(this.player!.currentTime, sample.duration_s);
        });
      }
    }

    const id = this.doc.createElement("div");
    id.className = "sample-id";
    id.textContent = sample.sample_id;
    this.element.appendChild(id);
  }

  /** Position the cursor; exposed for tests and timeupdate events. */
  syncCursor(timeS: number, durationS: number): void {
    if (!this.cursor || !this.signalArea) return;
    const width = this.signalArea.clientWidth || 100;
    this.cursor.style.left = `${playheadX(timeS, durationS, width)}px`;
  }
}
