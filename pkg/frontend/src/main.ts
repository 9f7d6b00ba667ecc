/** Application bootstrap: session picker, scatter (2DV) or class list
 * (RND/FAFT), legend, media panel, counters, keyboard wiring.
 */

import { ApiClient } from "./api.js";
import { InputController } from "./input.js";
import { MediaPanel } from "./media.js";
import { ScatterView } from "./scatter.js";
import {
  counterText,
  initialViewState,
  legendEntries,
  classColorMap,
  type ViewState,
} from "./state.js";
import type { DatasetInfo, SessionView } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const root = document.getElementById("app")!;
  const dataset = await api.dataset();

  const params = new URLSearchParams(location.search);
  const sessionId = params.get("session");
  if (!sessionId) {
    renderSessionForm(root, api, dataset);
    return;
  }
  const view = await api.session(sessionId);
  await renderWorkbench(root, api, dataset, sessionId, view);
}

function renderSessionForm(root: HTMLElement, api: ApiClient, dataset: DatasetInfo): void {
  const form = el("div", "session-form");
  form.appendChild(el("h2", undefined, `dataset: ${dataset.name}`));
  const trackSelect = el("select");
  for (const track of dataset.tracks) {
    const option = el("option", undefined, track.track_name);
    option.value = track.track_name;
    trackSelect.appendChild(option);
  }
  const methodSelect = el("select");
  for (const m of ["2DV", "RND", "FAFT"]) {
    const option = el("option", undefined, m);
    option.value = m;
    methodSelect.appendChild(option);
  }
  const budget = el("input") as HTMLInputElement;
  budget.type = "number";
  budget.value = String(Math.min(360, dataset.n_samples));
  const annotator = el("input") as HTMLInputElement;
  annotator.placeholder = "annotator id";
  annotator.value = "anonymous";
  const group = el("select");
  for (const g of ["expert", "non_expert"]) {
    const option = el("option", undefined, g);
    option.value = g;
    group.appendChild(option);
  }
  const start = el("button", undefined, "start session");
  start.addEventListener("click", async () => {
    const view = await api.createSession({
      track: trackSelect.value,
      method: methodSelect.value,
      budget: Number(budget.value),
      seed: Math.floor(Math.random() * 2 ** 31),
      annotator_id: annotator.value,
      annotator_group: group.value,
    });
    location.search = `?session=${view.session_id}`;
  });
  for (const [label, control] of [
    ["track", trackSelect],
    ["method", methodSelect],
    ["budget", budget],
    ["annotator", annotator],
    ["group", group],
  ] as const) {
    const row = el("label", "form-row", `${label}: `);
    row.appendChild(control);
    form.appendChild(row);
  }
  form.appendChild(start);
  root.appendChild(form);
}

async function renderWorkbench(
  root: HTMLElement,
  api: ApiClient,
  dataset: DatasetInfo,
  sessionId: string,
  view: SessionView,
): Promise<void> {
  const track = dataset.tracks.find((t) => t.track_name === view.config.track)!;
  const colors = classColorMap(track.classes);
  const freeForm = view.config.method === "2DV";

  const projections = await api.projections();
  const firstProjection = projections[0]?.name ?? "pca";
  const state = initialViewState(view, firstProjection);

  const header = el("div", "header");
  const counter = el("span", "counter", counterText(state));
  const status = el("span", "status", view.status);
  const errorBanner = el("div", "error-banner");
  errorBanner.style.display = "none";
  const exportLink = el("a", "export", "export CSV") as HTMLAnchorElement;
  exportLink.href = api.exportUrl(sessionId);
  header.append(
    el("span", "title", `${view.config.method} · ${view.config.track} · ${view.config.annotator_id}`),
    counter,
    status,
    exportLink,
  );

  const mediaPanel = new MediaPanel(api, document);
  const mainArea = el("div", "main-area");
  const sidePanel = el("div", "side-panel");
  sidePanel.appendChild(mediaPanel.element);
  mainArea.appendChild(sidePanel);

  const refreshHeader = (s: ViewState) => {
    counter.textContent = counterText(s);
    status.textContent = s.status;
  };
  const showError = (message: string) => {
    errorBanner.textContent = message;
    errorBanner.style.display = "block";
    setTimeout(() => (errorBanner.style.display = "none"), 4000);
  };

  let queueBadge: HTMLElement | null = null;
  const controller = new InputController(
    api,
    sessionId,
    view.config.method,
    track.classes,
    dataset.samples.map((s) => s.sample_id),
    state,
    {
      onState: (s) => {
        refreshHeader(s);
        if (queueBadge) queueBadge.textContent = `queue: ${s.queue.length}`;
        redraw();
        showCurrent();
      },
      onError: showError,
    },
  );

  let scatter: ScatterView | null = null;
  let ctx: CanvasRenderingContext2D | null = null;
  let redraw = () => {};
  const showCurrent = () => {
    if (state.currentIndex === null) return;
    mediaPanel.show(dataset.samples[state.currentIndex]);
  };

  if (freeForm) {
    const canvas = el("canvas", "scatter") as HTMLCanvasElement;
    canvas.width = 900;
    canvas.height = 700;
    ctx = canvas.getContext("2d");
    const coords = await api.projectionCoords(firstProjection);
    scatter = new ScatterView(coords, canvas.width, canvas.height);
    redraw = () => {
      if (ctx && scatter) scatter.draw(ctx, state, colors);
    };

    canvas.addEventListener("click", (ev) => {
      const hit = scatter!.hitTest(state, ev.offsetX, ev.offsetY);
      if (hit !== null) void controller.leftClick(hit);
    });
    canvas.addEventListener("contextmenu", (ev) => {
      ev.preventDefault();
      const hit = scatter!.hitTest(state, ev.offsetX, ev.offsetY);
      if (hit !== null) void controller.rightClick(hit);
    });
    canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      state.zoom = Math.min(Math.max(state.zoom * (ev.deltaY < 0 ? 1.2 : 1 / 1.2), 0.1), 1000);
      redraw();
    });
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    canvas.addEventListener("mousedown", (ev) => {
      if (ev.button === 0) {
        dragging = true;
        lastX = ev.offsetX;
        lastY = ev.offsetY;
      }
    });
    canvas.addEventListener("mousemove", (ev) => {
      if (!dragging || !scatter) return;
      const [x0, y0] = scatter.toData(state, lastX, lastY);
      const [x1, y1] = scatter.toData(state, ev.offsetX, ev.offsetY);
      state.panX -= x1 - x0;
      state.panY -= y1 - y0;
      lastX = ev.offsetX;
      lastY = ev.offsetY;
      redraw();
    });
    window.addEventListener("mouseup", () => (dragging = false));

    const scatterWrap = el("div", "scatter-wrap");
    const projectionSelect = el("select", "projection-select");
    for (const p of projections) {
      const option = el("option", undefined, p.name);
      option.value = p.name;
      projectionSelect.appendChild(option);
    }
    projectionSelect.addEventListener("change", () => {
      void controller.selectProjection(
        projectionSelect.value,
        (name) => api.projectionCoords(name),
        (coords2) => scatter!.setCoords(coords2),
      );
    });
    queueBadge = el("span", "queue-badge", "queue: 0");
    // legend: class colors and shortcuts, with visibility toggles
    const legend = el("div", "legend");
    for (const entry of legendEntries(track.classes)) {
      const row = el("div", "legend-row");
      const swatch = el("span", "swatch");
      swatch.style.background = entry.color;
      row.append(
        swatch,
        el("span", "legend-label",
           entry.shortcut ? `${entry.label} [${entry.shortcut}]` : entry.label),
      );
      if (entry.classId !== null) {
        row.addEventListener("click", () => {
          if (state.hiddenClasses.has(entry.classId!)) {
            state.hiddenClasses.delete(entry.classId!);
            row.classList.remove("hidden-class");
          } else {
            state.hiddenClasses.add(entry.classId!);
            row.classList.add("hidden-class");
          }
          redraw();
        });
      }
      legend.appendChild(row);
    }
    scatterWrap.append(projectionSelect, queueBadge, canvas, legend);
    mainArea.appendChild(scatterWrap);
  } else {
    // ordered modes: no scatter; class list with shortcuts instead
    const classList = el("div", "class-list");
    for (const c of track.classes) {
      const button = el("button", "class-button", `${c.display_name} [${c.shortcut_key}]`);
      button.style.borderColor = c.color;
      button.addEventListener("click", () => void controller.labelCurrent(c.class_id));
      classList.appendChild(button);
    }
    mainArea.appendChild(classList);
  }

  const controls = el("div", "controls");
  const nextButton = el("button", undefined, "next sample (Enter)");
  nextButton.addEventListener("click", () => void controller.next());
  const previousButton = el("button", undefined, "previous sample");
  previousButton.addEventListener("click", () => void controller.previous());
  const dropdown = el("select", "label-dropdown");
  dropdown.appendChild(el("option", undefined, "label…"));
  for (const c of track.classes) {
    const option = el("option", undefined, c.display_name);
    option.value = c.class_id;
    dropdown.appendChild(option);
  }
  dropdown.addEventListener("change", () => {
    if (dropdown.value) void controller.labelCurrent(dropdown.value);
    dropdown.selectedIndex = 0;
  });
  controls.append(previousButton, nextButton, dropdown);
  if (track.allows_erroneous) {
    const erroneous = el("button", "erroneous", "mark erroneous");
    erroneous.addEventListener("click", () => void controller.markErroneous());
    controls.appendChild(erroneous);
  }

  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") {
      ev.preventDefault();
      void controller.next();
    } else if (ev.key.length === 1) {
      void controller.key(ev.key);
    }
  });

  root.append(header, errorBanner, controls, mainArea);
  refreshHeader(state);
  redraw();
  showCurrent();
}

void boot();
