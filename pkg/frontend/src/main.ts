/** Browser wiring: the one module that touches the DOM.
 *
 * Views are rendered from pure functions of (state, last response); this file
 * only routes events into state transitions and repaints.
 */

import { createSession, fetchExamples, fetchSlices, uploadDataset } from "./api.js";
import { SliderController } from "./controls.js";
import { fmt } from "./format.js";
import { renderScatter } from "./scatter.js";
import {
  AppState,
  initialState,
  setSort,
  toggleSelection,
  withPendingRequest,
  withResponse,
} from "./state.js";
import { renderTable, SortKey } from "./table.js";
import { QueryParams } from "./types.js";

const POLL_MS = 400;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let state: AppState = initialState;
let sessionId: string | null = null;
let pollTimer: ReturnType<typeof setTimeout> | null = null;

const baseUrl = () => el<HTMLInputElement>("base-url").value.replace(/\/$/, "");

const controller = new SliderController((params, token) => {
  void issueQuery(params, token);
});

async function issueQuery(params: QueryParams, token: number): Promise<void> {
  if (!sessionId) return;
  state = withPendingRequest(state);
  paintStatus();
  try {
    const { body } = await fetchSlices(baseUrl(), sessionId, params);
    if (!controller.isCurrent(token)) return; // superseded while in flight
    state = withResponse(state, body);
    paint();
    if (body.status === "searching") {
      schedulePoll(params);
    }
  } catch (err) {
    if (controller.isCurrent(token)) showError(err);
  }
}

function schedulePoll(params: QueryParams): void {
  if (pollTimer !== null) clearTimeout(pollTimer);
  pollTimer = setTimeout(() => {
    const current = controller.currentParams;
    if (current && (current.k !== params.k
        || current.minEffectSize !== params.minEffectSize)) {
      return; // sliders moved on; their own query is in charge now
    }
    void issueQuery(params, controller.fireNow(params));
  }, POLL_MS);
}

function currentParams(): QueryParams {
  return {
    k: Number(el<HTMLInputElement>("k-slider").value),
    minEffectSize: Number(el<HTMLInputElement>("t-slider").value),
  };
}

function paint(): void {
  const slices = state.response?.slices ?? [];
  el("scatter-host").innerHTML = renderScatter(
    slices, state.selected,
    { threshold: state.response?.min_effect_size ?? null },
  );
  el("table-host").innerHTML = renderTable(
    slices, state.sortKey, state.sortDir, state.selected,
  );
  paintStatus();
}

function paintStatus(): void {
  const status = el("status");
  if (!state.response) {
    status.textContent = state.requestPending ? "querying…" : "no session";
    status.className = state.requestPending ? "busy" : "";
    return;
  }
  const { status: qs, progress, cache_only: cacheOnly, slices } = state.response;
  const searching = qs === "searching" || state.requestPending;
  status.className = searching ? "busy" : "";
  const parts = [
    searching ? "searching…" : "complete",
    `${slices.length} slice(s)`,
    `${progress.explored} explored`,
    `${progress.evaluations} evaluations`,
  ];
  if (!searching && cacheOnly) parts.push("served from cache");
  status.textContent = parts.join(" · ");
}

function showError(err: unknown): void {
  const status = el("status");
  status.textContent = String(err);
  status.className = "error";
}

async function showExamples(sliceId: string): Promise<void> {
  if (!sessionId) return;
  const host = el("examples-host");
  try {
    const { rows } = await fetchExamples(baseUrl(), sessionId, sliceId, 15);
    if (rows.length === 0) {
      host.innerHTML = "<p class='hint'>slice has no rows</p>";
      return;
    }
    const features = Object.keys(rows[0].features);
    const head = [...features, "label", "score", "loss"]
      .map((h) => `<th>${h}</th>`).join("");
    const body = rows.map((row) =>
      `<tr>${features.map((f) => `<td>${row.features[f]}</td>`).join("")}` +
      `<td>${row.label}</td><td>${fmt(row.score)}</td><td>${fmt(row.loss)}</td></tr>`,
    ).join("");
    host.innerHTML =
      `<table class="examples"><thead><tr>${head}</tr></thead>` +
      `<tbody>${body}</tbody></table>`;
  } catch (err) {
    showError(err);
  }
}

function flashMark(sliceId: string): void {
  const mark = document.querySelector(`.mark[data-id="${sliceId}"]`);
  if (mark) {
    mark.classList.add("flash");
    setTimeout(() => mark.classList.remove("flash"), 600);
  }
}

function wireEvents(): void {
  for (const id of ["k-slider", "t-slider"]) {
    el<HTMLInputElement>(id).addEventListener("input", () => {
      el("k-value").textContent = el<HTMLInputElement>("k-slider").value;
      el("t-value").textContent = el<HTMLInputElement>("t-slider").value;
      controller.change(currentParams());
    });
  }

  el("scatter-host").addEventListener("click", (event) => {
    const mark = (event.target as Element).closest(".mark");
    const id = mark?.getAttribute("data-id");
    if (id) {
      state = toggleSelection(state, id);
      paint();
      void showExamples(id);
    }
  });

  el("table-host").addEventListener("click", (event) => {
    const target = event.target as Element;
    const sort = target.closest(".sort")?.getAttribute("data-sort");
    if (sort) {
      state = setSort(state, sort as SortKey);
      paint();
      return;
    }
    const id = target.closest(".slice-row")?.getAttribute("data-id");
    if (id) {
      state = toggleSelection(state, id);
      paint();
      flashMark(id);
      void showExamples(id);
    }
  });

  el("upload-form").addEventListener("submit", (event) => {
    event.preventDefault();
    void startSession();
  });
}

async function startSession(): Promise<void> {
  const files = el<HTMLInputElement>("file-input").files;
  if (!files || files.length === 0) {
    showError("choose a delimited text file first");
    return;
  }
  try {
    const content = await files[0].text();
    const upload = await uploadDataset(baseUrl(), {
      content,
      label_column: el<HTMLInputElement>("label-column").value,
      score_column: el<HTMLInputElement>("score-column").value,
    });
    const session = await createSession(baseUrl(), {
      dataset_id: upload.dataset_id,
      algorithm: el<HTMLSelectElement>("algorithm").value,
      alpha: Number(el<HTMLInputElement>("alpha").value),
    });
    sessionId = session.session_id;
    state = initialState;
    const params = currentParams();
    void issueQuery(params, controller.fireNow(params));
  } catch (err) {
    showError(err);
  }
}

wireEvents();
paint();
