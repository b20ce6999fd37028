/** Application state: a pure function of the last service response plus the
 * selection set and sort choice. Every transition returns a new state. */

import { SortDir, SortKey } from "./table.js";
import { SlicesResponse } from "./types.js";

export interface AppState {
  response: SlicesResponse | null;
  selected: ReadonlySet<string>;
  sortKey: SortKey;
  sortDir: SortDir;
  requestPending: boolean;
}

export const initialState: AppState = {
  response: null,
  selected: new Set(),
  sortKey: "rank",
  sortDir: "asc",
  requestPending: false,
};

export function withPendingRequest(state: AppState): AppState {
  return { ...state, requestPending: true };
}

export function withResponse(state: AppState, response: SlicesResponse): AppState {
  // Replace the view atomically; drop selections that no longer resolve.
  const ids = new Set(response.slices.map((s) => s.id));
  const selected = new Set([...state.selected].filter((id) => ids.has(id)));
  return {
    ...state,
    response,
    selected,
    requestPending: response.status === "searching",
  };
}

export function toggleSelection(state: AppState, id: string): AppState {
  const selected = new Set(state.selected);
  if (selected.has(id)) {
    selected.delete(id);
  } else {
    selected.add(id);
  }
  return { ...state, selected };
}

export function setSort(state: AppState, key: SortKey): AppState {
  if (state.sortKey === key) {
    return { ...state, sortDir: state.sortDir === "asc" ? "desc" : "asc" };
  }
  return { ...state, sortKey: key, sortDir: key === "predicate" ? "asc" : "desc" };
}
