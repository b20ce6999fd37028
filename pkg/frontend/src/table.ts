/** Linked table view: stable sort by any column, pure string render. */

import { escapeHtml, fmt } from "./format.js";
import { SliceView } from "./types.js";

export type SortKey =
  | "rank"
  | "predicate"
  | "num_literals"
  | "size"
  | "effect_size"
  | "metric"
  | "p_value";

export type SortDir = "asc" | "desc";

export const COLUMNS: Array<{ key: SortKey; label: string }> = [
  { key: "rank", label: "#" },
  { key: "predicate", label: "slice" },
  { key: "num_literals", label: "literals" },
  { key: "size", label: "size" },
  { key: "effect_size", label: "effect size" },
  { key: "metric", label: "metric" },
  { key: "p_value", label: "p-value" },
];

export function sortSlices(
  slices: readonly SliceView[],
  key: SortKey,
  dir: SortDir,
): SliceView[] {
  const sign = dir === "asc" ? 1 : -1;
  // Array.prototype.sort is stable: ties keep their prior relative order.
  return [...slices].sort((a, b) => {
    const va = a[key as keyof SliceView];
    const vb = b[key as keyof SliceView];
    if (typeof va === "string" && typeof vb === "string") {
      return sign * va.localeCompare(vb);
    }
    const na = Number(va ?? Number.NEGATIVE_INFINITY);
    const nb = Number(vb ?? Number.NEGATIVE_INFINITY);
    if (na === nb) return 0;
    return na < nb ? -sign : sign;
  });
}

export function renderTable(
  slices: readonly SliceView[],
  sortKey: SortKey,
  sortDir: SortDir,
  selected: ReadonlySet<string>,
): string {
  const header = COLUMNS.map((col) => {
    const marker = col.key === sortKey ? (sortDir === "asc" ? " ▲" : " ▼") : "";
    return (
      `<th><button class="sort" data-sort="${col.key}">` +
      `${escapeHtml(col.label)}${marker}</button></th>`
    );
  }).join("");

  const rows = sortSlices(slices, sortKey, sortDir)
    .map((slice) => {
      const cls = selected.has(slice.id) ? "slice-row selected" : "slice-row";
      const badge = slice.interpretable
        ? ""
        : ` <span class="badge" title="cluster slices have no predicate">non-interpretable</span>`;
      return (
        `<tr class="${cls}" data-id="${escapeHtml(slice.id)}">` +
        `<td>${slice.rank ?? ""}</td>` +
        `<td class="predicate">${escapeHtml(slice.predicate)}${badge}</td>` +
        `<td>${slice.num_literals}</td>` +
        `<td>${slice.size}</td>` +
        `<td title="${slice.effect_size}">${fmt(slice.effect_size)}</td>` +
        `<td title="${slice.metric}">${fmt(slice.metric)}</td>` +
        `<td title="${slice.p_value}">${fmt(slice.p_value)}</td>` +
        `</tr>`
      );
    })
    .join("");

  const body = slices.length
    ? rows
    : `<tr class="placeholder"><td colspan="${COLUMNS.length}">no slices</td></tr>`;
  return (
    `<table class="slice-table"><thead><tr>${header}</tr></thead>` +
    `<tbody>${body}</tbody></table>`
  );
}
