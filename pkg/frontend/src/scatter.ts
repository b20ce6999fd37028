/** Scatter view: one mark per slice at (size, effect size), pure string render.
 *
 * The x axis is logarithmic in slice size; horizontal reference lines mark the
 * conventional effect-size bands (0.2 small, 0.5 medium, 0.8 large, 1.3 very
 * large). Hovering a mark shows the slice description, size, effect size and
 * metric; selected marks are highlighted.
 */

import { escapeHtml, fmt } from "./format.js";
import { SliceView } from "./types.js";

export interface ScatterOptions {
  width?: number;
  height?: number;
  threshold?: number | null;
}

const BANDS: Array<[number, string]> = [
  [0.2, "small"],
  [0.5, "medium"],
  [0.8, "large"],
  [1.3, "very large"],
];

const MARGIN = { top: 14, right: 16, bottom: 34, left: 46 };

export function renderScatter(
  slices: readonly SliceView[],
  selected: ReadonlySet<string>,
  options: ScatterOptions = {},
): string {
  const width = options.width ?? 520;
  const height = options.height ?? 360;
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;
  const parts: string[] = [];
  parts.push(
    `<svg class="scatter" viewBox="0 0 ${width} ${height}" role="img" ` +
    `aria-label="slice scatter plot">`,
  );

  if (slices.length === 0) {
    parts.push(
      `<text class="scatter-empty" x="${width / 2}" y="${height / 2}" ` +
      `text-anchor="middle">no slices to show — lower the effect-size ` +
      `threshold or wait for the search</text>`,
      "</svg>",
    );
    return parts.join("");
  }

  const sizes = slices.map((s) => s.size);
  const effects = slices.map((s) => s.effect_size).filter(Number.isFinite);
  const bandLevels = BANDS.map(([level]) => level);
  const extraY = options.threshold != null ? [options.threshold] : [];
  const minX = Math.max(1, Math.min(...sizes));
  const maxX = Math.max(...sizes, minX * 10);
  const loY = Math.min(...effects, 0);
  const hiY = Math.max(...effects, ...bandLevels, ...extraY) * 1.1 + 0.05;

  const x = (size: number) =>
    MARGIN.left +
    ((Math.log10(Math.max(size, 1)) - Math.log10(minX)) /
      (Math.log10(maxX) - Math.log10(minX) || 1)) * innerW;
  const y = (effect: number) =>
    MARGIN.top + innerH - ((effect - loY) / (hiY - loY || 1)) * innerH;

  parts.push(
    `<rect class="scatter-bg" x="${MARGIN.left}" y="${MARGIN.top}" ` +
    `width="${innerW}" height="${innerH}"/>`,
  );
  for (const [level, label] of BANDS) {
    if (level > hiY) continue;
    const yy = y(level).toFixed(1);
    parts.push(
      `<line class="band" x1="${MARGIN.left}" x2="${MARGIN.left + innerW}" ` +
      `y1="${yy}" y2="${yy}"/>`,
      `<text class="band-label" x="${MARGIN.left + innerW - 4}" y="${Number(yy) - 3}" ` +
      `text-anchor="end">${label} (${level})</text>`,
    );
  }
  if (options.threshold != null && options.threshold <= hiY) {
    const yy = y(options.threshold).toFixed(1);
    parts.push(
      `<line class="threshold" x1="${MARGIN.left}" x2="${MARGIN.left + innerW}" ` +
      `y1="${yy}" y2="${yy}"/>`,
    );
  }

  for (const slice of slices) {
    const cls = selected.has(slice.id) ? "mark selected" : "mark";
    const tooltip =
      `${slice.predicate}\nsize: ${slice.size}\n` +
      `effect size: ${fmt(slice.effect_size)}\nmetric: ${fmt(slice.metric)}`;
    parts.push(
      `<circle class="${cls}" data-id="${escapeHtml(slice.id)}" ` +
      `cx="${x(slice.size).toFixed(1)}" cy="${y(slice.effect_size).toFixed(1)}" r="6">` +
      `<title>${escapeHtml(tooltip)}</title></circle>`,
    );
  }

  parts.push(
    `<text class="axis-label" x="${MARGIN.left + innerW / 2}" y="${height - 8}" ` +
    `text-anchor="middle">slice size (log)</text>`,
    `<text class="axis-label" transform="rotate(-90)" ` +
    `x="${-(MARGIN.top + innerH / 2)}" y="14" text-anchor="middle">effect size</text>`,
    "</svg>",
  );
  return parts.join("");
}
