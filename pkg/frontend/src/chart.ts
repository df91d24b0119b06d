/** Pure SVG renderer for the live chart.
 *
 * Takes already-ordered view state and produces an SVG string; no DOM access,
 * so it can be tested headless. Annotation shading spans exactly the stored
 * t_start_ms..t_end_ms of each annotation.
 */

import type { LiveViewState } from "./state.js";

export interface ChartLayout {
  width: number;
  height: number;
  marginLeft: number;
  marginRight: number;
  marginTop: number;
  marginBottom: number;
}

export const DEFAULT_LAYOUT: ChartLayout = {
  width: 860,
  height: 340,
  marginLeft: 52,
  marginRight: 12,
  marginTop: 12,
  marginBottom: 34,
};

const PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759",
  "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

export interface Scale {
  t0: number;
  t1: number;
  v0: number;
  v1: number;
  x(tMs: number): number;
  y(v: number): number;
}

export function makeScale(state: LiveViewState, layout: ChartLayout): Scale {
  const plotW = layout.width - layout.marginLeft - layout.marginRight;
  const plotH = layout.height - layout.marginTop - layout.marginBottom;
  const first = state.samples[0];
  const last = state.samples[state.samples.length - 1];
  const t0 = first ? first.t_ms : 0;
  const t1 = last && last.t_ms > t0 ? last.t_ms : t0 + 1;
  let v0 = Infinity;
  let v1 = -Infinity;
  for (const s of state.samples) {
    if (s.ph_mv < v0) v0 = s.ph_mv;
    if (s.ph_mv > v1) v1 = s.ph_mv;
  }
  if (!state.samples.length) {
    v0 = 0;
    v1 = 1;
  }
  const pad = Math.max((v1 - v0) * 0.08, 1e-6);
  v0 -= pad;
  v1 += pad;
  return {
    t0, t1, v0, v1,
    x: (tMs) => layout.marginLeft + ((tMs - t0) / (t1 - t0)) * plotW,
    y: (v) => layout.marginTop + ((v1 - v) / (v1 - v0)) * plotH,
  };
}

/** Inverse of the x scale, for mapping chart clicks back to device time. */
export function timeAtX(x: number, state: LiveViewState, layout: ChartLayout = DEFAULT_LAYOUT): number {
  const s = makeScale(state, layout);
  const plotW = layout.width - layout.marginLeft - layout.marginRight;
  return s.t0 + ((x - layout.marginLeft) / plotW) * (s.t1 - s.t0);
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function renderChart(state: LiveViewState, layout: ChartLayout = DEFAULT_LAYOUT): string {
  const { width, height, marginLeft, marginTop } = layout;
  const plotW = width - marginLeft - layout.marginRight;
  const plotH = height - marginTop - layout.marginBottom;
  const s = makeScale(state, layout);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`,
    `<rect x="${marginLeft}" y="${marginTop}" width="${plotW}" height="${plotH}" fill="#fafafa" stroke="#ccc"/>`,
  ];

  state.annotations.forEach((a, i) => {
    const color = PALETTE[i % PALETTE.length];
    const x0 = Math.max(s.x(a.t_start_ms), marginLeft);
    const x1 = Math.min(s.x(a.t_end_ms), marginLeft + plotW);
    if (x1 <= x0) return;
    parts.push(
      `<rect class="annotation" data-label="${esc(a.label)}" x="${x0.toFixed(2)}" y="${marginTop}" ` +
        `width="${(x1 - x0).toFixed(2)}" height="${plotH}" fill="${color}" fill-opacity="0.15"/>`,
    );
  });

  if (state.pending) {
    const x = s.x(state.pending.t_start_ms);
    parts.push(
      `<line class="pending" x1="${x.toFixed(2)}" y1="${marginTop}" x2="${x.toFixed(2)}" ` +
        `y2="${marginTop + plotH}" stroke="#d62728" stroke-dasharray="4 3"/>`,
    );
  }

  for (const g of state.gaps) {
    const x = s.x(g.t_ms);
    parts.push(
      `<line class="gap" x1="${x.toFixed(2)}" y1="${marginTop}" x2="${x.toFixed(2)}" ` +
        `y2="${marginTop + plotH}" stroke="#bbb" stroke-dasharray="2 2"/>`,
    );
  }

  for (const frac of [0, 0.5, 1]) {
    const v = s.v0 + (s.v1 - s.v0) * frac;
    const y = s.y(v);
    parts.push(`<text x="${marginLeft - 6}" y="${(y + 4).toFixed(2)}" text-anchor="end">${v.toFixed(1)}</text>`);
    const t = s.t0 + (s.t1 - s.t0) * frac;
    parts.push(
      `<text x="${s.x(t).toFixed(2)}" y="${height - 14}" text-anchor="middle">${(t / 1000).toFixed(0)}s</text>`,
    );
  }

  if (state.samples.length) {
    const points = state.samples
      .map((p) => `${s.x(p.t_ms).toFixed(2)},${s.y(p.ph_mv).toFixed(2)}`)
      .join(" ");
    parts.push(`<polyline class="trace" points="${points}" fill="none" stroke="#1f2d50" stroke-width="1"/>`);
  }

  parts.push("</svg>");
  return parts.join("");
}
