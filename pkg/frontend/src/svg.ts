/**
 * Deterministic SVG rendering: no timestamps, no randomness, fixed layout,
 * fixed number formatting — re-rendering the same data yields identical
 * bytes. Curves carry `class="curve"` and bands `class="band"` so the
 * output is mechanically checkable.
 */

import type { BarDatum, FigureData } from "./series.js";

const WIDTH = 880;
const HEIGHT = 540;
const MARGIN = { left: 84, right: 240, top: 52, bottom: 60 };

// Okabe-Ito palette (colorblind-safe), extended with a neutral grey.
const COLORS = [
  "#0072B2", "#D55E00", "#009E73", "#CC79A7", "#E69F00",
  "#56B4E9", "#F0E442", "#000000", "#999999",
];

/** Fixed-point pixel coordinate: two decimals, no trailing zeros, no "-0". */
function px(v: number): string {
  const s = v.toFixed(2).replace(/\.?0+$/, "");
  return s === "-0" ? "0" : s;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function tickLabel(v: number, logY: boolean): string {
  if (logY) {
    const e = Math.round(Math.log10(v));
    return `1e${e}`;
  }
  if (v === 0) {
    return "0";
  }
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-2) {
    return v.toExponential(1).replace("e+", "e");
  }
  return String(Number(v.toPrecision(3)));
}

function linearTicks(lo: number, hi: number, n = 5): number[] {
  if (hi <= lo) {
    return [lo];
  }
  const raw = (hi - lo) / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= raw)!;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const e0 = Math.ceil(Math.log10(lo) - 1e-9);
  const e1 = Math.floor(Math.log10(hi) + 1e-9);
  const span = e1 - e0;
  const step = span > 8 ? Math.ceil(span / 8) : 1;
  const ticks: number[] = [];
  for (let e = e0; e <= e1; e += step) {
    ticks.push(Math.pow(10, e));
  }
  return ticks;
}

/** Render one per-topology figure: mean curve per cell with min/max band. */
export function renderLineFigure(fig: FigureData): string {
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;

  const allRounds = fig.series.flatMap((s) => s.rounds);
  const xMin = allRounds.length ? Math.min(...allRounds) : 0;
  const xMax = allRounds.length ? Math.max(...allRounds) : 1;
  const allVals = fig.series.flatMap((s) => [...s.lo, ...s.hi]);
  let yMin = allVals.length ? Math.min(...allVals) : 0;
  let yMax = allVals.length ? Math.max(...allVals) : 1;
  if (fig.logY) {
    yMin = Math.pow(10, Math.floor(Math.log10(yMin) - 1e-9));
    yMax = Math.pow(10, Math.ceil(Math.log10(yMax) + 1e-9));
  } else {
    yMin = Math.min(0, yMin);
    yMax = yMax + 0.05 * (yMax - yMin || 1);
  }

  const sx = (r: number): number =>
    MARGIN.left + (xMax === xMin ? 0.5 : (r - xMin) / (xMax - xMin)) * plotW;
  const sy = (v: number): number => {
    const t = fig.logY
      ? (Math.log10(v) - Math.log10(yMin)) / (Math.log10(yMax) - Math.log10(yMin))
      : (v - yMin) / (yMax - yMin);
    return MARGIN.top + (1 - t) * plotH;
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${MARGIN.left}" y="30" font-size="17" font-weight="bold">` +
      `${esc(fig.metric)} vs round (${esc(fig.topology)})</text>`,
  );

  // axes and grid
  const yTicks = fig.logY ? logTicks(yMin, yMax) : linearTicks(yMin, yMax);
  for (const v of yTicks) {
    const y = sy(v);
    parts.push(
      `<line x1="${px(MARGIN.left)}" y1="${px(y)}" x2="${px(WIDTH - MARGIN.right)}" y2="${px(y)}" ` +
        `stroke="#dddddd" stroke-width="1"/>`,
      `<text x="${px(MARGIN.left - 8)}" y="${px(y + 4)}" font-size="12" text-anchor="end">` +
        `${tickLabel(v, fig.logY)}</text>`,
    );
  }
  for (const r of linearTicks(xMin, xMax, 6)) {
    const x = sx(r);
    parts.push(
      `<line x1="${px(x)}" y1="${px(HEIGHT - MARGIN.bottom)}" x2="${px(x)}" ` +
        `y2="${px(HEIGHT - MARGIN.bottom + 5)}" stroke="#333333" stroke-width="1"/>`,
      `<text x="${px(x)}" y="${px(HEIGHT - MARGIN.bottom + 20)}" font-size="12" text-anchor="middle">` +
        `${tickLabel(r, false)}</text>`,
    );
  }
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" ` +
      `y2="${HEIGHT - MARGIN.bottom}" stroke="#333333" stroke-width="1"/>`,
    `<line x1="${MARGIN.left}" y1="${HEIGHT - MARGIN.bottom}" x2="${WIDTH - MARGIN.right}" ` +
      `y2="${HEIGHT - MARGIN.bottom}" stroke="#333333" stroke-width="1"/>`,
    `<text x="${px(MARGIN.left + plotW / 2)}" y="${HEIGHT - 14}" font-size="13" ` +
      `text-anchor="middle">communication round</text>`,
  );

  // bands first so curves draw on top of them
  fig.series.forEach((s, i) => {
    if (s.reps < 2) {
      return;
    }
    const color = COLORS[i % COLORS.length];
    const forward = s.rounds.map((r, j) => `${px(sx(r))},${px(sy(s.hi[j]!))}`);
    const back = [...s.rounds.keys()].reverse().map((j) => `${px(sx(s.rounds[j]!))},${px(sy(s.lo[j]!))}`);
    parts.push(
      `<polygon class="band" data-cell="${esc(s.label)}" points="${forward.join(" ")} ${back.join(" ")}" ` +
        `fill="${color}" fill-opacity="0.15" stroke="none"/>`,
    );
  });
  fig.series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    const pts = s.rounds.map((r, j) => `${px(sx(r))},${px(sy(s.mean[j]!))}`).join(" ");
    parts.push(
      `<polyline class="curve" data-cell="${esc(s.label)}" points="${pts}" ` +
        `fill="none" stroke="${color}" stroke-width="1.8"/>`,
    );
  });

  // legend
  const lx = WIDTH - MARGIN.right + 16;
  fig.series.forEach((s, i) => {
    const y = MARGIN.top + 10 + i * 22;
    const note = s.dropped > 0 ? ` (${s.reps}/${s.reps + s.dropped} reps)` : "";
    parts.push(
      `<rect x="${lx}" y="${px(y - 9)}" width="14" height="14" fill="${COLORS[i % COLORS.length]}"/>`,
      `<text x="${lx + 20}" y="${px(y + 3)}" font-size="12">${esc(s.label + note)}</text>`,
    );
  });
  if (fig.series.length === 0) {
    parts.push(
      `<text x="${px(MARGIN.left + plotW / 2)}" y="${px(MARGIN.top + plotH / 2)}" ` +
        `font-size="14" text-anchor="middle">no surviving cells</text>`,
    );
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Horizontal bar chart of per-agent oracle calls at the final round. */
export function renderBarFigure(data: BarDatum[]): string {
  const rowH = 24;
  const topoGap = 14;
  const topologies = [...new Set(data.map((d) => d.topology))];
  const height = 70 + data.length * rowH + topologies.length * topoGap + 20;
  const left = 250;
  const barMax = WIDTH - left - 120;
  const vMax = Math.max(...data.map((d) => d.value), 1);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${height}" ` +
      `viewBox="0 0 ${WIDTH} ${height}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${WIDTH}" height="${height}" fill="#ffffff"/>`,
    `<text x="24" y="30" font-size="17" font-weight="bold">` +
      `oracle calls per agent (final round mean)</text>`,
  );
  let y = 58;
  let lastTopo = "";
  data.forEach((d, i) => {
    if (d.topology !== lastTopo) {
      y += lastTopo === "" ? 0 : topoGap;
      parts.push(`<text x="24" y="${px(y + 12)}" font-size="13" font-weight="bold">${esc(d.topology)}</text>`);
      lastTopo = d.topology;
    }
    const w = (d.value / vMax) * barMax;
    const color = d.diverged ? "#bbbbbb" : COLORS[i % COLORS.length];
    parts.push(
      `<text x="${left - 10}" y="${px(y + 16)}" font-size="12" text-anchor="end">` +
        `${esc(d.label)}${d.diverged ? " (diverged)" : ""}</text>`,
      `<rect class="bar" data-cell="${esc(d.topology + "/" + d.label)}" x="${left}" y="${px(y + 4)}" ` +
        `width="${px(Math.max(w, 1))}" height="16" fill="${color}"/>`,
      `<text x="${px(left + Math.max(w, 1) + 8)}" y="${px(y + 16)}" font-size="11">${px(d.value)}</text>`,
    );
    y += rowH;
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
