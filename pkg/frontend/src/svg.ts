// Deterministic SVG line charts: no timestamps, fixed styling, fixed
// number formatting, so the same CSV always yields the same bytes.

import { Aggregate, sourcesOf, variantsOf } from "./stats.js";

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { top: 24, right: 24, bottom: 52, left: 72 };

const VARIANT_COLORS: Record<string, string> = {
  odmrp: "#1f77b4",
  cqmp: "#ff7f0e",
  proposed: "#2ca02c",
};

const fallbackColors = ["#d62728", "#9467bd", "#8c564b"];

function fmt(value: number): string {
  return Number(value.toPrecision(6)).toString();
}

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (hi === lo) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= count + 1) ?? 10 * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-12; v += chosen) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

export function renderChart(
  aggregates: Aggregate[],
  yLabel: string,
  title: string,
): string {
  const variants = variantsOf(aggregates);
  const xs = sourcesOf(aggregates);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yValues = aggregates.flatMap((a) => [a.min, a.max]);
  const yLo = Math.min(0, ...yValues);
  const yHi = Math.max(...yValues) * 1.05 || 1;

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) =>
    MARGIN.left + (xHi === xLo ? plotW / 2 : ((x - xLo) / (xHi - xLo)) * plotW);
  const sy = (y: number) => MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(`<text x="${WIDTH / 2}" y="16" text-anchor="middle" font-size="14">${title}</text>`);

  // axes
  const x0 = MARGIN.left;
  const y0 = MARGIN.top + plotH;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0 + plotW}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}" stroke="black"/>`);
  for (const tick of xs) {
    const x = sx(tick);
    parts.push(`<line x1="${fmt(x)}" y1="${y0}" x2="${fmt(x)}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(
      `<text x="${fmt(x)}" y="${y0 + 20}" text-anchor="middle" font-size="11">${tick}</text>`,
    );
  }
  for (const tick of niceTicks(yLo, yHi)) {
    const y = sy(tick);
    parts.push(`<line x1="${x0 - 5}" y1="${fmt(y)}" x2="${x0}" y2="${fmt(y)}" stroke="black"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${fmt(y + 4)}" text-anchor="end" font-size="11">${fmt(tick)}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="12">number of sources</text>`,
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">${yLabel}</text>`,
  );

  // one series per variant with min/max whiskers
  variants.forEach((variant, vi) => {
    const color = VARIANT_COLORS[variant] ?? fallbackColors[vi % fallbackColors.length];
    const series = aggregates
      .filter((a) => a.variant === variant)
      .sort((a, b) => a.sources - b.sources);
    const path = series.map((a) => `${fmt(sx(a.sources))},${fmt(sy(a.mean))}`).join(" ");
    parts.push(
      `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="2" data-series="${variant}"/>`,
    );
    for (const a of series) {
      const x = sx(a.sources);
      parts.push(
        `<line x1="${fmt(x)}" y1="${fmt(sy(a.min))}" x2="${fmt(x)}" y2="${fmt(sy(a.max))}" stroke="${color}" stroke-width="1"/>`,
      );
      for (const cap of [a.min, a.max]) {
        parts.push(
          `<line x1="${fmt(x - 4)}" y1="${fmt(sy(cap))}" x2="${fmt(x + 4)}" y2="${fmt(sy(cap))}" stroke="${color}" stroke-width="1"/>`,
        );
      }
      parts.push(`<circle cx="${fmt(x)}" cy="${fmt(sy(a.mean))}" r="3" fill="${color}"/>`);
    }
    const ly = MARGIN.top + 14 + vi * 16;
    parts.push(
      `<line x1="${x0 + plotW - 110}" y1="${ly - 4}" x2="${x0 + plotW - 90}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(`<text x="${x0 + plotW - 84}" y="${ly}" font-size="12">${variant}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
