import { readFileSync } from "fs";

import { METRICS, parseSweepCsv, SweepRow } from "./csv.js";
import { Aggregate, aggregate, sourcesOf } from "./stats.js";

function pad(text: string, width: number): string {
  return text.length >= width ? text : text + " ".repeat(width - text.length);
}

function fmt(value: number, digits = 4): string {
  return Number.isFinite(value) ? value.toFixed(digits) : "nan";
}

function lookup(aggs: Aggregate[], variant: string, sources: number): Aggregate | undefined {
  return aggs.find((a) => a.variant === variant && a.sources === sources);
}

export function summarize(csvPath: string): string {
  const rows: SweepRow[] = parseSweepCsv(readFileSync(csvPath, "utf8"));
  if (rows.length === 0) return "";

  const lines: string[] = [];
  const byMetric = new Map(METRICS.map((m) => [m, aggregate(rows, m)]));
  const variants = [...new Set(rows.map((r) => r.variant))].sort();
  const sources = [...new Set(rows.map((r) => r.sources))].sort((a, b) => a - b);

  lines.push(pad("variant", 10) + pad("sources", 8) +
    METRICS.map((m) => pad(`${m} mean/min/max`, 30)).join(""));
  for (const variant of variants) {
    for (const k of sources) {
      const cells = METRICS.map((m) => {
        const a = lookup(byMetric.get(m)!, variant, k);
        return pad(a ? `${fmt(a.mean)}/${fmt(a.min)}/${fmt(a.max)}` : "-", 30);
      });
      lines.push(pad(variant, 10) + pad(String(k), 8) + cells.join(""));
    }
  }

  if (variants.includes("proposed") && variants.includes("odmrp")) {
    lines.push("");
    lines.push("proposed vs odmrp");
    const rreq = byMetric.get("rreq_per_node")!;
    const pdr = byMetric.get("pdr")!;
    for (const k of sourcesOf(rreq)) {
      const own = lookup(rreq, "proposed", k);
      const base = lookup(rreq, "odmrp", k);
      const pOwn = lookup(pdr, "proposed", k);
      const pBase = lookup(pdr, "odmrp", k);
      if (!own || !base || !pOwn || !pBase) continue;
      const reduction = 100 * (1 - own.mean / base.mean);
      const delta = 100 * (pOwn.mean - pBase.mean);
      lines.push(
        pad(`sources=${k}`, 14) +
        pad(`rreq reduction ${fmt(reduction, 1)}%`, 26) +
        `pdr delta ${delta >= 0 ? "+" : ""}${fmt(delta, 1)}pp`,
      );
    }
  }
  return lines.join("\n") + "\n";
}
