import { readFileSync, writeFileSync } from "fs";

import { Metric, METRICS, parseSweepCsv } from "./csv.js";
import { aggregate } from "./stats.js";
import { renderChart } from "./svg.js";

export const METRIC_LABELS: Record<Metric, string> = {
  pdr: "packet delivery ratio",
  avg_delay_s: "average end-to-end delay (s)",
  rreq_per_node: "route-request transmissions per node",
};

export function plotMetric(csvPath: string, metric: Metric, outPath: string): void {
  if (!METRICS.includes(metric)) {
    throw new Error(`unknown metric '${metric}', expected one of ${METRICS.join(", ")}`);
  }
  const rows = parseSweepCsv(readFileSync(csvPath, "utf8"));
  const aggregates = aggregate(rows, metric);
  const svg = renderChart(aggregates, METRIC_LABELS[metric], `${METRIC_LABELS[metric]} vs number of sources`);
  writeFileSync(outPath, svg);
}
