import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { Metric, METRICS } from "../src/csv.js";
import { plotMetric } from "../src/plot.js";

const FIXTURE = join(__dirname, "fixtures", "sweep.csv");

function plotToTmp(metric: Metric, dir: string, name: string): string {
  const out = join(dir, name);
  plotMetric(FIXTURE, metric, out);
  return readFileSync(out, "utf8");
}

describe("plotting", () => {
  it("emits one labeled series per variant for every metric", () => {
    const dir = mkdtempSync(join(tmpdir(), "plot-"));
    for (const metric of METRICS) {
      const svg = plotToTmp(metric, dir, `${metric}.svg`);
      expect(svg.startsWith("<svg")).toBe(true);
      for (const variant of ["odmrp", "cqmp", "proposed"]) {
        expect(svg).toContain(`data-series="${variant}"`);
      }
      expect(svg).toContain("number of sources");
    }
  });

  it("labels the y axis with units", () => {
    const dir = mkdtempSync(join(tmpdir(), "plot-"));
    const svg = plotToTmp("avg_delay_s", dir, "delay.svg");
    expect(svg).toContain("average end-to-end delay (s)");
  });

  it("re-running produces identical bytes", () => {
    const dir = mkdtempSync(join(tmpdir(), "plot-"));
    const a = plotToTmp("pdr", dir, "a.svg");
    const b = plotToTmp("pdr", dir, "b.svg");
    expect(a).toBe(b);
  });

  it("single-seed data collapses whiskers to points", () => {
    const dir = mkdtempSync(join(tmpdir(), "plot-"));
    const lines = readFileSync(FIXTURE, "utf8").split("\n");
    const single = [lines[0], ...lines.slice(1).filter((l) => l.startsWith("0,"))].join("\n");
    const csv = join(dir, "single.csv");
    writeFileSync(csv, single);
    const out = join(dir, "single.svg");
    plotMetric(csv, "pdr", out);
    const svg = readFileSync(out, "utf8");
    // whisker endpoints coincide: the vertical whisker line has y1 == y2
    const whiskers = [...svg.matchAll(/<line x1="([^"]+)" y1="([^"]+)" x2="\1" y2="([^"]+)" stroke="#/g)];
    expect(whiskers.length).toBeGreaterThan(0);
    for (const m of whiskers) {
      expect(m[2]).toBe(m[3]);
    }
  });

  it("rejects an unknown metric", () => {
    expect(() => plotMetric(FIXTURE, "bogus" as Metric, "/tmp/never.svg")).toThrowError(/unknown metric/);
  });
});
