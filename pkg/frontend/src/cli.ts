#!/usr/bin/env node
// analyze plot --csv sweep.csv --metric pdr --out pdr.svg
// analyze summary --csv sweep.csv

import { Metric, METRICS, SchemaError } from "./csv.js";
import { plotMetric } from "./plot.js";
import { summarize } from "./summary.js";

function parseFlags(args: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < args.length; i += 2) {
    if (!args[i].startsWith("--") || i + 1 >= args.length) {
      throw new Error(`malformed arguments near '${args[i]}'`);
    }
    flags.set(args[i].slice(2), args[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`missing required flag --${name}`);
  return value;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "plot") {
      const flags = parseFlags(rest);
      const metric = need(flags, "metric") as Metric;
      if (!METRICS.includes(metric)) {
        throw new Error(`unknown metric '${metric}', expected one of ${METRICS.join(", ")}`);
      }
      plotMetric(need(flags, "csv"), metric, need(flags, "out"));
      return 0;
    }
    if (command === "summary") {
      const flags = parseFlags(rest);
      process.stdout.write(summarize(need(flags, "csv")));
      return 0;
    }
    process.stderr.write("usage: analyze plot --csv FILE --metric M --out FILE | analyze summary --csv FILE\n");
    return 2;
  } catch (err) {
    const kind = err instanceof SchemaError ? "schema error" : "error";
    process.stderr.write(`${kind}: ${(err as Error).message}\n`);
    return 1;
  }
}

import { pathToFileURL } from "url";

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
