// Reader for the simulator's sweep CSV.  The schema is fixed; a missing
// column is a hard error that names the column.

export const REQUIRED_COLUMNS = [
  "seed", "variant", "sources", "nodes", "channel_model",
  "pdr", "avg_delay_s", "rreq_per_node", "ctrl_bits",
  "data_sent", "data_delivered", "mac_drops", "buffer_drops",
  "recovery_events", "mesh_formed", "rejected_auth",
] as const;

export const METRICS = ["pdr", "avg_delay_s", "rreq_per_node"] as const;
export type Metric = (typeof METRICS)[number];

export interface SweepRow {
  seed: number;
  variant: string;
  sources: number;
  pdr: number;
  avg_delay_s: number;
  rreq_per_node: number;
  [key: string]: number | string;
}

export class SchemaError extends Error {}

export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length === 0) return [];
  const header = lines[0].split(",");
  for (const column of REQUIRED_COLUMNS) {
    if (!header.includes(column)) {
      throw new SchemaError(`missing column '${column}' in sweep CSV`);
    }
  }
  const index = new Map(header.map((name, i) => [name, i]));
  const rows: SweepRow[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(`row has ${cells.length} cells, header has ${header.length}`);
    }
    const cell = (name: string) => cells[index.get(name)!];
    rows.push({
      seed: Number(cell("seed")),
      variant: cell("variant"),
      sources: Number(cell("sources")),
      pdr: Number(cell("pdr")),
      avg_delay_s: Number(cell("avg_delay_s")),
      rreq_per_node: Number(cell("rreq_per_node")),
    });
  }
  return rows;
}
