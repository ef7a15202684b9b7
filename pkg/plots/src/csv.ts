/**
 * Strict readers for the simulator's output files.
 *
 * The metrics CSV schema is pinned: any column that is missing, renamed or
 * out of place aborts with that column named. The one tolerated deviation is
 * an absent `phi_plan` column (runs without a planning phase), which callers
 * can detect via `hasPhiPlan`.
 */

export const METRICS_COLUMNS = [
  "tick",
  "robot",
  "coverage_m2",
  "h_norm",
  "phi_map",
  "phi_plan",
  "bytes_tx",
  "bytes_rx",
  "distance_m",
] as const;

export interface MetricsRow {
  tick: number;
  robot: number;
  coverage_m2: number;
  h_norm: number;
  phi_map: number;
  phi_plan: number | null;
  bytes_tx: number;
  bytes_rx: number;
  distance_m: number;
}

export interface MetricsTable {
  rows: MetricsRow[];
  robots: number[];
  hasPhiPlan: boolean;
}

export class SchemaError extends Error {
  readonly column: string;

  constructor(column: string, message: string) {
    super(message);
    this.column = column;
  }
}

export function parseMetricsCsv(text: string): MetricsTable {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("tick", "metrics file is empty (missing header)");
  }
  const header = lines[0].split(",");
  const expected = [...METRICS_COLUMNS] as string[];
  const hasPhiPlan = header.includes("phi_plan");
  const wanted = hasPhiPlan ? expected : expected.filter((c) => c !== "phi_plan");
  for (let i = 0; i < Math.max(header.length, wanted.length); i++) {
    if (i >= wanted.length) {
      throw new SchemaError(header[i], `unexpected column '${header[i]}'`);
    }
    if (i >= header.length || header[i] !== wanted[i]) {
      throw new SchemaError(
        wanted[i],
        `schema mismatch: expected column '${wanted[i]}' at position ${i + 1}, ` +
          `found '${header[i] ?? "<nothing>"}'`,
      );
    }
  }
  const rows: MetricsRow[] = [];
  const robots = new Set<number>();
  for (let n = 1; n < lines.length; n++) {
    const parts = lines[n].split(",");
    if (parts.length !== wanted.length) {
      throw new SchemaError(
        wanted[Math.min(parts.length, wanted.length) - 1],
        `row ${n + 1} has ${parts.length} fields, expected ${wanted.length}`,
      );
    }
    const get = (col: string): number => {
      const idx = wanted.indexOf(col);
      const value = Number(parts[idx]);
      if (!Number.isFinite(value)) {
        throw new SchemaError(col, `row ${n + 1}: '${parts[idx]}' is not a number in '${col}'`);
      }
      return value;
    };
    const row: MetricsRow = {
      tick: get("tick"),
      robot: get("robot"),
      coverage_m2: get("coverage_m2"),
      h_norm: get("h_norm"),
      phi_map: get("phi_map"),
      phi_plan: hasPhiPlan ? get("phi_plan") : null,
      bytes_tx: get("bytes_tx"),
      bytes_rx: get("bytes_rx"),
      distance_m: get("distance_m"),
    };
    rows.push(row);
    robots.add(row.robot);
  }
  return { rows, robots: [...robots].sort((a, b) => a - b), hasPhiPlan };
}

export interface EigenRow {
  iter: number;
  phi: number;
  objective: number;
  angle: number;
}

export function parseEigenTrace(text: string): EigenRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) return [];
  const header = lines[0].split(",");
  const expected = ["iter", "phi", "objective", "angle"];
  for (let i = 0; i < expected.length; i++) {
    if (header[i] !== expected[i]) {
      throw new SchemaError(expected[i], `eigen trace missing column '${expected[i]}'`);
    }
  }
  return lines.slice(1).map((line) => {
    const [iter, phi, objective, angle] = line.split(",").map(Number);
    return { iter, phi, objective, angle };
  });
}
