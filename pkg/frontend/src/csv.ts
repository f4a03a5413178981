/**
 * Reader for isacsim run CSVs (schema v1).
 *
 * A run CSV has one header row and one row per simulated slot. Column names
 * encode vehicle indices (`true_theta_v0`, `pcrb_theta_v1`, ...). The reader
 * validates the columns a figure needs up front and reports every missing
 * name at once, so a schema mismatch fails with a usable message instead of
 * NaN series.
 */

import { readFileSync } from "fs";
import Papa from "papaparse";

export interface RunTable {
  /** source path, used in diagnostics */
  path: string;
  columns: string[];
  rows: Record<string, number | string>[];
}

export class MissingColumnsError extends Error {
  constructor(public path: string, public missing: string[], available: string[]) {
    super(
      `${path}: missing required column(s) ${missing.join(", ")}; ` +
      `available: ${available.join(", ")}`,
    );
  }
}

export function parseRunCsv(text: string, path = "<string>"): RunTable {
  const parsed = Papa.parse<Record<string, number | string>>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`${path}: CSV parse error at row ${first.row}: ${first.message}`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0) {
    throw new Error(`${path}: no header row found`);
  }
  return { path, columns, rows: parsed.data };
}

export function loadRunCsv(path: string): RunTable {
  return parseRunCsv(readFileSync(path, "utf-8"), path);
}

/** Numeric column as an array; throws MissingColumnsError when absent. */
export function column(table: RunTable, name: string): number[] {
  requireColumns(table, [name]);
  return table.rows.map((row) => {
    const v = row[name];
    return typeof v === "number" ? v : Number(v);
  });
}

export function requireColumns(table: RunTable, names: string[]): void {
  const missing = names.filter((n) => !table.columns.includes(n));
  if (missing.length > 0) {
    throw new MissingColumnsError(table.path, missing, table.columns);
  }
}

/** Vehicle indices present in the table, discovered from a column prefix. */
export function vehicleIndices(table: RunTable, prefix = "true_theta_v"): number[] {
  const out: number[] = [];
  for (const name of table.columns) {
    if (name.startsWith(prefix)) {
      const idx = Number(name.slice(prefix.length));
      if (Number.isInteger(idx)) out.push(idx);
    }
  }
  return out.sort((a, b) => a - b);
}
