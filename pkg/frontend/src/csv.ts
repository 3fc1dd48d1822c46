import fs from "node:fs";

import Papa from "papaparse";

export type Row = Record<string, string | number>;

/**
 * Parse a CSV with a header row and verify the expected columns exist.
 * Throws naming the first missing column, per the input contract.
 */
export function readCsv(path: string, requiredColumns: readonly string[]): Row[] {
  if (!fs.existsSync(path)) {
    throw new Error(`input file not found: ${path}`);
  }
  const text = fs.readFileSync(path, "utf-8");
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new Error(`failed to parse ${path}: ${e.message} (row ${e.row})`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const col of requiredColumns) {
    if (!fields.includes(col)) {
      throw new Error(`schema mismatch in ${path}: missing column "${col}"`);
    }
  }
  return parsed.data;
}

export function numeric(rows: Row[], column: string): number[] {
  return rows.map((r) => {
    const v = r[column];
    if (typeof v !== "number" || !Number.isFinite(v)) {
      throw new Error(`non-numeric value ${JSON.stringify(v)} in column "${column}"`);
    }
    return v;
  });
}

export function readJson<T>(path: string): T {
  if (!fs.existsSync(path)) {
    throw new Error(`input file not found: ${path}`);
  }
  return JSON.parse(fs.readFileSync(path, "utf-8")) as T;
}
