/** Minimal CSV reader for the harness output schema (no quoting, '.' decimals). */

import { readFileSync } from "fs";

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export class MissingColumnError extends Error {
  constructor(column: string, path: string) {
    super(`column '${column}' not present in ${path}`);
    this.name = "MissingColumnError";
  }
}

export class EmptyDataError extends Error {
  constructor(path: string) {
    super(`no data rows in ${path}`);
    this.name = "EmptyDataError";
  }
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    return { columns: [], rows: [] };
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, string> = {};
    columns.forEach((c, i) => {
      row[c] = cells[i] ?? "";
    });
    return row;
  });
  return { columns, rows };
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf-8"));
}

export function requireColumns(table: Table, needed: string[], path: string): void {
  for (const c of needed) {
    if (!table.columns.includes(c)) {
      throw new MissingColumnError(c, path);
    }
  }
  if (table.rows.length === 0) {
    throw new EmptyDataError(path);
  }
}

export function num(row: Record<string, string>, column: string): number {
  const v = row[column];
  if (v === undefined || v === "") {
    return NaN;
  }
  return Number(v);
}
