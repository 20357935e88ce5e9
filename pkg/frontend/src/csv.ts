/**
 * Reader for the simulation CSV outputs.
 *
 * Files are plain comma-separated tables with an optional block of
 * `# key=value` comment lines carrying fit results (correlation length,
 * decay exponents, scaling fits).  The renderer never refits anything: the
 * numbers shown in figure annotations are exactly these values.
 */

export interface DataTable {
  columns: string[];
  /** Raw cell strings, row major. */
  cells: string[][];
  /** Fit results and other metadata from `# key=value` lines. */
  fits: Record<string, number>;
}

export class SchemaError extends Error {}

/** Split one CSV row, honoring double-quoted cells with "" escapes. */
export function splitRow(line: string): string[] {
  const out: string[] = [];
  let cell = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i]!;
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          cell += '"';
          i += 1;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      out.push(cell.trim());
      cell = "";
    } else {
      cell += ch;
    }
  }
  out.push(cell.trim());
  return out;
}

export function parseCsv(text: string): DataTable {
  const fits: Record<string, number> = {};
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  let headerIdx = 0;
  for (; headerIdx < lines.length; headerIdx++) {
    const line = lines[headerIdx];
    if (!line.startsWith("#")) break;
    const body = line.replace(/^#\s*/, "");
    const eq = body.indexOf("=");
    if (eq > 0) {
      const value = Number(body.slice(eq + 1));
      if (Number.isFinite(value)) fits[body.slice(0, eq).trim()] = value;
    }
  }
  if (headerIdx >= lines.length) {
    throw new SchemaError("no header row found");
  }
  const columns = splitRow(lines[headerIdx]!);
  const cells = lines.slice(headerIdx + 1).map(splitRow);
  for (const [i, row] of cells.entries()) {
    if (row.length !== columns.length) {
      throw new SchemaError(
        `row ${i + 1} has ${row.length} cells for columns [${columns.join(", ")}]`
      );
    }
  }
  return { columns, cells, fits };
}

export function requireColumns(table: DataTable, wanted: string[], kind: string): void {
  const missing = wanted.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${kind} figure needs columns [${wanted.join(", ")}] but the file has ` +
        `[${table.columns.join(", ")}]; missing [${missing.join(", ")}]`
    );
  }
}

export function numericColumn(table: DataTable, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new SchemaError(`no column named ${name}`);
  return table.cells.map((row, i) => {
    const v = Number(row[idx]);
    if (!Number.isFinite(v)) {
      throw new SchemaError(`column ${name}, row ${i + 1}: ${row[idx]!} is not a number`);
    }
    return v;
  });
}

export function stringColumn(table: DataTable, name: string): string[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new SchemaError(`no column named ${name}`);
  return table.cells.map((row) => row[idx]!);
}
