/**
 * Build a circuit-search dataset file from a SMILES task CSV.
 *
 * Input columns (by header name, extra columns ignored): Drug (SMILES),
 * Y (label or target), split (train/test). Output is the core dataset
 * format `split,label,f0..f127`: the first 128 MACCS keys as raw 0/1 bits.
 * Classification labels stay {0,1} and regression targets stay raw; the
 * core's preprocessing owns all remapping and normalization.
 */
import { MACCS_BITS, smilesToMaccsBits } from "./maccs";

export const OUTPUT_FEATURES = 128;
export const SPLIT_TAGS = new Set(["train", "test"]);

if (OUTPUT_FEATURES > MACCS_BITS) {
  throw new Error("cannot keep more feature columns than MACCS keys exist");
}

export type TaskKind = "classification" | "regression";

export interface MoleculeRecord {
  smiles: string;
  value: number;
  split: string;
}

export interface BuildResult {
  /** Output file content, one line per kept row plus header. */
  content: string;
  kept: number;
  dropped: number;
}

/** Minimal CSV parser: quotes, escaped quotes, CRLF. */
export function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let field = "";
  let inQuotes = false;
  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          inQuotes = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      inQuotes = true;
    } else if (ch === ",") {
      row.push(field);
      field = "";
    } else if (ch === "\n") {
      row.push(field);
      field = "";
      rows.push(row);
      row = [];
    } else if (ch !== "\r") {
      field += ch;
    }
  }
  if (field.length > 0 || row.length > 0) {
    row.push(field);
    rows.push(row);
  }
  return rows;
}

export function readRecords(csvText: string): MoleculeRecord[] {
  const rows = parseCsv(csvText).filter((r) => r.length > 1 || (r.length === 1 && r[0] !== ""));
  if (rows.length < 2) {
    throw new Error("input has no data rows");
  }
  const header = rows[0];
  const col = (name: string) => {
    const idx = header.indexOf(name);
    if (idx < 0) {
      throw new Error(`input is missing required column '${name}' (header: ${header.join(",")})`);
    }
    return idx;
  };
  const smilesIdx = col("Drug");
  const valueIdx = col("Y");
  const splitIdx = col("split");
  return rows.slice(1).map((row, i) => {
    const split = row[splitIdx];
    if (!SPLIT_TAGS.has(split)) {
      throw new Error(`row ${i + 2}: unknown split tag '${split}'`);
    }
    const value = Number(row[valueIdx]);
    if (!Number.isFinite(value)) {
      throw new Error(`row ${i + 2}: bad Y value '${row[valueIdx]}'`);
    }
    return { smiles: row[smilesIdx], value, split };
  });
}

export function validateTaskValues(records: MoleculeRecord[], task: TaskKind): void {
  if (task === "classification") {
    for (const record of records) {
      if (record.value !== 0 && record.value !== 1) {
        throw new Error(
          `classification labels must be 0/1, got ${record.value} for ${record.smiles}`,
        );
      }
    }
  }
}

/** Shortest representation that round-trips; integers stay integers. */
function formatValue(value: number): string {
  return Object.is(value, -0) ? "0" : String(value);
}

export async function buildDataset(csvText: string, task: TaskKind): Promise<BuildResult> {
  const records = readRecords(csvText);
  validateTaskValues(records, task);
  const header = ["split", "label"];
  for (let i = 0; i < OUTPUT_FEATURES; i++) header.push(`f${i}`);
  const lines = [header.join(",")];
  let dropped = 0;
  for (const record of records) {
    const bits = await smilesToMaccsBits(record.smiles);
    if (bits === null) {
      dropped++;
      continue;
    }
    const fields = [record.split, formatValue(record.value)];
    for (let i = 0; i < OUTPUT_FEATURES; i++) fields.push(String(bits[i]));
    lines.push(fields.join(","));
  }
  const kept = records.length - dropped;
  if (kept === 0) {
    throw new Error(`all ${records.length} rows dropped (unparseable SMILES); nothing to write`);
  }
  return { content: lines.join("\n") + "\n", kept, dropped };
}
