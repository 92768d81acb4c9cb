/**
 * Writers and readers for the toolkit's interchange formats.
 *
 * The evaluation toolkit owns these formats; everything emitted here must
 * pass its parsers untouched. Embedding files (`.embjsonl`) carry one JSON
 * object per class after a provenance header object; prediction logs
 * (`.predjsonl`) carry one record per line and have no header, so run
 * provenance goes into a sidecar manifest instead.
 */

import Papa from 'papaparse';

export interface Provenance {
  source: string;
  dim: number;
  pooling: string;
  template: string;
  revision: string;
  date: string;
}

export interface EmbeddingRow {
  classIndex: number;
  label: string;
  vector: Float64Array;
}

export interface PredictionRecord {
  imageId: string;
  gtIndex: number;
  preIndex: number;
  postIndex: number;
  targetIndex: number;
  attack: string;
  source: string;
  variant: 'MS' | 'LS';
}

export interface TargetRow {
  gtIndex: number;
  gtLabel: string;
  msIndex: number;
  lsIndex: number;
}

export interface TargetTable {
  sourceName: string;
  kind: string;
  rows: TargetRow[];
}

export function writeEmbeddings(header: Provenance, rows: EmbeddingRow[]): string {
  if (rows.some((r) => r.vector.length !== header.dim)) {
    throw new Error(`vector length differs from header dim ${header.dim}`);
  }
  const lines = [JSON.stringify(header)];
  for (const row of rows) {
    lines.push(
      JSON.stringify({
        class_index: row.classIndex,
        label: row.label,
        vector: Array.from(row.vector),
      }),
    );
  }
  return lines.join('\n') + '\n';
}

export function writePredictions(records: PredictionRecord[]): string {
  const lines = records.map((r) =>
    JSON.stringify({
      image_id: r.imageId,
      gt_index: r.gtIndex,
      pre_index: r.preIndex,
      post_index: r.postIndex,
      target_index: r.targetIndex,
      attack: r.attack,
      source: r.source,
      variant: r.variant,
    }),
  );
  return lines.length ? lines.join('\n') + '\n' : '';
}

export function parsePredictions(text: string): PredictionRecord[] {
  const records: PredictionRecord[] = [];
  for (const line of text.split('\n')) {
    if (!line.trim()) {
      continue;
    }
    const obj = JSON.parse(line);
    records.push({
      imageId: String(obj.image_id),
      gtIndex: Number(obj.gt_index),
      preIndex: Number(obj.pre_index),
      postIndex: Number(obj.post_index),
      targetIndex: Number(obj.target_index),
      attack: String(obj.attack),
      source: String(obj.source),
      variant: obj.variant,
    });
  }
  return records;
}

/** Parse a target table CSV: `# source=.. kind=..` comment, then rows. */
export function parseTargetTable(text: string): TargetTable {
  let sourceName = 'unknown';
  let kind = 'cosine';
  const dataLines: string[] = [];
  for (const line of text.split('\n')) {
    if (line.startsWith('#')) {
      for (const token of line.replace(/^#+/, '').trim().split(/\s+/)) {
        const eq = token.indexOf('=');
        if (eq > 0) {
          const key = token.slice(0, eq);
          const value = token.slice(eq + 1);
          if (key === 'source') {
            sourceName = value;
          } else if (key === 'kind') {
            kind = value;
          }
        }
      }
      continue;
    }
    if (line.trim()) {
      dataLines.push(line);
    }
  }
  if (!dataLines.length) {
    throw new Error('empty target table');
  }
  const parsed = Papa.parse<Record<string, string>>(dataLines.join('\n'), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length) {
    throw new Error(`target table parse error: ${parsed.errors[0].message}`);
  }
  const rows: TargetRow[] = [];
  for (const rec of parsed.data) {
    for (const column of ['gt_index', 'ms_index', 'ls_index']) {
      if (rec[column] === undefined || rec[column] === '') {
        throw new Error(`target table row missing ${column}`);
      }
    }
    rows.push({
      gtIndex: Number(rec.gt_index),
      gtLabel: rec.gt_label ?? '',
      msIndex: Number(rec.ms_index),
      lsIndex: Number(rec.ls_index),
    });
  }
  rows.sort((a, b) => a.gtIndex - b.gtIndex);
  rows.forEach((row, i) => {
    if (row.gtIndex !== i) {
      throw new Error(`target table must cover classes 0..${rows.length - 1}`);
    }
    if (row.msIndex === row.gtIndex || row.lsIndex === row.gtIndex) {
      throw new Error(`target table row ${i}: target equals ground truth`);
    }
  });
  return { sourceName, kind, rows };
}

export function targetFor(table: TargetTable, gt: number, variant: 'MS' | 'LS'): number {
  const row = table.rows[gt];
  if (row === undefined) {
    throw new Error(`class ${gt} not covered by the target table (C=${table.rows.length})`);
  }
  return variant === 'MS' ? row.msIndex : row.lsIndex;
}
