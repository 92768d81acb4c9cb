/**
 * Built-in deterministic text encoders.
 *
 * Both encoders embed a label by hashing its character n-grams into a
 * fixed-width bucket vector, so labels sharing substrings ("school bus",
 * "minibus") land near each other while unrelated labels ("tarantula") do
 * not. No model download, no process state: the same label always encodes
 * to the same vector on any machine.
 */

import { l2normalize } from './vector.js';
import type { EmbeddingRow, Provenance } from './formats.js';

export interface LabelEncoder {
  id: string;
  revision: string;
  dim: number;
  pooling: string;
  encode(text: string): Float64Array;
}

/** 32-bit FNV-1a over a string, salted per encoder. */
function fnv1a(text: string, salt: string): number {
  let hash = 0x811c9dc5;
  const input = salt + text;
  for (let i = 0; i < input.length; i++) {
    hash ^= input.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/** Lowercase, collapse whitespace, strip outer space. */
function normalizeLabel(text: string): string {
  return text.toLowerCase().replace(/\s+/g, ' ').trim();
}

function ngrams(text: string, n: number): string[] {
  // Spaces around the text give every word boundary grams of its own.
  const padded = ` ${text} `;
  const grams: string[] = [];
  for (let i = 0; i + n <= padded.length; i++) {
    grams.push(padded.slice(i, i + n));
  }
  return grams;
}

function hashedCounts(grams: string[], dim: number, salt: string): Map<number, number> {
  const counts = new Map<number, number>();
  for (const gram of grams) {
    const bucket = fnv1a(gram, salt) % dim;
    counts.set(bucket, (counts.get(bucket) ?? 0) + 1);
  }
  return counts;
}

function requireEncodable(id: string, raw: string, normalized: string): void {
  if (!normalized) {
    throw new Error(`${id}: cannot encode label ${JSON.stringify(raw)}: no encodable characters`);
  }
}

/** Bigram + trigram counts hashed into 64 buckets, L2 normalized. */
function charNgramEncoder(): LabelEncoder {
  const dim = 64;
  return {
    id: 'char-ngram',
    revision: 'char-ngram-v1',
    dim,
    pooling: 'hashed-ngram-counts',
    encode(text: string): Float64Array {
      const normalized = normalizeLabel(text);
      requireEncodable('char-ngram', text, normalized);
      const vector = new Float64Array(dim);
      for (const n of [2, 3]) {
        for (const [bucket, count] of hashedCounts(ngrams(normalized, n), dim, `cn${n}|`)) {
          vector[bucket] += count;
        }
      }
      return l2normalize(vector);
    },
  };
}

/** Adjacent pairs plus skip-1 pairs, log-damped, 256 signed buckets, L2 normalized. */
function charSkipgramEncoder(): LabelEncoder {
  const dim = 256;
  return {
    id: 'char-skipgram',
    revision: 'char-skipgram-v1',
    dim,
    pooling: 'hashed-skipgram-logcounts',
    encode(text: string): Float64Array {
      const normalized = normalizeLabel(text);
      requireEncodable('char-skipgram', text, normalized);
      const padded = ` ${normalized} `;
      const grams: string[] = [];
      for (let i = 0; i + 2 <= padded.length; i++) {
        grams.push(padded.slice(i, i + 2));
      }
      for (let i = 0; i + 3 <= padded.length; i++) {
        grams.push(padded[i] + '_' + padded[i + 2]);
      }
      const vector = new Float64Array(dim);
      const seen = new Map<string, number>();
      for (const gram of grams) {
        seen.set(gram, (seen.get(gram) ?? 0) + 1);
      }
      // Signed buckets: the same gram always lands with the same sign, so
      // shared substrings still add up while unrelated collisions cancel
      // out on average instead of inflating every cosine.
      for (const [gram, count] of seen) {
        const bucket = fnv1a(gram, 'sg|') % dim;
        const sign = fnv1a(gram, 'sgsign|') % 2 === 0 ? 1 : -1;
        vector[bucket] += sign * (1 + Math.log(count));
      }
      return l2normalize(vector);
    },
  };
}

const registry = new Map<string, () => LabelEncoder>([
  ['char-ngram', charNgramEncoder],
  ['char-skipgram', charSkipgramEncoder],
]);

export function listEncoders(): string[] {
  return [...registry.keys()];
}

export function getEncoder(id: string): LabelEncoder {
  const factory = registry.get(id);
  if (!factory) {
    throw new Error(`unknown encoder ${JSON.stringify(id)}; available: ${listEncoders().join(', ')}`);
  }
  return factory();
}

export function applyTemplate(template: string, label: string): string {
  return template ? template.replaceAll('{}', label) : label;
}

export interface EncodeResult {
  header: Provenance;
  rows: EmbeddingRow[];
}

/** Encode every label in class-index order; header carries full provenance. */
export function encodeLabels(
  encoderId: string,
  labels: string[],
  template: string,
  date: string,
): EncodeResult {
  const encoder = getEncoder(encoderId);
  const rows: EmbeddingRow[] = labels.map((label, classIndex) => ({
    classIndex,
    label,
    vector: encoder.encode(applyTemplate(template, label)),
  }));
  return {
    header: {
      source: encoder.id,
      dim: encoder.dim,
      pooling: encoder.pooling,
      template,
      revision: encoder.revision,
      date,
    },
    rows,
  };
}
