/**
 * Smoke-test image sets: tiny labeled datasets matching the built-in
 * models, stored as one JSON pixel file per image plus a labels.csv index.
 *
 * Images are the ground-truth class prototype plus bounded uniform noise,
 * so a freshly generated set is classified cleanly by the matching model
 * while still giving attacks realistic per-image variation.
 */

import { mkdirSync, readFileSync, writeFileSync } from 'fs';
import { join } from 'path';

import { mulberry32 } from './prng.js';
import type { VisionModel } from './vision.js';

export const SMOKE_LABELS = [
  'ambulance',
  'school bus',
  'minibus',
  'sports car',
  'tarantula',
  'goldfish',
  'acorn',
  'broccoli',
  'pipe organ',
  'grand piano',
];

export interface DatasetItem {
  imageId: string;
  gtIndex: number;
  pixels: Float64Array;
}

export interface SkippedItem {
  imageId: string;
  reason: string;
}

export interface Dataset {
  items: DatasetItem[];
  skipped: SkippedItem[];
}

export interface SmokeOptions {
  seed: number;
  count: number;
  noiseAmp: number;
}

export const SMOKE_DEFAULTS: SmokeOptions = { seed: 20260818, count: 10, noiseAmp: 0.02 };

function clamp01(x: number): number {
  return Math.min(1, Math.max(0, x));
}

/** Write `count` labeled images cycling through the model's classes. */
export function generateSmokeDataset(
  dir: string,
  model: VisionModel,
  options: SmokeOptions,
): string[] {
  if (options.count < 1) {
    throw new Error(`image count must be positive, got ${options.count}`);
  }
  if (options.noiseAmp < 0) {
    throw new Error(`noise amplitude must be non-negative, got ${options.noiseAmp}`);
  }
  mkdirSync(dir, { recursive: true });
  const rand = mulberry32(options.seed);
  const indexLines = ['image_id,file,gt_index'];
  const written: string[] = [];
  for (let k = 0; k < options.count; k++) {
    const gtIndex = k % model.numClasses;
    const imageId = `img_${String(k).padStart(3, '0')}`;
    const pixels = model.prototype(gtIndex);
    for (let i = 0; i < pixels.length; i++) {
      pixels[i] = clamp01(pixels[i] + options.noiseAmp * (2 * rand() - 1));
    }
    const file = `${imageId}.json`;
    writeFileSync(
      join(dir, file),
      JSON.stringify({ image_id: imageId, pixels: Array.from(pixels) }) + '\n',
    );
    indexLines.push(`${imageId},${file},${gtIndex}`);
    written.push(file);
  }
  writeFileSync(join(dir, 'labels.csv'), indexLines.join('\n') + '\n');
  return written;
}

function loadOneImage(dir: string, file: string, expectedPixels: number): Float64Array {
  const obj = JSON.parse(readFileSync(join(dir, file), 'utf8'));
  const pixels = obj.pixels;
  if (!Array.isArray(pixels) || pixels.length !== expectedPixels) {
    throw new Error(`expected ${expectedPixels} pixels`);
  }
  const out = new Float64Array(expectedPixels);
  for (let i = 0; i < expectedPixels; i++) {
    const x = pixels[i];
    if (typeof x !== 'number' || !Number.isFinite(x) || x < 0 || x > 1) {
      throw new Error(`pixel ${i} outside [0, 1]`);
    }
    out[i] = x;
  }
  return out;
}

/**
 * Load a dataset directory against a model. A ground-truth index outside
 * the model's class range fails the whole load; unreadable images are
 * skipped and reported.
 */
export function loadDataset(dir: string, model: VisionModel): Dataset {
  const index = readFileSync(join(dir, 'labels.csv'), 'utf8');
  const lines = index.split('\n').filter((line) => line.trim());
  if (lines[0] !== 'image_id,file,gt_index') {
    throw new Error(`labels.csv: unexpected header ${JSON.stringify(lines[0])}`);
  }
  const items: DatasetItem[] = [];
  const skipped: SkippedItem[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(',');
    if (parts.length !== 3) {
      throw new Error(`labels.csv: expected 3 columns, got ${JSON.stringify(line)}`);
    }
    const [imageId, file, gtField] = parts;
    const gtIndex = Number(gtField);
    if (!Number.isInteger(gtIndex) || gtIndex < 0) {
      throw new Error(`labels.csv: bad gt_index ${JSON.stringify(gtField)} for ${imageId}`);
    }
    if (gtIndex >= model.numClasses) {
      throw new Error(
        `dataset/model class mismatch: gt_index ${gtIndex} but ${model.id} has C=${model.numClasses}`,
      );
    }
    try {
      items.push({ imageId, gtIndex, pixels: loadOneImage(dir, file, model.inputPixels) });
    } catch (err) {
      skipped.push({ imageId, reason: err instanceof Error ? err.message : String(err) });
    }
  }
  return { items, skipped };
}
