/**
 * Built-in toy vision classifiers with frozen, seed-derived weights.
 *
 * minivision-v1 is a linear classifier over 16x16 grayscale images whose
 * class weight vectors follow a two-level hierarchy: five branch patterns
 * spanning the full image, each split into a sibling pair differing only
 * on a small pixel subset. Images generated from the matching prototypes
 * are classified correctly by construction, and sibling classes are
 * genuinely closer than cross-branch ones, in weights and in pixels.
 *
 * blobnet exists to exercise the unsupported-architecture path: it scores
 * classes by prototype distance and has no final linear layer to export.
 */

import { balancedSigns, mulberry32, sampleIndices } from './prng.js';
import { l2normalize } from './vector.js';
import type { EmbeddingRow, Provenance } from './formats.js';

export const IMAGE_SIDE = 16;
export const IMAGE_PIXELS = IMAGE_SIDE * IMAGE_SIDE;

const NUM_CLASSES = 10;
const BRANCH_CONTRAST = 0.22;
const SIBLING_CONTRAST = 0.06;
const SIBLING_SUBSET = 64;
const WEIGHT_SEED = 0x5eed01;

export interface VisionModel {
  id: string;
  revision: string;
  numClasses: number;
  inputPixels: number;
  /** Clean class prototype images, one per class, pixels in [0, 1]. */
  prototype(classIndex: number): Float64Array;
  /** Per-class scores for one image. */
  logits(image: Float64Array): Float64Array;
  /** Final linear layer rows, one per class; absent when the head is not linear. */
  finalLinear?: () => Float64Array[];
}

function buildPrototypeMeans(): Float64Array[] {
  const rand = mulberry32(WEIGHT_SEED);
  const means: Float64Array[] = [];
  for (let pair = 0; pair < NUM_CLASSES / 2; pair++) {
    const branch = balancedSigns(rand, IMAGE_PIXELS);
    const subset = sampleIndices(rand, IMAGE_PIXELS, SIBLING_SUBSET);
    const leafSigns = balancedSigns(rand, SIBLING_SUBSET);
    for (const side of [1, -1]) {
      const mean = new Float64Array(IMAGE_PIXELS);
      for (let i = 0; i < IMAGE_PIXELS; i++) {
        mean[i] = 0.5 + BRANCH_CONTRAST * branch[i];
      }
      subset.forEach((pixel, k) => {
        mean[pixel] += side * SIBLING_CONTRAST * leafSigns[k];
      });
      means.push(mean);
    }
  }
  return means;
}

function argmax(scores: Float64Array): number {
  let best = 0;
  for (let i = 1; i < scores.length; i++) {
    if (scores[i] > scores[best]) {
      best = i;
    }
  }
  return best;
}

function minivision(): VisionModel {
  const means = buildPrototypeMeans();
  // Weight rows are the centered prototypes, so w_c . x is largest exactly
  // when x sits nearest prototype c.
  const weights = means.map((mean) => {
    const w = new Float64Array(IMAGE_PIXELS);
    for (let i = 0; i < IMAGE_PIXELS; i++) {
      w[i] = mean[i] - 0.5;
    }
    return w;
  });
  return {
    id: 'minivision-v1',
    revision: 'minivision-v1.0',
    numClasses: NUM_CLASSES,
    inputPixels: IMAGE_PIXELS,
    prototype: (classIndex) => Float64Array.from(means[classIndex]),
    logits(image: Float64Array): Float64Array {
      if (image.length !== IMAGE_PIXELS) {
        throw new Error(`expected ${IMAGE_PIXELS} pixels, got ${image.length}`);
      }
      const scores = new Float64Array(NUM_CLASSES);
      for (let c = 0; c < NUM_CLASSES; c++) {
        let sum = 0;
        const w = weights[c];
        for (let i = 0; i < IMAGE_PIXELS; i++) {
          sum += w[i] * image[i];
        }
        scores[c] = sum;
      }
      return scores;
    },
    finalLinear: () => weights.map((w) => Float64Array.from(w)),
  };
}

function blobnet(): VisionModel {
  const means = buildPrototypeMeans();
  return {
    id: 'blobnet',
    revision: 'blobnet-v1.0',
    numClasses: NUM_CLASSES,
    inputPixels: IMAGE_PIXELS,
    prototype: (classIndex) => Float64Array.from(means[classIndex]),
    logits(image: Float64Array): Float64Array {
      const scores = new Float64Array(NUM_CLASSES);
      for (let c = 0; c < NUM_CLASSES; c++) {
        let dist = 0;
        for (let i = 0; i < IMAGE_PIXELS; i++) {
          const diff = image[i] - means[c][i];
          dist += diff * diff;
        }
        scores[c] = -dist;
      }
      return scores;
    },
  };
}

const registry = new Map<string, () => VisionModel>([
  ['minivision-v1', minivision],
  ['blobnet', blobnet],
]);

export function listVisionModels(): string[] {
  return [...registry.keys()];
}

export function getVisionModel(id: string): VisionModel {
  const factory = registry.get(id);
  if (!factory) {
    throw new Error(`unknown vision model ${JSON.stringify(id)}; available: ${listVisionModels().join(', ')}`);
  }
  return factory();
}

export function predictClass(model: VisionModel, image: Float64Array): number {
  return argmax(model.logits(image));
}

export interface TemplateExport {
  header: Provenance;
  rows: EmbeddingRow[];
}

/** Final-layer weight rows as an embedding set, class-index ordered. */
export function exportClassTemplates(
  model: VisionModel,
  labels: string[],
  date: string,
): TemplateExport {
  if (!model.finalLinear) {
    throw new Error(`${model.id}: no extractable final linear layer`);
  }
  if (labels.length !== model.numClasses) {
    throw new Error(
      `label count ${labels.length} does not match model class count ${model.numClasses}`,
    );
  }
  const weights = model.finalLinear();
  return {
    header: {
      source: model.id,
      dim: model.inputPixels,
      pooling: 'final-linear-rows',
      template: '',
      revision: model.revision,
      date,
    },
    // Unit rows, like the text encoders: downstream similarity is cosine,
    // so scale carries no information and dropping it keeps sources alike.
    rows: weights.map((vector, classIndex) => ({
      classIndex,
      label: labels[classIndex],
      vector: l2normalize(vector),
    })),
  };
}
