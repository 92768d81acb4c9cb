/**
 * Targeted attacks against the built-in vision models, implemented on
 * tfjs autodiff: the loss is cross entropy toward the designated target,
 * each step descends that loss, and the total perturbation stays inside
 * an L-infinity ball of radius epsilon around the clean image, clipped
 * to valid pixel range.
 */

import * as tf from '@tensorflow/tfjs';

import type { PredictionRecord, TargetTable } from './formats.js';
import { targetFor } from './formats.js';
import type { Dataset } from './dataset.js';
import type { VisionModel } from './vision.js';
import { predictClass } from './vision.js';

export interface AttackConfig {
  name: 'fgsm' | 'pgd';
  epsilon: number;
  iterations: number;
}

export const SUPPORTED_ATTACKS = ['fgsm', 'pgd'] as const;

export function attackConfig(name: string, epsilon: number): AttackConfig {
  if (!(SUPPORTED_ATTACKS as readonly string[]).includes(name)) {
    throw new Error(`unknown attack ${JSON.stringify(name)}; available: ${SUPPORTED_ATTACKS.join(', ')}`);
  }
  if (!(epsilon >= 0)) {
    throw new Error(`epsilon must be non-negative, got ${epsilon}`);
  }
  const iterations = name === 'fgsm' ? 1 : 20;
  return { name: name as AttackConfig['name'], epsilon, iterations };
}

export function kernelFor(model: VisionModel): tf.Tensor2D {
  // Gradients flow through the same weights the model scores with, so
  // only models exposing their linear head can be attacked here.
  if (!model.finalLinear) {
    throw new Error(`${model.id}: attacks need a model with a linear scoring head`);
  }
  const rows = model.finalLinear();
  const flat = new Float32Array(model.inputPixels * model.numClasses);
  rows.forEach((row, c) => {
    for (let i = 0; i < model.inputPixels; i++) {
      flat[i * model.numClasses + c] = row[i];
    }
  });
  return tf.tensor2d(flat, [model.inputPixels, model.numClasses]);
}

/** Cross entropy toward `target` for a single flattened image. */
function targetedLoss(kernel: tf.Tensor2D, target: number, numClasses: number) {
  return (x: tf.Tensor1D): tf.Scalar => {
    const logits = tf.dot(x, kernel) as tf.Tensor1D;
    const oneHot = tf.oneHot(tf.tensor1d([target], 'int32'), numClasses).squeeze() as tf.Tensor1D;
    return tf.losses.softmaxCrossEntropy(oneHot, logits) as tf.Scalar;
  };
}

/** Iterated sign descent inside the epsilon ball; fgsm is one full step. */
export function perturb(
  model: VisionModel,
  kernel: tf.Tensor2D,
  image: Float64Array,
  target: number,
  config: AttackConfig,
): Float64Array {
  const stepSize = config.name === 'fgsm' ? config.epsilon : (2.5 * config.epsilon) / config.iterations;
  const clean = tf.tensor1d(Float32Array.from(image));
  let current = clean.clone();
  const lossFor = targetedLoss(kernel, target, model.numClasses);
  const gradFn = tf.grad((x: tf.Tensor) => lossFor(x as tf.Tensor1D));
  for (let it = 0; it < config.iterations; it++) {
    const next = tf.tidy(() => {
      const grad = gradFn(current);
      const stepped = current.sub(grad.sign().mul(stepSize));
      const low = clean.sub(config.epsilon);
      const high = clean.add(config.epsilon);
      return stepped.clipByValue(0, 1).maximum(low).minimum(high).clipByValue(0, 1);
    });
    current.dispose();
    current = next as tf.Tensor1D;
  }
  const out = Float64Array.from(current.dataSync());
  current.dispose();
  clean.dispose();
  return out;
}

export interface RunOptions {
  attacks: AttackConfig[];
  variants: ('MS' | 'LS')[];
}

/**
 * One record per image x attack x variant, in dataset order. Predictions
 * before and after come from the same model the gradients came from.
 */
export function runAttacks(
  model: VisionModel,
  dataset: Dataset,
  table: TargetTable,
  options: RunOptions,
): PredictionRecord[] {
  if (table.rows.length !== model.numClasses) {
    throw new Error(
      `target table covers C=${table.rows.length} classes but ${model.id} has C=${model.numClasses}`,
    );
  }
  const kernel = kernelFor(model);
  const records: PredictionRecord[] = [];
  try {
    for (const item of dataset.items) {
      const preIndex = predictClass(model, item.pixels);
      for (const attack of options.attacks) {
        for (const variant of options.variants) {
          const target = targetFor(table, item.gtIndex, variant);
          const adversarial = perturb(model, kernel, item.pixels, target, attack);
          records.push({
            imageId: item.imageId,
            gtIndex: item.gtIndex,
            preIndex,
            postIndex: predictClass(model, adversarial),
            targetIndex: target,
            attack: attack.name,
            source: table.sourceName,
            variant,
          });
        }
      }
    }
  } finally {
    kernel.dispose();
  }
  return records;
}
