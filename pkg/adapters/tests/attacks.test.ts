import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { afterAll, describe, expect, it } from 'vitest';

import { attackConfig, kernelFor, perturb, runAttacks } from '../src/attacks.js';
import { generateSmokeDataset, loadDataset, SMOKE_LABELS } from '../src/dataset.js';
import type { TargetTable } from '../src/formats.js';
import { cosine } from '../src/vector.js';
import { exportClassTemplates, getVisionModel } from '../src/vision.js';
import type { Dataset } from '../src/dataset.js';

const scratch: string[] = [];

afterAll(() => {
  for (const dir of scratch) {
    rmSync(dir, { recursive: true, force: true });
  }
});

function smokeDataset(seed: number, count: number): Dataset {
  const dir = mkdtempSync(join(tmpdir(), 'attacks-'));
  scratch.push(dir);
  const model = getVisionModel('minivision-v1');
  generateSmokeDataset(dir, model, { seed, count, noiseAmp: 0.02 });
  return loadDataset(dir, model);
}

/** MS/LS table derived from the model's own class templates. */
function templatesTable(): TargetTable {
  const model = getVisionModel('minivision-v1');
  const { rows } = exportClassTemplates(model, SMOKE_LABELS, '2026-08-18');
  const vectors = rows.map((r) => r.vector);
  const tableRows = vectors.map((_, gt) => {
    let ms = -1;
    let ls = -1;
    for (let j = 0; j < vectors.length; j += 1) {
      if (j === gt) {
        continue;
      }
      const score = cosine(vectors[gt], vectors[j]);
      if (ms < 0 || score > cosine(vectors[gt], vectors[ms])) {
        ms = j;
      }
      if (ls < 0 || score < cosine(vectors[gt], vectors[ls])) {
        ls = j;
      }
    }
    return { gtIndex: gt, gtLabel: SMOKE_LABELS[gt], msIndex: ms, lsIndex: ls };
  });
  return { sourceName: model.id, kind: 'cosine', rows: tableRows };
}

describe('attackConfig', () => {
  it('fgsm is a single full step, pgd iterates', () => {
    expect(attackConfig('fgsm', 0.1)).toEqual({ name: 'fgsm', epsilon: 0.1, iterations: 1 });
    expect(attackConfig('pgd', 0.3).iterations).toBe(20);
  });

  it('rejects unknown attacks and negative budgets', () => {
    expect(() => attackConfig('deepfool', 0.1)).toThrow(/unknown attack.*fgsm, pgd/);
    expect(() => attackConfig('fgsm', -0.1)).toThrow(/non-negative/);
    expect(() => attackConfig('fgsm', Number.NaN)).toThrow(/non-negative/);
  });
});

describe('perturb', () => {
  const model = getVisionModel('minivision-v1');

  it('stays inside the budget and the pixel range', () => {
    const kernel = kernelFor(model);
    try {
      const clean = model.prototype(0);
      for (const name of ['fgsm', 'pgd'] as const) {
        const adv = perturb(model, kernel, clean, 1, attackConfig(name, 0.1));
        expect(adv.length).toBe(clean.length);
        let worst = 0;
        for (let i = 0; i < adv.length; i += 1) {
          worst = Math.max(worst, Math.abs(adv[i] - clean[i]));
          expect(adv[i]).toBeGreaterThanOrEqual(0);
          expect(adv[i]).toBeLessThanOrEqual(1);
        }
        // float32 round trip costs a hair beyond the nominal ball
        expect(worst).toBeLessThanOrEqual(0.1 + 1e-6);
      }
    } finally {
      kernel.dispose();
    }
  });

  it('is deterministic', () => {
    const kernel = kernelFor(model);
    try {
      const clean = model.prototype(2);
      const config = attackConfig('pgd', 0.2);
      const a = perturb(model, kernel, clean, 5, config);
      const b = perturb(model, kernel, clean, 5, config);
      expect(Array.from(a)).toEqual(Array.from(b));
    } finally {
      kernel.dispose();
    }
  });

  it('refuses models without a linear scoring head', () => {
    expect(() => kernelFor(getVisionModel('blobnet'))).toThrow(/linear scoring head/);
  });
});

describe('runAttacks', () => {
  it('emits the full image x attack x variant grid in dataset order', () => {
    const dataset = smokeDataset(7, 6);
    const table = templatesTable();
    const records = runAttacks(getVisionModel('minivision-v1'), dataset, table, {
      attacks: [attackConfig('fgsm', 0.1), attackConfig('pgd', 0.3)],
      variants: ['MS', 'LS'],
    });
    expect(records.length).toBe(6 * 2 * 2);
    expect(records.map((r) => r.imageId)).toEqual(
      dataset.items.flatMap((item) => Array(4).fill(item.imageId)),
    );
    for (const record of records) {
      expect(record.source).toBe('minivision-v1');
      expect(record.targetIndex).not.toBe(record.gtIndex);
      expect(['MS', 'LS']).toContain(record.variant);
      expect(['fgsm', 'pgd']).toContain(record.attack);
      // smoke images sit close to their prototypes
      expect(record.preIndex).toBe(record.gtIndex);
    }
  });

  it('a zero-budget attack never changes the prediction', () => {
    const dataset = smokeDataset(11, 4);
    const records = runAttacks(getVisionModel('minivision-v1'), dataset, templatesTable(), {
      attacks: [attackConfig('fgsm', 0)],
      variants: ['MS'],
    });
    for (const record of records) {
      expect(record.postIndex).toBe(record.preIndex);
    }
  });

  it('a generous iterated budget reaches the target for both variants', () => {
    const dataset = smokeDataset(13, 10);
    const records = runAttacks(getVisionModel('minivision-v1'), dataset, templatesTable(), {
      attacks: [attackConfig('pgd', 0.3)],
      variants: ['MS', 'LS'],
    });
    expect(records.length).toBe(20);
    for (const record of records) {
      expect(record.postIndex).toBe(record.targetIndex);
    }
  });

  it('rejects a table whose class count differs from the model', () => {
    const dataset = smokeDataset(17, 2);
    const table = templatesTable();
    const truncated = { ...table, rows: table.rows.slice(0, 4) };
    expect(() =>
      runAttacks(getVisionModel('minivision-v1'), dataset, truncated, {
        attacks: [attackConfig('fgsm', 0.1)],
        variants: ['MS'],
      }),
    ).toThrow(/C=4.*C=10/);
  });
});
