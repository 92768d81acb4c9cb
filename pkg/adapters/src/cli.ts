#!/usr/bin/env node
/**
 * Command-line entry points, one per adapter operation. Flags mirror the
 * evaluation toolkit's CLI: --out for artifacts, --force to overwrite,
 * --quiet to suppress progress lines. Exit codes match it too: 0 success,
 * 1 I/O failure (missing inputs, refusal to overwrite), 2 invalid input.
 */

import { existsSync, mkdirSync, readFileSync, writeFileSync } from 'fs';
import { dirname, join } from 'path';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { attackConfig, runAttacks } from './attacks.js';
import { generateSmokeDataset, loadDataset, SMOKE_DEFAULTS, SMOKE_LABELS } from './dataset.js';
import { encodeLabels } from './encoders.js';
import { parseTargetTable, writeEmbeddings, writePredictions } from './formats.js';
import { exportClassTemplates, getVisionModel } from './vision.js';

class IoFailure extends Error {}

function isoDate(override: string | undefined): string {
  return override ?? new Date().toISOString().slice(0, 10);
}

function readLabelsFile(path: string): string[] {
  const labels = readTextFile(path)
    .split('\n')
    .map((line) => line.trim())
    .filter((line) => line && !line.startsWith('#'));
  if (!labels.length) {
    throw new Error(`no labels in ${path}`);
  }
  return labels;
}

function readTextFile(path: string): string {
  if (!existsSync(path)) {
    throw new IoFailure(`missing input: ${path}`);
  }
  return readFileSync(path, 'utf8');
}

function writeArtifact(path: string, content: string, force: boolean): void {
  if (existsSync(path) && !force) {
    throw new IoFailure(`refusing to overwrite ${path} (use --force)`);
  }
  mkdirSync(dirname(path) || '.', { recursive: true });
  writeFileSync(path, content);
}

function say(quiet: boolean, message: string): void {
  if (!quiet) {
    console.log(message);
  }
}

interface CommonArgs {
  out: string;
  force: boolean;
  quiet: boolean;
}

function cmdExportEmbeddings(
  args: CommonArgs & { source: string; labels: string; template: string; date?: string },
): void {
  const labels = readLabelsFile(args.labels);
  const { header, rows } = encodeLabels(args.source, labels, args.template, isoDate(args.date));
  writeArtifact(args.out, writeEmbeddings(header, rows), args.force);
  say(args.quiet, `exported ${rows.length} label embeddings (source=${header.source}, dim=${header.dim})`);
}

function cmdExportTemplates(
  args: CommonArgs & { model: string; labels: string; date?: string },
): void {
  const model = getVisionModel(args.model);
  const labels = readLabelsFile(args.labels);
  const { header, rows } = exportClassTemplates(model, labels, isoDate(args.date));
  writeArtifact(args.out, writeEmbeddings(header, rows), args.force);
  say(args.quiet, `exported ${rows.length} class templates (model=${header.source}, dim=${header.dim})`);
}

function cmdGenSmoke(
  args: CommonArgs & { model: string; seed: number; count: number; noise: number },
): void {
  const model = getVisionModel(args.model);
  if (existsSync(join(args.out, 'labels.csv')) && !args.force) {
    throw new IoFailure(`refusing to overwrite dataset in ${args.out} (use --force)`);
  }
  const files = generateSmokeDataset(args.out, model, {
    seed: args.seed,
    count: args.count,
    noiseAmp: args.noise,
  });
  const labels = SMOKE_LABELS.slice(0, model.numClasses);
  writeFileSync(join(args.out, 'labels.txt'), labels.join('\n') + '\n');
  say(args.quiet, `wrote ${files.length} images for ${model.numClasses} classes in ${args.out}`);
}

function cmdRunAttacks(
  args: CommonArgs & {
    model: string;
    dataset: string;
    table: string;
    attacks: string;
    eps: number;
    variants: string;
    date?: string;
  },
): void {
  const model = getVisionModel(args.model);
  const table = parseTargetTable(readTextFile(args.table));
  const dataset = loadDataset(args.dataset, model);
  const attacks = args.attacks
    .split(',')
    .map((name) => name.trim())
    .filter(Boolean)
    .map((name) => attackConfig(name, args.eps));
  if (!attacks.length) {
    throw new Error('attack list is empty');
  }
  const variants = args.variants
    .split(',')
    .map((v) => v.trim().toUpperCase())
    .filter(Boolean) as ('MS' | 'LS')[];
  if (!variants.length || variants.some((v) => v !== 'MS' && v !== 'LS')) {
    throw new Error(`variants must be drawn from ms,ls: got ${JSON.stringify(args.variants)}`);
  }
  const records = runAttacks(model, dataset, table, { attacks, variants });
  writeArtifact(args.out, writePredictions(records), args.force);
  const manifest = {
    model: model.id,
    revision: model.revision,
    date: isoDate(args.date),
    table_source: table.sourceName,
    attacks: attacks.map((a) => ({ name: a.name, epsilon: a.epsilon, iterations: a.iterations })),
    variants,
    images: dataset.items.length,
    skipped: dataset.skipped.length,
    records: records.length,
  };
  writeArtifact(`${args.out}.manifest.json`, JSON.stringify(manifest, null, 2) + '\n', args.force);
  if (dataset.skipped.length) {
    console.error(`skipped ${dataset.skipped.length} unreadable image(s)`);
    for (const skip of dataset.skipped) {
      console.error(`  ${skip.imageId}: ${skip.reason}`);
    }
  }
  say(args.quiet, `wrote ${records.length} prediction records to ${args.out}`);
}

export function main(argv: string[]): Promise<number> {
  return new Promise((resolve) => {
    // Handler exceptions surface three ways depending on where yargs is in
    // its lifecycle: the fail callback, a rejected parse promise, or a
    // synchronous rethrow. First resolution wins in all three.
    const codeOf = (error: unknown): number => (error instanceof IoFailure ? 1 : 2);
    const common = {
      out: { type: 'string' as const, demandOption: true, describe: 'output path' },
      force: { type: 'boolean' as const, default: false, describe: 'overwrite existing outputs' },
      quiet: { type: 'boolean' as const, default: false, describe: 'suppress progress output' },
    };
    const parser = yargs(argv)
      .scriptName('semtarget-adapters')
      .usage('Bridge encoder and classifier models to the evaluation toolkit formats.')
      .command(
        'export-embeddings',
        'encode class labels into an .embjsonl file',
        {
          ...common,
          source: { type: 'string', demandOption: true, describe: 'encoder id' },
          labels: { type: 'string', demandOption: true, describe: 'label list, one per line' },
          template: { type: 'string', default: '', describe: 'prompt template with {} placeholder' },
          date: { type: 'string', describe: 'override provenance date (YYYY-MM-DD)' },
        },
        (args) => cmdExportEmbeddings(args as never),
      )
      .command(
        'export-templates',
        "export a model's final-layer class templates",
        {
          ...common,
          model: { type: 'string', demandOption: true, describe: 'vision model id' },
          labels: { type: 'string', demandOption: true, describe: 'label list, one per line' },
          date: { type: 'string', describe: 'override provenance date (YYYY-MM-DD)' },
        },
        (args) => cmdExportTemplates(args as never),
      )
      .command(
        'gen-smoke',
        'generate a labeled smoke-test image set',
        {
          ...common,
          model: { type: 'string', default: 'minivision-v1', describe: 'vision model id' },
          seed: { type: 'number', default: SMOKE_DEFAULTS.seed, describe: 'generation seed' },
          count: { type: 'number', default: SMOKE_DEFAULTS.count, describe: 'number of images' },
          noise: { type: 'number', default: SMOKE_DEFAULTS.noiseAmp, describe: 'pixel noise amplitude' },
        },
        (args) => cmdGenSmoke(args as never),
      )
      .command(
        'run-attacks',
        'attack a dataset and write a prediction log',
        {
          ...common,
          model: { type: 'string', demandOption: true, describe: 'vision model id' },
          dataset: { type: 'string', demandOption: true, describe: 'dataset directory' },
          table: { type: 'string', demandOption: true, describe: 'MS/LS target table CSV' },
          attacks: { type: 'string', default: 'fgsm', describe: 'comma-separated attack list' },
          eps: { type: 'number', default: 0.1, describe: 'L-infinity budget' },
          variants: { type: 'string', default: 'ms,ls', describe: 'comma-separated variants' },
          date: { type: 'string', describe: 'override provenance date (YYYY-MM-DD)' },
        },
        (args) => cmdRunAttacks(args as never),
      )
      .demandCommand(1, 'pick a subcommand')
      .strict()
      .fail((message, error) => {
        console.error(`error: ${error ? error.message : message}`);
        resolve(error ? codeOf(error) : 2);
      });
    try {
      parser
        .parseAsync()
        .then(() => resolve(0))
        .catch((error: unknown) => resolve(codeOf(error)));
    } catch (error) {
      resolve(codeOf(error));
    }
  });
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(process.argv[1].split('/').pop() ?? '');
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
