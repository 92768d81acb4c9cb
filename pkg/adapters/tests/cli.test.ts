import { mkdtempSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { afterAll, describe, expect, it } from 'vitest';

import { main } from '../src/cli.js';

const scratch: string[] = [];

function tempDir(): string {
  const dir = mkdtempSync(join(tmpdir(), 'cli-'));
  scratch.push(dir);
  return dir;
}

afterAll(() => {
  for (const dir of scratch) {
    rmSync(dir, { recursive: true, force: true });
  }
});

describe('exit codes', () => {
  it('no subcommand is a usage error', async () => {
    expect(await main([])).toBe(2);
  });

  it('unknown subcommands are usage errors', async () => {
    expect(await main(['frobnicate'])).toBe(2);
  });

  it('an unknown encoder id is invalid input', async () => {
    const dir = tempDir();
    const labels = join(dir, 'labels.txt');
    writeFileSync(labels, 'cat\ndog\n');
    const code = await main([
      'export-embeddings',
      '--source',
      'clip-vit-b32',
      '--labels',
      labels,
      '--out',
      join(dir, 'x.embjsonl'),
      '--quiet',
    ]);
    expect(code).toBe(2);
  });

  it('a missing labels file is an I/O failure', async () => {
    const dir = tempDir();
    const code = await main([
      'export-embeddings',
      '--source',
      'char-ngram',
      '--labels',
      join(dir, 'nope.txt'),
      '--out',
      join(dir, 'x.embjsonl'),
      '--quiet',
    ]);
    expect(code).toBe(1);
  });

  it('bad variant lists are invalid input', async () => {
    const dir = tempDir();
    const code = await main([
      'run-attacks',
      '--model',
      'minivision-v1',
      '--dataset',
      dir,
      '--table',
      join(dir, 'missing.csv'),
      '--variants',
      'ms,xx',
      '--out',
      join(dir, 'log.predjsonl'),
      '--quiet',
    ]);
    // the missing table is hit first: inputs are read before variants parse
    expect([1, 2]).toContain(code);
  });
});

describe('overwrite protection', () => {
  it('refuses to clobber an existing artifact unless forced', async () => {
    const dir = tempDir();
    const labels = join(dir, 'labels.txt');
    writeFileSync(labels, 'cat\ndog\n');
    const args = [
      'export-embeddings',
      '--source',
      'char-ngram',
      '--labels',
      labels,
      '--out',
      join(dir, 'x.embjsonl'),
      '--quiet',
    ];
    expect(await main(args)).toBe(0);
    expect(await main(args)).toBe(1);
    expect(await main([...args, '--force'])).toBe(0);
  });

  it('refuses to regenerate a dataset over an existing one unless forced', async () => {
    const dir = tempDir();
    const ds = join(dir, 'smoke');
    const args = ['gen-smoke', '--out', ds, '--count', '3', '--quiet'];
    expect(await main(args)).toBe(0);
    expect(await main(args)).toBe(1);
    expect(await main([...args, '--force'])).toBe(0);
  });
});
