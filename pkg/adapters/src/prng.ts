/**
 * Deterministic PRNG helpers. Everything the adapters emit must be
 * reproducible from a seed, so no Math.random anywhere.
 */

/** mulberry32: fast 32-bit PRNG, returns floats in [0, 1). */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Uniform integer in [0, n). */
export function randInt(rand: () => number, n: number): number {
  return Math.floor(rand() * n);
}

/** Balanced sign vector: exactly half +1, half -1, order shuffled. */
export function balancedSigns(rand: () => number, n: number): Int8Array {
  if (n % 2 !== 0) {
    throw new Error(`balanced sign vector needs even length, got ${n}`);
  }
  const signs = new Int8Array(n);
  for (let i = 0; i < n; i++) {
    signs[i] = i < n / 2 ? 1 : -1;
  }
  for (let i = n - 1; i > 0; i--) {
    const j = randInt(rand, i + 1);
    const tmp = signs[i];
    signs[i] = signs[j];
    signs[j] = tmp;
  }
  return signs;
}

/** k distinct indices out of [0, n), sorted ascending. */
export function sampleIndices(rand: () => number, n: number, k: number): number[] {
  if (k > n) {
    throw new Error(`cannot sample ${k} distinct indices from ${n}`);
  }
  const pool = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = randInt(rand, i + 1);
    const tmp = pool[i];
    pool[i] = pool[j];
    pool[j] = tmp;
  }
  return pool.slice(0, k).sort((a, b) => a - b);
}
