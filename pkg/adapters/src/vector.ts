/** Small dense-vector helpers shared by encoders, models, and checks. */

export function dot(a: Float64Array, b: Float64Array): number {
  if (a.length !== b.length) {
    throw new Error(`vector size mismatch: ${a.length} vs ${b.length}`);
  }
  let sum = 0;
  for (let i = 0; i < a.length; i++) {
    sum += a[i] * b[i];
  }
  return sum;
}

export function norm(a: Float64Array): number {
  return Math.sqrt(dot(a, a));
}

export function cosine(a: Float64Array, b: Float64Array): number {
  const na = norm(a);
  const nb = norm(b);
  if (na === 0 || nb === 0) {
    throw new Error('cosine undefined for zero vectors');
  }
  return dot(a, b) / (na * nb);
}

/** In-place L2 normalization; rejects zero vectors. */
export function l2normalize(a: Float64Array): Float64Array {
  const n = norm(a);
  if (n === 0) {
    throw new Error('cannot normalize a zero vector');
  }
  for (let i = 0; i < a.length; i++) {
    a[i] /= n;
  }
  return a;
}

/**
 * Rank of class j among all classes by descending cosine to class i's
 * vector, with i itself pinned at rank 0 and ties broken by lowest index.
 */
export function templateRank(vectors: Float64Array[], i: number, j: number): number {
  if (i === j) {
    return 0;
  }
  const others = vectors
    .map((v, k) => ({ k, sim: cosine(vectors[i], v) }))
    .filter(({ k }) => k !== i)
    .sort((a, b) => (b.sim - a.sim) || (a.k - b.k));
  return 1 + others.findIndex(({ k }) => k === j);
}
