"""Synthetic classification tasks with tree-shaped class geometry.

Class means are produced by hierarchical diffusion down a balanced tree:
each node's mean is its parent's mean plus a level-scaled offset drawn
for that edge. Classes with a deeper common ancestor share more offset
levels, so sibling classes sit closer together than cross-branch classes
and semantic similarity (tree distance) agrees with feature similarity by
construction.

Offset directions are balanced sign vectors (equal counts of +1 and -1)
and sibling pairs get opposite directions, so every sibling gap has the
same length regardless of the draw and coordinate sums stay at zero.
That keeps class separation, and with it trained accuracy, stable across
seeds instead of riding the tail of a Gaussian draw.

The diffusion starts from the centre of the unit cube and offset scales
are sized so means stay interior; stray coordinates are clipped to
[MEAN_LOW, MEAN_HIGH].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..embeddings import EmbeddingSet
from ..errors import ValidationError
from ..taxonomy import Taxonomy, TaxonomyNode

# Per-level offset scales: BASE_SCALE * LEVEL_DECAY**(level-1). Flat scales
# keep sibling separation well above the default sample noise while the
# tree ordering (sibling < cousin < cross-branch distance) holds because
# deeper common ancestors mean fewer differing offset levels.
BASE_SCALE = 0.0875
LEVEL_DECAY = 1.0
MEAN_LOW, MEAN_HIGH = 0.05, 0.95


@dataclass
class SyntheticTask:
    C: int
    d: int
    class_tree: Taxonomy
    class_means: np.ndarray
    noise_scale: float
    seed: int

    def labels(self) -> list[str]:
        return self.class_tree.class_labels()

    def mean_embeddings(self) -> EmbeddingSet:
        return EmbeddingSet(
            source_name="means",
            labels=tuple(self.labels()),
            vectors=self.class_means.copy(),
        )


@dataclass
class Dataset:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray


def _build_tree(C: int, branching: int, depth: int) -> Taxonomy:
    """Balanced tree; node ids spell the path from the root in base-b digits."""
    nodes: dict[str, TaxonomyNode] = {"root": TaxonomyNode("root", ())}
    depths = {"root": 1}
    level_ids = [["root"]]
    for level in range(1, depth + 1):
        ids = []
        for parent in level_ids[level - 1]:
            for digit in range(branching):
                suffix = "" if parent == "root" else parent[1:]
                node_id = f"n{suffix}{digit}"
                nodes[node_id] = TaxonomyNode(node_id, (parent,))
                depths[node_id] = level + 1
                ids.append(node_id)
        level_ids.append(ids)
    leaves = level_ids[depth]
    class_map = {i: leaf for i, leaf in enumerate(leaves)}
    labels = {i: leaf for i, leaf in enumerate(leaves)}
    return Taxonomy(
        nodes=nodes,
        root_id="root",
        class_map=class_map,
        labels=labels,
        depth_cache=depths,
    )


def _balanced_sign(rng: np.random.Generator, d: int) -> np.ndarray:
    """Random vector of +/-1 entries with a zero sum (one zero entry if d
    is odd)."""
    w = np.ones(d)
    perm = rng.permutation(d)
    w[perm[: d // 2]] = -1.0
    if d % 2:
        w[perm[-1]] = 0.0
    return w


def _diffuse_means(tree: Taxonomy, C: int, d: int, rng: np.random.Generator) -> np.ndarray:
    means: dict[str, np.ndarray] = {"root": np.full(d, 0.5)}
    children: dict[str, list[str]] = {}
    for node in tree.nodes.values():
        for parent in node.parent_ids:
            children.setdefault(parent, []).append(node.node_id)
    # Children expand in sorted-id order so the draw sequence never depends
    # on dict iteration. Consecutive siblings share one direction with
    # opposite signs, which pins their gap at 2*scale*sqrt(d) exactly.
    frontier = ["root"]
    while frontier:
        nxt = []
        for node_id in frontier:
            kids = sorted(children.get(node_id, []))
            for pair_at in range(0, len(kids), 2):
                level = tree.depth(kids[pair_at]) - 1
                scale = BASE_SCALE * LEVEL_DECAY ** (level - 1)
                w = _balanced_sign(rng, d)
                means[kids[pair_at]] = means[node_id] + scale * w
                if pair_at + 1 < len(kids):
                    means[kids[pair_at + 1]] = means[node_id] - scale * w
            nxt.extend(kids)
        frontier = nxt
    stacked = np.stack([means[tree.class_map[i]] for i in range(C)])
    return np.clip(stacked, MEAN_LOW, MEAN_HIGH)


def _mean_ordering_holds(tree: Taxonomy, means: np.ndarray, C: int) -> bool:
    """Average sibling-pair distance must undercut the average distance
    between classes whose only common ancestor is the root."""
    intra, cross = [], []
    for i in range(C):
        for j in range(i + 1, C):
            a, b = tree.class_map[i], tree.class_map[j]
            dist = float(np.linalg.norm(means[i] - means[j]))
            if tree.nodes[a].parent_ids == tree.nodes[b].parent_ids:
                intra.append(dist)
            elif tree.lcs_depth(a, b) == 1:
                cross.append(dist)
    return bool(np.mean(intra) < np.mean(cross))


def generate_task(
    C: int = 8,
    d: int = 16,
    depth: int = 3,
    noise_scale: float = 0.15,
    seed: int = 7,
    branching: int = 2,
    n_train: int = 500,
    n_test: int = 200,
) -> tuple[SyntheticTask, Dataset]:
    """Build the task and a round-robin-labeled train/test sample set.

    Deterministic given seed. Raises on shape parameters that do not form
    a balanced tree.
    """
    if branching < 2:
        raise ValidationError(f"branching must be >= 2, got {branching}")
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    if C != branching**depth:
        raise ValidationError(
            f"C={C} is not branching**depth ({branching}**{depth}={branching**depth})"
        )
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    if noise_scale < 0:
        raise ValidationError(f"noise_scale must be >= 0, got {noise_scale}")
    if n_train < C or n_test < 1:
        raise ValidationError("need at least one train sample per class and one test sample")

    tree = _build_tree(C, branching, depth)
    # Distinct substream per retry keeps regeneration deterministic.
    for attempt in range(16):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
        means = _diffuse_means(tree, C, d, rng)
        if _mean_ordering_holds(tree, means, C):
            break
    else:
        raise ValidationError("could not realize tree-consistent class means")

    task = SyntheticTask(
        C=C, d=d, class_tree=tree, class_means=means, noise_scale=noise_scale, seed=seed
    )

    sample_rng = np.random.default_rng(np.random.SeedSequence([seed, 1_000_003]))

    def draw(n: int) -> tuple[np.ndarray, np.ndarray]:
        y = np.arange(n) % C
        X = means[y] + noise_scale * sample_rng.normal(0.0, 1.0, (n, d))
        return np.clip(X, 0.0, 1.0), y

    X_train, y_train = draw(n_train)
    X_test, y_test = draw(n_test)
    return task, Dataset(X_train=X_train, y_train=y_train, X_test=X_test, y_test=y_test)
