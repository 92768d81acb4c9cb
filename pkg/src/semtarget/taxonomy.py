"""Rooted concept hierarchies and Wu-Palmer similarity between dataset classes.

The hierarchy arrives as a TSV edge list (``child<TAB>parent``, ``#`` comments
allowed) plus a CSV class map (``class_index,label,node_id``). Nodes may have
several parents (WordNet nouns form a DAG); depth is 1 + the shortest hop
count to the root, with depth(root) = 1.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .embeddings import SimilarityMatrix
from .errors import CycleError, ValidationError


@dataclass(frozen=True)
class TaxonomyNode:
    node_id: str
    parent_ids: tuple[str, ...]


@dataclass
class Taxonomy:
    """Validated concept DAG with a class-index -> node mapping.

    Immutable after parse; safe to share across workers.
    """

    nodes: dict[str, TaxonomyNode]
    root_id: str
    class_map: dict[int, str]
    labels: dict[int, str]
    depth_cache: dict[str, int]
    _ancestors: dict[str, frozenset[str]] = field(default_factory=dict, repr=False)

    @property
    def num_classes(self) -> int:
        return len(self.class_map)

    def depth(self, node_id: str) -> int:
        """Cached depth; 1 + length of the shortest parent chain to the root."""
        try:
            return self.depth_cache[node_id]
        except KeyError:
            raise ValidationError(f"unknown node {node_id!r}") from None

    def ancestors(self, node_id: str) -> frozenset[str]:
        """All ancestors of a node, the node itself included."""
        if node_id not in self.nodes:
            raise ValidationError(f"unknown node {node_id!r}")
        cached = self._ancestors.get(node_id)
        if cached is not None:
            return cached
        seen: set[str] = set()
        stack = [node_id]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(self.nodes[current].parent_ids)
        result = frozenset(seen)
        self._ancestors[node_id] = result
        return result

    def lcs_depth(self, a: str, b: str) -> int:
        """Depth of the deepest common ancestor of two nodes."""
        common = self.ancestors(a) & self.ancestors(b)
        return max(self.depth_cache[s] for s in common)

    def _class_node(self, i: int) -> str:
        try:
            return self.class_map[i]
        except KeyError:
            raise ValidationError(f"unmapped class index {i}") from None

    def wup(self, i: int, j: int) -> float:
        """Wu-Palmer similarity 2*depth(LCS) / (depth(a) + depth(b)) in (0, 1]."""
        na = self._class_node(i)
        nb = self._class_node(j)
        da = self.depth_cache[na]
        db = self.depth_cache[nb]
        # With multiple parents an ancestor can sit on a longer chain than the
        # node it subsumes; as a subsumer it is never deeper than either node.
        lcs = min(self.lcs_depth(na, nb), da, db)
        return 2.0 * lcs / (da + db)

    def wup_matrix(self) -> SimilarityMatrix:
        """Pairwise WUP over all mapped classes; entries equal scalar wup() calls."""
        C = self.num_classes
        if set(self.class_map) != set(range(C)):
            raise ValidationError(f"class indices must be 0..{C - 1} to build a matrix")
        values = np.empty((C, C), dtype=np.float64)
        for i in range(C):
            for j in range(i, C):
                v = self.wup(i, j)
                values[i, j] = v
                values[j, i] = v
        return SimilarityMatrix(source_name="wup", values=values, kind="wup")

    def class_labels(self) -> list[str]:
        return [self.labels[i] for i in sorted(self.labels)]


def _as_lines(stream: str | Iterable[str]) -> list[str]:
    if isinstance(stream, str):
        return stream.splitlines()
    return [line.rstrip("\n") for line in stream]


def _parse_edges(edge_stream: str | Iterable[str]) -> dict[str, tuple[str, ...]]:
    parents: dict[str, list[str]] = {}

    def ensure(node: str):
        if node not in parents:
            parents[node] = []

    for lineno, raw in enumerate(_as_lines(edge_stream), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ValidationError(f"edge line {lineno}: expected 'child<TAB>parent', got {raw!r}")
        child, parent = parts[0].strip(), parts[1].strip()
        ensure(child)
        ensure(parent)
        if parent not in parents[child]:
            parents[child].append(parent)
    return {node: tuple(ps) for node, ps in parents.items()}


def _find_cycle(parents: dict[str, tuple[str, ...]]):
    """Return one cycle through the parent relation as a node list, or None."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {node: WHITE for node in parents}
    for start in parents:
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        path = [start]
        color[start] = GRAY
        while stack:
            node, idx = stack[-1]
            node_parents = parents[node]
            if idx < len(node_parents):
                stack[-1] = (node, idx + 1)
                nxt = node_parents[idx]
                if color[nxt] == GRAY:
                    cycle_start = path.index(nxt)
                    return path[cycle_start:] + [nxt]
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, 0))
                    path.append(nxt)
            else:
                color[node] = BLACK
                stack.pop()
                path.pop()
    return None


def _compute_depths(parents: dict[str, tuple[str, ...]], root: str) -> dict[str, int]:
    children: dict[str, list[str]] = {node: [] for node in parents}
    for node, ps in parents.items():
        for p in ps:
            children[p].append(node)
    depths = {root: 1}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for child in children[node]:
            if child not in depths:
                depths[child] = depths[node] + 1
                queue.append(child)
    return depths


def parse_taxonomy(edge_stream: str | Iterable[str], class_map_stream: str | Iterable[str]) -> Taxonomy:
    """Parse, validate, and depth-annotate a taxonomy.

    Raises :class:`CycleError` on cyclic edges and :class:`ValidationError`
    on multiple/zero roots, unknown node references, or duplicate class
    indices.
    """
    parents = _parse_edges(edge_stream)
    if not parents:
        raise ValidationError("zero roots: edge stream defines no nodes")

    cycle = _find_cycle(parents)
    if cycle is not None:
        raise CycleError("cycle detected: " + " -> ".join(cycle))

    roots = sorted(node for node, ps in parents.items() if not ps)
    if len(roots) == 0:
        raise ValidationError("zero roots")
    if len(roots) > 1:
        raise ValidationError(f"multiple roots: {', '.join(roots)}")
    root = roots[0]

    depths = _compute_depths(parents, root)

    class_map: dict[int, str] = {}
    labels: dict[int, str] = {}
    rows = list(csv.reader(_as_lines(class_map_stream)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ValidationError("empty class map")
    start = 1 if [c.strip().lower() for c in rows[0][:3]] == ["class_index", "label", "node_id"] else 0
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != 3:
            raise ValidationError(f"class map line {lineno}: expected 3 columns, got {len(row)}")
        try:
            idx = int(row[0])
        except ValueError:
            raise ValidationError(f"class map line {lineno}: non-integer class index {row[0]!r}") from None
        if idx < 0:
            raise ValidationError(f"class map line {lineno}: negative class index {idx}")
        if idx in class_map:
            raise ValidationError(f"class map line {lineno}: duplicate class index {idx}")
        node_id = row[2].strip()
        if node_id not in parents:
            raise ValidationError(f"class map line {lineno}: unknown node_id {node_id!r}")
        class_map[idx] = node_id
        labels[idx] = row[1].strip()

    nodes = {node: TaxonomyNode(node_id=node, parent_ids=ps) for node, ps in parents.items()}
    return Taxonomy(nodes=nodes, root_id=root, class_map=class_map, labels=labels, depth_cache=depths)


def write_edges(t: Taxonomy) -> str:
    """Render the parent relation as child<TAB>parent lines, sorted for
    byte-stable output."""
    pairs = sorted(
        (node.node_id, parent)
        for node in t.nodes.values()
        for parent in node.parent_ids
    )
    return "".join(f"{child}\t{parent}\n" for child, parent in pairs)


def write_classmap(t: Taxonomy) -> str:
    buf = ["class_index,label,node_id\n"]
    for idx in sorted(t.class_map):
        buf.append(f"{idx},{t.labels[idx]},{t.class_map[idx]}\n")
    return "".join(buf)
