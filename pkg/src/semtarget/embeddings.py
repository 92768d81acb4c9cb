"""Per-class label embeddings and cosine-similarity matrices.

Embeddings arrive as JSON-lines files (``.embjsonl``): an optional header
object ``{"source": ..., "dim": ...}`` followed by one
``{"class_index": i, "label": ..., "vector": [...]}`` object per class.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationError

MATRIX_KINDS = ("cosine", "wup")


def _as_lines(stream: str | Iterable[str]) -> Iterable[str]:
    if isinstance(stream, str):
        return stream.splitlines()
    return stream


@dataclass
class SimilarityMatrix:
    """Symmetric C x C class-pair similarity table."""

    source_name: str
    values: np.ndarray
    kind: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValidationError(f"similarity matrix must be square, got shape {self.values.shape}")
        if self.kind not in MATRIX_KINDS:
            raise ValidationError(f"unknown similarity kind {self.kind!r}")

    @property
    def num_classes(self) -> int:
        return self.values.shape[0]


@dataclass
class EmbeddingSet:
    """Ordered per-class label vectors from one similarity source."""

    source_name: str
    labels: tuple[str, ...]
    vectors: np.ndarray  # (C, d) float64

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValidationError("embedding vectors must form a 2-D array")
        if len(self.labels) != self.vectors.shape[0]:
            raise ValidationError("label count does not match vector count")

    @property
    def num_classes(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def load_embeddings(stream: str | Iterable[str], default_source: str = "unknown") -> EmbeddingSet:
    """Parse and validate a ``.embjsonl`` stream.

    Rejects dimension mismatches, missing or duplicate class indices,
    zero-norm vectors, and non-finite components.
    """
    source = default_source
    header_dim: int | None = None
    rows: dict[int, tuple[str, list[float]]] = {}
    for lineno, raw in enumerate(_as_lines(stream), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: invalid JSON ({exc})") from exc
        if not isinstance(obj, dict):
            raise ValidationError(f"line {lineno}: expected a JSON object")
        if "class_index" not in obj:
            if rows:
                raise ValidationError(f"line {lineno}: header object after data lines")
            source = str(obj.get("source", source))
            if "dim" in obj:
                header_dim = int(obj["dim"])
            continue
        idx = obj["class_index"]
        if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
            raise ValidationError(f"line {lineno}: class_index must be a non-negative integer")
        if idx in rows:
            raise ValidationError(f"line {lineno}: duplicate class index {idx}")
        label = obj.get("label")
        if not isinstance(label, str):
            raise ValidationError(f"line {lineno}: missing or non-string label")
        vector = obj.get("vector")
        if not isinstance(vector, list) or not vector:
            raise ValidationError(f"line {lineno}: vector must be a non-empty array")
        values = []
        for component in vector:
            if isinstance(component, bool) or not isinstance(component, (int, float)):
                raise ValidationError(f"line {lineno}: non-numeric vector component")
            x = float(component)
            if not math.isfinite(x):
                raise ValidationError(f"line {lineno}: non-finite vector component")
            values.append(x)
        expected = header_dim if header_dim is not None else None
        if expected is None and rows:
            expected = len(next(iter(rows.values()))[1])
        if expected is not None and len(values) != expected:
            raise ValidationError(
                f"line {lineno}: dimension mismatch (got {len(values)}, expected {expected})"
            )
        rows[idx] = (label, values)

    if not rows:
        raise ValidationError("no embedding rows found")
    C = len(rows)
    if set(rows) != set(range(C)):
        missing = sorted(set(range(C)) - set(rows))
        raise ValidationError(f"class indices must be 0..{C - 1} with no gaps (missing {missing})")

    labels = tuple(rows[i][0] for i in range(C))
    vectors = np.array([rows[i][1] for i in range(C)], dtype=np.float64)
    norms_sq = np.einsum("ij,ij->i", vectors, vectors)
    if np.any(norms_sq == 0.0):
        bad = int(np.flatnonzero(norms_sq == 0.0)[0])
        raise ValidationError(f"zero-norm vector for class {bad}")
    return EmbeddingSet(source_name=source, labels=labels, vectors=vectors)


def write_embeddings(e: EmbeddingSet, header_extra: dict | None = None) -> str:
    """Serialize to ``.embjsonl`` text; float64 components round-trip bit-exactly."""
    header: dict = {"source": e.source_name, "dim": e.dim}
    if header_extra:
        header.update(header_extra)
    lines = [json.dumps(header)]
    for i in range(e.num_classes):
        lines.append(
            json.dumps(
                {"class_index": i, "label": e.labels[i], "vector": e.vectors[i].tolist()}
            )
        )
    return "\n".join(lines) + "\n"


def cosine(u, v) -> float:
    """Cosine similarity u.v / (|u||v|), clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = math.sqrt(float(np.dot(u, u)))
    nv = math.sqrt(float(np.dot(v, v)))
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("cosine undefined for zero-norm vector")
    value = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, value))


def cosine_matrix(e: EmbeddingSet) -> SimilarityMatrix:
    """Pairwise cosine matrix; entries equal scalar :func:`cosine` calls exactly."""
    C = e.num_classes
    X = e.vectors
    norms = [math.sqrt(float(np.dot(X[i], X[i]))) for i in range(C)]
    values = np.empty((C, C), dtype=np.float64)
    for i in range(C):
        for j in range(i, C):
            v = float(np.dot(X[i], X[j])) / (norms[i] * norms[j])
            v = min(1.0, max(-1.0, v))
            values[i, j] = v
            values[j, i] = v
    return SimilarityMatrix(source_name=e.source_name, values=values, kind="cosine")
