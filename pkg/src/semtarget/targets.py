"""Most-similar / least-similar target lookup tables.

One table per (similarity source, dataset); the table is the unit of
exchange between this toolkit and any attack pipeline. Ties are broken by
the lowest class index so identical inputs always produce identical tables.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .embeddings import MATRIX_KINDS, SimilarityMatrix
from .errors import ValidationError

TABLE_COLUMNS = (
    "gt_index",
    "gt_label",
    "ms_index",
    "ms_label",
    "ms_score",
    "ls_index",
    "ls_label",
    "ls_score",
)


@dataclass(frozen=True)
class TargetRow:
    gt_index: int
    gt_label: str
    ms_index: int
    ms_label: str
    ms_score: float
    ls_index: int
    ls_label: str
    ls_score: float


@dataclass
class TargetTable:
    source_name: str
    kind: str
    rows: list[TargetRow]

    @property
    def num_classes(self) -> int:
        return len(self.rows)

    def target_index(self, gt: int, variant: str) -> int:
        if not 0 <= gt < len(self.rows):
            raise ValidationError(f"class index {gt} out of range for C={len(self.rows)}")
        row = self.rows[gt]
        v = variant.upper()
        if v == "MS":
            return row.ms_index
        if v == "LS":
            return row.ls_index
        raise ValidationError(f"unknown variant {variant!r}")


def build_targets(s: SimilarityMatrix, labels: Iterable[str]) -> TargetTable:
    """Per-class argmax/argmin over the matrix, ground truth excluded.

    Ties go to the lowest class index for both the most- and least-similar
    choice, making the table deterministic.
    """
    labels = list(labels)
    C = s.num_classes
    if C < 2:
        raise ValidationError("need at least 2 classes to select targets")
    if len(labels) != C:
        raise ValidationError(f"label count {len(labels)} does not match matrix size {C}")
    rows = []
    for gt in range(C):
        scores = s.values[gt]
        masked_hi = scores.copy()
        masked_hi[gt] = -np.inf
        ms = int(np.argmax(masked_hi))
        masked_lo = scores.copy()
        masked_lo[gt] = np.inf
        ls = int(np.argmin(masked_lo))
        rows.append(
            TargetRow(
                gt_index=gt,
                gt_label=labels[gt],
                ms_index=ms,
                ms_label=labels[ms],
                ms_score=float(scores[ms]),
                ls_index=ls,
                ls_label=labels[ls],
                ls_score=float(scores[ls]),
            )
        )
    return TargetTable(source_name=s.source_name, kind=s.kind, rows=rows)


def write_table(t: TargetTable) -> str:
    """Render as CSV; scores carry 12 significant digits."""
    buf = io.StringIO()
    buf.write(f"# source={t.source_name} kind={t.kind}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in t.rows:
        writer.writerow(
            [
                row.gt_index,
                row.gt_label,
                row.ms_index,
                row.ms_label,
                format(row.ms_score, ".12g"),
                row.ls_index,
                row.ls_label,
                format(row.ls_score, ".12g"),
            ]
        )
    return buf.getvalue()


def read_table(stream: str | Iterable[str]) -> TargetTable:
    """Parse a table CSV, enforcing the selection invariants on every row."""
    lines = stream.splitlines() if isinstance(stream, str) else [ln.rstrip("\n") for ln in stream]
    source_name = "unknown"
    kind = "cosine"
    data_lines = []
    for line in lines:
        if line.startswith("#"):
            for token in line.lstrip("#").split():
                if "=" in token:
                    key, _, value = token.partition("=")
                    if key == "source":
                        source_name = value
                    elif key == "kind":
                        kind = value
            continue
        if line.strip():
            data_lines.append(line)
    if kind not in MATRIX_KINDS:
        raise ValidationError(f"unknown similarity kind {kind!r}")
    if not data_lines:
        raise ValidationError("empty table")

    reader = csv.DictReader(data_lines)
    missing = [c for c in TABLE_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ValidationError(f"missing column(s): {', '.join(missing)}")

    by_gt: dict[int, TargetRow] = {}
    for lineno, rec in enumerate(reader, start=2):
        if any(rec.get(c) is None for c in TABLE_COLUMNS):
            raise ValidationError(f"table line {lineno}: short row")
        try:
            row = TargetRow(
                gt_index=int(rec["gt_index"]),
                gt_label=rec["gt_label"],
                ms_index=int(rec["ms_index"]),
                ms_label=rec["ms_label"],
                ms_score=float(rec["ms_score"]),
                ls_index=int(rec["ls_index"]),
                ls_label=rec["ls_label"],
                ls_score=float(rec["ls_score"]),
            )
        except ValueError as exc:
            raise ValidationError(f"table line {lineno}: {exc}") from None
        if row.ms_index == row.gt_index:
            raise ValidationError(f"table line {lineno}: ms_index equals gt_index {row.gt_index}")
        if row.ls_index == row.gt_index:
            raise ValidationError(f"table line {lineno}: ls_index equals gt_index {row.gt_index}")
        if row.ms_score < row.ls_score:
            raise ValidationError(f"table line {lineno}: ms_score < ls_score")
        if row.gt_index in by_gt:
            raise ValidationError(f"table line {lineno}: duplicate gt_index {row.gt_index}")
        by_gt[row.gt_index] = row

    C = len(by_gt)
    if set(by_gt) != set(range(C)):
        raise ValidationError(f"table must cover classes 0..{C - 1} exactly")
    indices = range(C)
    for row in by_gt.values():
        for target in (row.ms_index, row.ls_index):
            if target not in indices:
                raise ValidationError(f"target index {target} out of range for C={C}")
    return TargetTable(source_name=source_name, kind=kind, rows=[by_gt[i] for i in range(C)])
