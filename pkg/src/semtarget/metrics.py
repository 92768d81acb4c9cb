"""Attack-outcome metrics over prediction logs.

Fooling rate and targeted success rate are plain counts. The dissimilarity
metric ranks the post-attack label against the ground truth by cosine
similarity of the attacked model's own class templates (its final-layer
weight rows), normalized by C-1 so 0 means "still correct" and values near
1/(C-1) mean every miss landed on the nearest template.

All means are integer sums with a single final division, so results are
bit-identical to an exact rational recomputation.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embeddings import EmbeddingSet, cosine
from .errors import ValidationError
from .targets import TargetTable

VARIANTS = ("MS", "LS")


@dataclass(frozen=True)
class PredictionRecord:
    image_id: str
    gt_index: int
    pre_index: int
    post_index: int
    target_index: int
    attack: str
    source: str
    variant: str

    def __post_init__(self) -> None:
        for name in ("gt_index", "pre_index", "post_index", "target_index"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ValidationError(f"{name} must be a non-negative integer, got {value!r}")
        if self.target_index == self.gt_index:
            raise ValidationError(f"record {self.image_id!r}: target_index equals gt_index")
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be MS or LS, got {self.variant!r}")


@dataclass
class ClassTemplates:
    """Per-class template vectors, one row per class."""

    model_name: str
    templates: np.ndarray

    def __post_init__(self) -> None:
        self.templates = np.asarray(self.templates, dtype=np.float64)
        if self.templates.ndim != 2:
            raise ValidationError("templates must be a 2-D matrix")
        if self.templates.shape[0] < 1:
            raise ValidationError("templates must have at least one row")
        norms = np.einsum("ij,ij->i", self.templates, self.templates)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ValidationError(f"zero-norm template row for class {int(zero[0])}")
        if not np.all(np.isfinite(self.templates)):
            raise ValidationError("templates must be finite")

    @property
    def num_classes(self) -> int:
        return int(self.templates.shape[0])

    @classmethod
    def from_embeddings(cls, e: EmbeddingSet) -> "ClassTemplates":
        return cls(model_name=e.source_name, templates=e.vectors)

    def cosine_row(self, gt: int) -> np.ndarray:
        """Cosine of template(gt) against every class template."""
        C = self.num_classes
        if not 0 <= gt < C:
            raise ValidationError(f"class index {gt} out of range for C={C}")
        row = np.empty(C, dtype=np.float64)
        anchor = self.templates[gt]
        for j in range(C):
            row[j] = cosine(anchor, self.templates[j])
        return row


@dataclass(frozen=True)
class MetricsReport:
    attack: str
    source: str
    variant: str
    model: str
    n: int
    fr: float
    tsr: float
    dm: float | None


def _filtered(log: Sequence[PredictionRecord], drop_misclassified: bool) -> list[PredictionRecord]:
    records = list(log)
    if drop_misclassified:
        records = [r for r in records if r.pre_index == r.gt_index]
    if not records:
        raise ValidationError("empty log")
    return records


def fooling_rate(log: Sequence[PredictionRecord], drop_misclassified: bool = True) -> float:
    records = _filtered(log, drop_misclassified)
    changed = sum(1 for r in records if r.pre_index != r.post_index)
    return changed / len(records)


def targeted_success_rate(log: Sequence[PredictionRecord], drop_misclassified: bool = True) -> float:
    records = _filtered(log, drop_misclassified)
    hits = sum(1 for r in records if r.post_index == r.target_index)
    return hits / len(records)


def template_rank(ct: ClassTemplates, gt: int, other: int, _row: np.ndarray | None = None) -> int:
    """Position of `other` when classes are ordered by falling cosine to
    template(gt). The ground-truth class is pinned at rank 0 regardless of
    ties; remaining ties go to the lowest class index."""
    C = ct.num_classes
    for name, idx in (("gt", gt), ("other", other)):
        if not 0 <= idx < C:
            raise ValidationError(f"{name} index {idx} out of range for C={C}")
    if other == gt:
        return 0
    sims = ct.cosine_row(gt) if _row is None else _row
    s = sims[other]
    rank = 1
    for j in range(C):
        if j == gt or j == other:
            continue
        if sims[j] > s or (sims[j] == s and j < other):
            rank += 1
    return rank


def dissimilarity_metric(
    log: Sequence[PredictionRecord],
    ct: ClassTemplates,
    drop_misclassified: bool = True,
) -> float:
    records = _filtered(log, drop_misclassified)
    C = ct.num_classes
    if C < 2:
        raise ValidationError("need at least 2 classes for rank normalization")
    rows: dict[int, np.ndarray] = {}
    total = 0
    for r in records:
        for name, idx in (("gt_index", r.gt_index), ("post_index", r.post_index)):
            if idx >= C:
                raise ValidationError(f"record {r.image_id!r}: {name} {idx} out of range for C={C}")
        if r.gt_index not in rows:
            rows[r.gt_index] = ct.cosine_row(r.gt_index)
        total += template_rank(ct, r.gt_index, r.post_index, _row=rows[r.gt_index])
    return total / (len(records) * (C - 1))


def static_dm(table: TargetTable, variant: str, ct: ClassTemplates) -> float:
    """Rank distance between ground truth and its table target, averaged
    over every class. No attack involved; this scores the table itself."""
    C = ct.num_classes
    if table.num_classes != C:
        raise ValidationError(
            f"table has {table.num_classes} classes but templates have {C}"
        )
    if C < 2:
        raise ValidationError("need at least 2 classes for rank normalization")
    total = 0
    for c in range(C):
        total += template_rank(ct, c, table.target_index(c, variant))
    return total / (C * (C - 1))


def validate_log(log: Sequence[PredictionRecord], num_classes: int) -> None:
    """Range-check every index; record-level invariants are enforced at
    construction time."""
    for r in log:
        for name in ("gt_index", "pre_index", "post_index", "target_index"):
            idx = getattr(r, name)
            if idx >= num_classes:
                raise ValidationError(
                    f"record {r.image_id!r}: {name} {idx} out of range for C={num_classes}"
                )


def report(
    log: Sequence[PredictionRecord],
    ct: ClassTemplates | None = None,
    drop_misclassified: bool = True,
) -> list[MetricsReport]:
    """One row per (attack, source, variant) subgroup, sorted by key.

    The model column comes from the templates; without templates it is
    empty and dm is omitted.
    """
    records = _filtered(log, drop_misclassified)
    groups: dict[tuple[str, str, str], list[PredictionRecord]] = {}
    for r in records:
        groups.setdefault((r.attack, r.source, r.variant), []).append(r)
    out = []
    model = ct.model_name if ct is not None else ""
    for key in sorted(groups):
        sub = groups[key]
        dm = dissimilarity_metric(sub, ct, drop_misclassified=False) if ct is not None else None
        out.append(
            MetricsReport(
                attack=key[0],
                source=key[1],
                variant=key[2],
                model=model,
                n=len(sub),
                fr=fooling_rate(sub, drop_misclassified=False),
                tsr=targeted_success_rate(sub, drop_misclassified=False),
                dm=dm,
            )
        )
    return out


def load_predictions(stream: str | Iterable[str]) -> list[PredictionRecord]:
    lines = stream.splitlines() if isinstance(stream, str) else stream
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"prediction line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise ValidationError(f"prediction line {lineno}: expected an object")
        missing = [
            k
            for k in (
                "image_id",
                "gt_index",
                "pre_index",
                "post_index",
                "target_index",
                "attack",
                "source",
                "variant",
            )
            if k not in obj
        ]
        if missing:
            raise ValidationError(f"prediction line {lineno}: missing key(s) {', '.join(missing)}")
        try:
            records.append(
                PredictionRecord(
                    image_id=str(obj["image_id"]),
                    gt_index=int(obj["gt_index"]),
                    pre_index=int(obj["pre_index"]),
                    post_index=int(obj["post_index"]),
                    target_index=int(obj["target_index"]),
                    attack=str(obj["attack"]),
                    source=str(obj["source"]),
                    variant=str(obj["variant"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"prediction line {lineno}: {exc}") from None
        except ValidationError as exc:
            raise ValidationError(f"prediction line {lineno}: {exc}") from None
    return records


def write_predictions(log: Sequence[PredictionRecord]) -> str:
    out = []
    for r in log:
        out.append(
            json.dumps(
                {
                    "image_id": r.image_id,
                    "gt_index": r.gt_index,
                    "pre_index": r.pre_index,
                    "post_index": r.post_index,
                    "target_index": r.target_index,
                    "attack": r.attack,
                    "source": r.source,
                    "variant": r.variant,
                },
                separators=(", ", ": "),
            )
        )
    return "\n".join(out) + ("\n" if out else "")


REPORT_COLUMNS = ("attack", "source", "variant", "model", "n", "fr", "tsr", "dm")


def render_report_csv(reports: Sequence[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        writer.writerow(
            [
                r.attack,
                r.source,
                r.variant,
                r.model,
                r.n,
                format(r.fr, ".12g"),
                format(r.tsr, ".12g"),
                "" if r.dm is None else format(r.dm, ".12g"),
            ]
        )
    return buf.getvalue()


def plot_data_rows(reports: Sequence[MetricsReport]) -> list[tuple[str, str, str, float]]:
    """Long-format (metric, variant, source, value) rows for plotting."""
    rows = []
    for r in reports:
        rows.append(("fr", r.variant, r.source, r.fr))
        rows.append(("tsr", r.variant, r.source, r.tsr))
        if r.dm is not None:
            rows.append(("dm", r.variant, r.source, r.dm))
    return rows


def render_plot_data_csv(rows: Sequence[tuple[str, str, str, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("metric", "variant", "source", "value"))
    for metric, variant, source, value in rows:
        writer.writerow((metric, variant, source, format(value, ".12g")))
    return buf.getvalue()
