"""Most-/least-similar target selection and table serialization.

`oracle_scan` re-derives each row with explicit comparisons so
`build_targets` is checked against an implementation that shares no code
with it, including on tie-heavy quantized matrices.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from semtarget.embeddings import SimilarityMatrix
from semtarget.errors import ValidationError
from semtarget.targets import TargetTable, build_targets, read_table, write_table


def oracle_scan(values: np.ndarray, gt: int) -> tuple[int, int]:
    """Lowest-index argmax/argmin over the gt row, gt excluded."""
    ms = ls = None
    for j in range(values.shape[0]):
        if j == gt:
            continue
        if ms is None or values[gt, j] > values[gt, ms]:
            ms = j
        if ls is None or values[gt, j] < values[gt, ls]:
            ls = j
    return ms, ls


def random_similarity(rng: np.random.Generator) -> SimilarityMatrix:
    C = int(rng.integers(2, 17))
    values = rng.uniform(-1.0, 1.0, (C, C))
    values = (values + values.T) / 2.0
    if rng.integers(0, 2):
        # Quantized similarities force plenty of exact ties.
        values = np.round(values, 1)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(source_name="random", values=values, kind="cosine")


def labels_for(C: int) -> list[str]:
    return [f"class {i}" for i in range(C)]


class TestSelection:
    def test_toy_tree_matrix_rows(self, toy_taxonomy):
        table = build_targets(toy_taxonomy.wup_matrix(), toy_taxonomy.class_labels())
        row = table.rows[0]
        assert (row.ms_index, row.ms_score) == (1, 2.0 / 3.0)
        assert (row.ls_index, row.ls_score) == (2, 1.0 / 3.0)

    def test_full_tie_picks_lowest_index(self):
        s = SimilarityMatrix(source_name="i", values=np.eye(3), kind="cosine")
        table = build_targets(s, labels_for(3))
        assert table.rows[0].ms_index == 1
        assert table.rows[0].ls_index == 1
        assert table.rows[1].ms_index == 0
        assert table.rows[2].ms_index == 0

    def test_two_classes_force_each_other(self):
        s = SimilarityMatrix(
            source_name="pair", values=np.array([[1.0, 0.3], [0.3, 1.0]]), kind="cosine"
        )
        table = build_targets(s, labels_for(2))
        for gt, other in ((0, 1), (1, 0)):
            assert table.rows[gt].ms_index == other
            assert table.rows[gt].ls_index == other

    def test_matches_exhaustive_scan_on_random_matrices(self):
        rng = np.random.default_rng(424242)
        for _ in range(300):
            s = random_similarity(rng)
            table = build_targets(s, labels_for(s.num_classes))
            for gt in range(s.num_classes):
                ms, ls = oracle_scan(s.values, gt)
                assert table.rows[gt].ms_index == ms
                assert table.rows[gt].ls_index == ls
                assert table.rows[gt].ms_score == s.values[gt, ms]
                assert table.rows[gt].ls_score == s.values[gt, ls]

    def test_scores_bound_the_row(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            s = random_similarity(rng)
            table = build_targets(s, labels_for(s.num_classes))
            for gt in range(s.num_classes):
                row = table.rows[gt]
                others = [s.values[gt, j] for j in range(s.num_classes) if j != gt]
                assert row.ms_score == max(others)
                assert row.ls_score == min(others)
                assert row.ms_score >= row.ls_score

    @given(st.integers(0, 2**32 - 1))
    def test_permutation_consistency_on_tie_free_matrices(self, seed):
        rng = np.random.default_rng(seed)
        C = int(rng.integers(2, 9))
        values = rng.normal(0.0, 1.0, (C, C))
        values = (values + values.T) / 2.0
        np.fill_diagonal(values, 1.0)
        s = SimilarityMatrix(source_name="s", values=values, kind="cosine")
        perm = rng.permutation(C)
        permuted = SimilarityMatrix(
            source_name="s", values=values[np.ix_(perm, perm)], kind="cosine"
        )
        base = build_targets(s, labels_for(C))
        moved = build_targets(permuted, labels_for(C))
        inverse = np.argsort(perm)
        for new_gt in range(C):
            old_gt = int(perm[new_gt])
            assert moved.rows[new_gt].ms_index == inverse[base.rows[old_gt].ms_index]
            assert moved.rows[new_gt].ls_index == inverse[base.rows[old_gt].ls_index]

    def test_single_class_rejected(self):
        s = SimilarityMatrix(source_name="x", values=np.eye(1), kind="cosine")
        with pytest.raises(ValidationError, match="2 classes"):
            build_targets(s, labels_for(1))

    def test_label_count_mismatch_rejected(self):
        s = SimilarityMatrix(source_name="x", values=np.eye(2), kind="cosine")
        with pytest.raises(ValidationError, match="label count"):
            build_targets(s, labels_for(3))


class TestSerialization:
    def roundtrip(self, table: TargetTable) -> TargetTable:
        return read_table(write_table(table))

    def test_roundtrip_preserves_everything(self):
        # Dyadic scores survive the 12-digit score formatting bit for bit,
        # so full row equality is the right assertion here.
        values = np.array(
            [
                [1.0, 0.5, 0.25],
                [0.5, 1.0, 0.125],
                [0.25, 0.125, 1.0],
            ]
        )
        s = SimilarityMatrix(source_name="toy", values=values, kind="cosine")
        table = build_targets(s, ["first label", "second label", "third label"])
        again = self.roundtrip(table)
        assert again.source_name == table.source_name
        assert again.kind == table.kind
        assert again.rows == table.rows

    def test_roundtrip_keeps_indices_exact_and_scores_to_twelve_digits(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            s = random_similarity(rng)
            table = build_targets(s, labels_for(s.num_classes))
            again = self.roundtrip(table)
            for row, orig in zip(again.rows, table.rows):
                assert (row.gt_index, row.ms_index, row.ls_index) == (
                    orig.gt_index,
                    orig.ms_index,
                    orig.ls_index,
                )
                assert (row.gt_label, row.ms_label, row.ls_label) == (
                    orig.gt_label,
                    orig.ms_label,
                    orig.ls_label,
                )
                assert row.ms_score == pytest.approx(orig.ms_score, rel=1e-11, abs=1e-11)
                assert row.ls_score == pytest.approx(orig.ls_score, rel=1e-11, abs=1e-11)

    def test_serialization_is_deterministic(self, toy_taxonomy):
        m = toy_taxonomy.wup_matrix()
        a = write_table(build_targets(m, toy_taxonomy.class_labels()))
        b = write_table(build_targets(m, toy_taxonomy.class_labels()))
        assert a == b

    def test_header_names_source_and_kind(self, toy_taxonomy):
        text = write_table(build_targets(toy_taxonomy.wup_matrix(), toy_taxonomy.class_labels()))
        first = text.splitlines()[0]
        assert first.startswith("# ")
        assert "kind=wup" in first

    def test_ms_equal_gt_rejected_on_read(self, toy_taxonomy):
        text = write_table(build_targets(toy_taxonomy.wup_matrix(), toy_taxonomy.class_labels()))
        lines = text.splitlines()
        parts = lines[2].split(",")
        parts[2] = parts[0]  # ms_index := gt_index
        lines[2] = ",".join(parts)
        with pytest.raises(ValidationError):
            read_table("\n".join(lines) + "\n")

    def test_missing_column_named_in_error(self, toy_taxonomy):
        text = write_table(build_targets(toy_taxonomy.wup_matrix(), toy_taxonomy.class_labels()))
        lines = text.splitlines()
        lines[1] = lines[1].replace(",ls_score", ",wrong_name")
        with pytest.raises(ValidationError, match="ls_score"):
            read_table("\n".join(lines) + "\n")

    def test_duplicate_gt_rejected_on_read(self, toy_taxonomy):
        text = write_table(build_targets(toy_taxonomy.wup_matrix(), toy_taxonomy.class_labels()))
        lines = text.splitlines()
        lines.append(lines[2])
        with pytest.raises(ValidationError):
            read_table("\n".join(lines) + "\n")

    def test_gap_in_classes_rejected_on_read(self, toy_taxonomy):
        text = write_table(build_targets(toy_taxonomy.wup_matrix(), toy_taxonomy.class_labels()))
        lines = text.splitlines()
        del lines[3]
        with pytest.raises(ValidationError):
            read_table("\n".join(lines) + "\n")


class TestTargetIndex:
    def test_variant_dispatch(self, toy_taxonomy):
        table = build_targets(toy_taxonomy.wup_matrix(), toy_taxonomy.class_labels())
        assert table.target_index(0, "MS") == table.rows[0].ms_index
        assert table.target_index(0, "LS") == table.rows[0].ls_index
        assert table.target_index(0, "ms") == table.rows[0].ms_index

    def test_unknown_variant_rejected(self, toy_taxonomy):
        table = build_targets(toy_taxonomy.wup_matrix(), toy_taxonomy.class_labels())
        with pytest.raises(ValidationError):
            table.target_index(0, "XX")

    def test_out_of_range_class_rejected(self, toy_taxonomy):
        table = build_targets(toy_taxonomy.wup_matrix(), toy_taxonomy.class_labels())
        with pytest.raises(ValidationError):
            table.target_index(5, "MS")
