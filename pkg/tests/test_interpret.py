from __future__ import annotations

import math

import numpy as np
import pytest

from sinr.embedding import SparseEmbedding
from sinr.errors import FormatError, ValidationError
from sinr.graph import NodeLabelMap
from sinr.interpret import (
    Annotation,
    IntrusionTask,
    annotation_agreement,
    fleiss_kappa,
    load_annotations,
    load_intrusion_key,
    sample_intrusion_tasks,
    save_intrusion_tasks,
    score_annotations,
    shared_dimensions,
    strongest_dimensions,
    top_words,
)


def names(n):
    return NodeLabelMap(tuple(f"w{i}" for i in range(n)))


def column_rank_oracle(dense, dim):
    """Nonzero entries of a column sorted by (-value, id)."""
    col = dense[:, dim]
    ids = [i for i in range(len(col)) if col[i] != 0]
    return sorted(ids, key=lambda i: (-col[i], i))


class TestTopWords:
    def test_one_hot_communities(self):
        dense = np.zeros((6, 2))
        dense[[0, 1, 2], 0] = [3.0, 2.0, 1.0]
        dense[[3, 4, 5], 1] = [1.0, 5.0, 2.0]
        e = SparseEmbedding.from_dense(dense)
        d = top_words(e, names(6), 1, k=3)
        assert d.dimension == 1
        assert d.entries == (("w4", 5.0), ("w5", 2.0), ("w3", 1.0))
        assert d.member_count == 3
        assert not d.truncated

    def test_short_dimension_flagged(self):
        dense = np.zeros((5, 2))
        dense[[0, 1], 0] = [1.0, 2.0]
        dense[:, 1] = 1.0
        e = SparseEmbedding.from_dense(dense)
        d = top_words(e, names(5), 0, k=4)
        assert d.truncated
        assert len(d.entries) == 2

    def test_ties_break_by_ascending_id(self):
        dense = np.zeros((4, 2))
        dense[[2, 0, 3], 0] = [1.0, 1.0, 2.0]
        e = SparseEmbedding.from_dense(dense)
        d = top_words(e, names(4), 0, k=3)
        assert d.entries == (("w3", 2.0), ("w0", 1.0), ("w2", 1.0))

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(2)
        dense = np.round(rng.random((30, 5)), 1) * (rng.random((30, 5)) < 0.4)
        e = SparseEmbedding.from_dense(dense)
        lm = names(30)
        for dim in range(5):
            want = column_rank_oracle(dense, dim)[:6]
            got = top_words(e, lm, dim, k=6)
            assert [lm.id_of(w) for w, _ in got.entries] == want

    def test_bad_dimension(self):
        e = SparseEmbedding.from_dense(np.eye(3))
        with pytest.raises(ValidationError):
            top_words(e, names(3), 3, k=1)


class TestStrongestDimensions:
    def test_one_hot_row(self):
        dense = np.zeros((4, 3))
        dense[0, 1] = 2.0
        dense[1:, :] = 1.0
        e = SparseEmbedding.from_dense(dense)
        profile = strongest_dimensions(e, names(4), "w0", k=3)
        assert [dim for dim, _, _ in profile.entries] == [1]
        assert profile.truncated

    def test_matches_argsort_oracle(self):
        rng = np.random.default_rng(5)
        dense = np.round(rng.random((10, 6)), 2) * (rng.random((10, 6)) < 0.6)
        dense[dense.sum(axis=1) == 0, 0] = 0.5
        e = SparseEmbedding.from_dense(dense)
        lm = names(10)
        for u in range(10):
            row = dense[u]
            want = sorted((j for j in range(6) if row[j] != 0), key=lambda j: (-row[j], j))[:2]
            got = strongest_dimensions(e, lm, f"w{u}", k=2)
            assert [dim for dim, _, _ in got.entries] == want
            for dim, value, desc in got.entries:
                assert value == row[dim]
                assert desc.dimension == dim

    def test_oov_rejected(self):
        e = SparseEmbedding.from_dense(np.eye(3))
        with pytest.raises(ValidationError, match="zzz"):
            strongest_dimensions(e, names(3), "zzz", k=1)


class TestSharedDimensions:
    def test_disjoint_words_empty(self):
        e = SparseEmbedding.from_dense(np.eye(3) * 2.0)
        sd = shared_dimensions(e, names(3), ["w0", "w1"])
        assert sd.dimensions == ()
        assert sd.values.shape == (2, 0)

    def test_identical_rows_full_support(self):
        dense = np.tile([1.0, 0.0, 3.0, 0.5], (3, 1))
        e = SparseEmbedding.from_dense(dense)
        sd = shared_dimensions(e, names(3), ["w0", "w2"])
        assert sd.dimensions == (0, 2, 3)
        assert np.all(sd.presence)

    def test_matches_support_intersection_oracle(self):
        rng = np.random.default_rng(7)
        dense = rng.random((8, 6)) * (rng.random((8, 6)) < 0.5)
        dense[dense.sum(axis=1) == 0, 0] = 1.0
        e = SparseEmbedding.from_dense(dense)
        lm = names(8)
        queried = ["w1", "w3", "w4", "w6"]
        sd = shared_dimensions(e, lm, queried)
        rows = [lm.id_of(w) for w in queried]
        want = [
            j for j in range(6) if sum(dense[u, j] != 0 for u in rows) >= 2
        ]
        assert list(sd.dimensions) == want
        for wi, u in enumerate(rows):
            for di, j in enumerate(sd.dimensions):
                assert sd.values[wi, di] == dense[u, j]

    def test_oov_lists_missing_words(self):
        e = SparseEmbedding.from_dense(np.eye(3))
        with pytest.raises(ValidationError, match="aaa.*zzz"):
            shared_dimensions(e, names(3), ["w0", "aaa", "zzz"])

    def test_grid_export(self, tmp_path):
        dense = np.array([[1.0, 0.0, 2.0], [3.0, 0.0, 4.0], [0.0, 1.0, 0.0]])
        e = SparseEmbedding.from_dense(dense)
        sd = shared_dimensions(e, names(3), ["w0", "w1"])
        p = tmp_path / "grid.tsv"
        sd.save_grid(p)
        lines = p.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("word\t")
        assert lines[1].split("\t") == ["w0", "1", "1"]
        q = tmp_path / "grid_values.tsv"
        sd.save_grid(q, presence=False)
        assert q.read_text(encoding="utf-8").splitlines()[2].split("\t")[1] == "3.0"


def intruder_clauses_hold(dense, dim, word_id):
    """Independent re-check of both percentile clauses."""
    n = dense.shape[0]
    low = np.sort(dense[:, dim])[math.floor(0.3 * (n - 1))]
    if dense[word_id, dim] > low:
        return False
    for other in range(dense.shape[1]):
        if other == dim:
            continue
        high = np.sort(dense[:, other])[math.ceil(0.9 * (n - 1))]
        v = dense[word_id, other]
        if v >= high and v > 0:
            return True
    return False


class TestSampleIntrusionTasks:
    def _toy(self):
        # w3 tops dimension 1 and is absent from dimension 0
        dense = np.array(
            [[3.0, 0.5], [2.0, 0.4], [1.0, 0.3], [0.0, 5.0]]
        )
        return SparseEmbedding.from_dense(dense), names(4)

    def test_toy_intruder(self):
        e, lm = self._toy()
        (task,) = sample_intrusion_tasks(e, lm, count=1, seed=3)
        assert task.dimension == 0
        assert task.top_words == ("w0", "w1", "w2")
        assert task.intruder == "w3"
        assert sorted(task.presentation) == ["w0", "w1", "w2", "w3"]

    def test_count_exceeding_dimensions(self):
        e, lm = self._toy()
        with pytest.raises(ValidationError, match="dimensions"):
            sample_intrusion_tasks(e, lm, count=3, seed=0)

    def test_no_qualifying_intruder_anywhere(self):
        dense = np.array(
            [
                [4.0, 0.1],
                [3.0, 0.1],
                [2.0, 0.1],
                [1.0, 0.0],
                [0.0, 0.0],
            ]
        )
        e = SparseEmbedding.from_dense(dense)
        with pytest.raises(ValidationError, match="qualifying"):
            sample_intrusion_tasks(e, names(5), count=1, seed=1)

    def test_sampled_tasks_pass_independent_validator(self):
        rng = np.random.default_rng(11)
        dense = np.round(rng.random((60, 8)), 3) * (rng.random((60, 8)) < 0.4)
        dense[dense.sum(axis=1) == 0, 0] = 0.9
        e = SparseEmbedding.from_dense(dense)
        lm = names(60)
        tasks = sample_intrusion_tasks(e, lm, count=6, seed=9, model_id="toy")
        assert len({t.dimension for t in tasks}) == 6
        for task in tasks:
            ranked = column_rank_oracle(dense, task.dimension)[:3]
            assert [lm.id_of(w) for w in task.top_words] == ranked
            assert intruder_clauses_hold(dense, task.dimension, lm.id_of(task.intruder))
            assert task.intruder not in task.top_words
            assert len(set(task.presentation)) == 4
            assert task.model_id == "toy" and task.seed == 9

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(13)
        dense = rng.random((40, 6)) * (rng.random((40, 6)) < 0.5)
        dense[dense.sum(axis=1) == 0, 2] = 0.4
        e = SparseEmbedding.from_dense(dense)
        a = sample_intrusion_tasks(e, names(40), count=4, seed=21)
        b = sample_intrusion_tasks(e, names(40), count=4, seed=21)
        assert a == b
        c = sample_intrusion_tasks(e, names(40), count=4, seed=22)
        assert a != c

    def test_task_invariants_enforced(self):
        with pytest.raises(ValidationError, match="intruder"):
            IntrusionTask(0, ("a", "b", "c"), "a", ("a", "b", "c", "a"), "m", 0)
        with pytest.raises(ValidationError, match="presentation"):
            IntrusionTask(0, ("a", "b", "c"), "d", ("a", "b", "c", "e"), "m", 0)


class TestTaskFiles:
    def _tasks(self):
        rng = np.random.default_rng(17)
        dense = np.round(rng.random((30, 5)), 2) * (rng.random((30, 5)) < 0.5)
        dense[dense.sum(axis=1) == 0, 1] = 0.7
        e = SparseEmbedding.from_dense(dense)
        return sample_intrusion_tasks(e, names(30), count=3, seed=5, model_id="nr")

    def test_annotator_file_carries_no_answers(self, tmp_path):
        tasks = self._tasks()
        tp, kp = tmp_path / "tasks.tsv", tmp_path / "key.tsv"
        save_intrusion_tasks(tasks, tp, kp)
        lines = tp.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 3
        for line, task in zip(lines, tasks):
            fields = line.split("\t")
            assert fields[1:] == list(task.presentation)
            # nothing in the row distinguishes the intruder
            assert len(fields) == 5

    def test_key_roundtrip(self, tmp_path):
        tasks = self._tasks()
        tp, kp = tmp_path / "tasks.tsv", tmp_path / "key.tsv"
        save_intrusion_tasks(tasks, tp, kp)
        key = load_intrusion_key(kp)
        assert len(key) == 3
        for (task_id, entry), task in zip(sorted(key.items()), tasks):
            assert entry.intruder == task.intruder
            assert entry.dimension == task.dimension
            assert entry.presentation == task.presentation

    def test_export_is_deterministic(self, tmp_path):
        tasks = self._tasks()
        paths = [(tmp_path / f"t{i}.tsv", tmp_path / f"k{i}.tsv") for i in (0, 1)]
        for tp, kp in paths:
            save_intrusion_tasks(tasks, tp, kp)
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()


KEY_TEXT = (
    "nr-0000\t2\tpear\tcar,bus,pear,train\tnr\t5\n"
    "nr-0001\t4\tred\tred,ant,bee,wasp\tnr\t5\n"
)


class TestScoring:
    def _key(self, tmp_path):
        kp = tmp_path / "key.tsv"
        kp.write_text(KEY_TEXT, encoding="utf-8")
        return load_intrusion_key(kp)

    def test_all_six_categories(self, tmp_path):
        key = self._key(tmp_path)
        annotations = (
            Annotation("nr-0000", "a1", "sure", ("pear",)),
            Annotation("nr-0000", "a2", "sure", ("bus",)),
            Annotation("nr-0000", "a3", "hesitate", ("pear", "car")),
            Annotation("nr-0001", "a1", "hesitate", ("ant", "bee")),
            Annotation("nr-0001", "a2", "consistent", ()),
            Annotation("nr-0001", "a3", "skip", ()),
        )
        counts = score_annotations(key, annotations)
        assert counts == {
            "intruder_ok": 1,
            "intruder_ko": 1,
            "hesitate_ok": 1,
            "hesitate_ko": 1,
            "consistent": 1,
            "skipped": 1,
            "total": 6,
        }

    def test_annotation_file_loader(self, tmp_path):
        p = tmp_path / "ann.tsv"
        p.write_text(
            "nr-0000\ta1\tsure\tpear\n"
            "nr-0000\ta2\thesitate\tcar,bus\n"
            "nr-0001\ta1\tconsistent\t-\n",
            encoding="utf-8",
        )
        anns = load_annotations(p)
        assert anns[0] == Annotation("nr-0000", "a1", "sure", ("pear",))
        assert anns[1].words == ("car", "bus")
        assert anns[2].words == ()
        bad = tmp_path / "bad.tsv"
        bad.write_text("nr-0000\ta1\tsure\tpear,car\n", encoding="utf-8")
        with pytest.raises(FormatError, match="exactly one word"):
            load_annotations(bad)

    def test_unknown_task_and_foreign_word_rejected(self, tmp_path):
        key = self._key(tmp_path)
        with pytest.raises(ValidationError, match="unknown task"):
            score_annotations(key, (Annotation("zz", "a", "skip", ()),))
        with pytest.raises(ValidationError, match="not part of task"):
            score_annotations(key, (Annotation("nr-0000", "a", "sure", ("red",)),))

    def test_agreement_report(self, tmp_path):
        key = self._key(tmp_path)
        annotations = (
            # task 0: all three agree on the same pick
            Annotation("nr-0000", "a1", "sure", ("pear",)),
            Annotation("nr-0000", "a2", "sure", ("pear",)),
            Annotation("nr-0000", "a3", "sure", ("pear",)),
            # task 1: a split decision, two alike
            Annotation("nr-0001", "a1", "skip", ()),
            Annotation("nr-0001", "a2", "skip", ()),
            Annotation("nr-0001", "a3", "consistent", ()),
        )
        report = annotation_agreement(key, annotations)
        assert report.items == 2
        assert report.at_least_two == 1.0
        assert report.all_agree == 0.5
        assert 0.0 < report.kappa <= 1.0


class TestFleissKappa:
    def test_published_worked_example(self):
        table = np.array(
            [
                [0, 0, 0, 0, 14],
                [0, 2, 6, 4, 2],
                [0, 0, 3, 5, 6],
                [0, 3, 9, 2, 0],
                [2, 2, 8, 1, 1],
                [7, 7, 0, 0, 0],
                [3, 2, 6, 3, 0],
                [2, 5, 3, 2, 2],
                [6, 5, 2, 1, 0],
                [0, 2, 2, 3, 7],
            ]
        )
        assert fleiss_kappa(table) == pytest.approx(0.2099, abs=5e-4)

    def test_perfect_agreement(self):
        table = np.array([[3, 0], [3, 0], [0, 3]])
        assert fleiss_kappa(table) == pytest.approx(1.0)

    def test_single_category_everywhere(self):
        assert fleiss_kappa(np.array([[4, 0], [4, 0]])) == 1.0

    def test_variable_rater_counts(self):
        # by-hand: item1 has 3 raters (2/1 split), item2 has 4 (3/1)
        table = np.array([[2, 1], [3, 1]])
        p1 = (4 + 1 - 3) / (3 * 2)
        p2 = (9 + 1 - 4) / (4 * 3)
        pbar = (p1 + p2) / 2
        pj = np.array([5, 2]) / 7
        pe = float((pj**2).sum())
        assert fleiss_kappa(table) == pytest.approx((pbar - pe) / (1 - pe))

    def test_single_rater_rows_dropped(self):
        table = np.array([[1, 0], [2, 2], [0, 1]])
        assert fleiss_kappa(table) == fleiss_kappa(np.array([[2, 2]]))

    def test_needs_multiply_rated_items(self):
        with pytest.raises(ValidationError):
            fleiss_kappa(np.array([[1, 0], [0, 1]]))
