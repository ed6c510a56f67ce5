from __future__ import annotations

import math

import numpy as np
import numpy.testing as npt
import pytest

from helpers import complete_graph, planted_partition_graph, random_connected_graph
from sinr import eval_graph as eg
from sinr.embedding import SparseEmbedding
from sinr.errors import FormatError, ValidationError
from sinr.eval_graph import (
    EmbedderSpec,
    cosine_affinity,
    embed_graph,
    hadamard_features,
    heuristic_features,
    load_node_classes,
    make_linkpred_split,
    run_classification,
    run_link_prediction,
    run_regression,
    run_spectral_clustering,
)
from sinr.graph import NodeLabelMap, build_graph
from sinr.report import EvalReport


class TestLinkPredSplit:
    def test_tree_rejected_with_achieved_fraction(self):
        g = build_graph(6, {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0, (3, 4): 1.0, (4, 5): 1.0})
        with pytest.raises(ValidationError, match="achieved 0"):
            make_linkpred_split(g, 0.2, seed=0)

    def test_k5_removes_two_and_stays_connected(self):
        from sinr.graph import component_labels

        split = make_linkpred_split(complete_graph(5), 0.2, seed=1)
        assert len(split.test_pos) == 2
        assert split.train_graph.m == 8
        assert component_labels(split.train_graph).max() == 0
        # K5 has no non-edges: negative sets are capped at zero
        assert len(split.train_neg) == 0 and len(split.test_neg) == 0

    def test_counts_connectivity_and_disjointness(self):
        from sinr.graph import component_labels

        rng = np.random.default_rng(3)
        g = random_connected_graph(rng, 40, extra=70, weighted=True)
        split = make_linkpred_split(g, 0.2, seed=9)
        target = math.floor(0.2 * g.m)
        assert len(split.test_pos) == target
        assert split.train_graph.m == g.m - target
        assert component_labels(split.train_graph).max() == 0
        assert len(split.test_neg) == target
        assert len(split.train_neg) == g.m - target

        def pairset(arr):
            return {(int(a), int(b)) for a, b in arr}

        edges = pairset(np.column_stack(g.edge_arrays()[:2]))
        test_pos, train_pos = pairset(split.test_pos), pairset(split.train_pos)
        negs = pairset(split.train_neg) | pairset(split.test_neg)
        assert test_pos <= edges and train_pos <= edges
        assert not (test_pos & train_pos)
        assert not (negs & edges)
        assert len(negs) == len(split.train_neg) + len(split.test_neg)
        # train edge weights preserved
        uw = {(int(u), int(v)): w for u, v, w in zip(*g.edge_arrays())}
        for (u, v), w in zip(
            np.column_stack(split.train_graph.edge_arrays()[:2]), split.train_graph.edge_arrays()[2]
        ):
            assert uw[(int(u), int(v))] == w

    def test_reproducible_from_seed(self):
        rng = np.random.default_rng(8)
        g = random_connected_graph(rng, 25, extra=40)
        a = make_linkpred_split(g, 0.25, seed=4)
        b = make_linkpred_split(g, 0.25, seed=4)
        npt.assert_array_equal(a.test_pos, b.test_pos)
        npt.assert_array_equal(a.train_neg, b.train_neg)
        npt.assert_array_equal(a.test_neg, b.test_neg)
        c = make_linkpred_split(g, 0.25, seed=5)
        assert not np.array_equal(a.test_pos, c.test_pos)

    def test_disconnected_graph_rejected(self):
        g = build_graph(4, {(0, 1): 1.0, (2, 3): 1.0})
        with pytest.raises(ValidationError, match="connected"):
            make_linkpred_split(g, 0.5, seed=0)


class TestFeatures:
    def test_hadamard_one_hot_and_disjoint(self):
        e = SparseEmbedding.from_dense(np.array([[0.0, 2.0], [0.0, 3.0], [4.0, 0.0]]))
        same = hadamard_features(e, (0, 1))
        assert same.nnz == 1 and same[0, 1] == 6.0
        assert hadamard_features(e, (0, 2)).nnz == 0

    def test_hadamard_matches_dense_oracle(self):
        rng = np.random.default_rng(14)
        dense = rng.random((8, 6)) * (rng.random((8, 6)) < 0.5)
        e = SparseEmbedding.from_dense(dense)
        for u in range(8):
            for v in range(8):
                got = hadamard_features(e, (u, v)).toarray().ravel()
                npt.assert_allclose(got, dense[u] * dense[v])

    def test_heuristics_on_triangle(self):
        g = build_graph(3, {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 1.0})
        cn, aa, pa, jac, ra = heuristic_features(g, (0, 1))
        assert cn == 1.0
        assert aa == pytest.approx(1.0 / math.log(2))
        assert pa == 4.0
        assert jac == pytest.approx(1.0 / 3.0)
        assert ra == pytest.approx(0.5)

    def test_heuristics_no_common_neighbours(self):
        g = build_graph(4, {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0})
        cn, aa, pa, jac, ra = heuristic_features(g, (0, 3))
        assert (cn, aa, ra, jac) == (0.0, 0.0, 0.0, 0.0)
        assert pa == 1.0

    def test_heuristics_star_leaves(self):
        g = build_graph(5, {(0, i): 1.0 for i in range(1, 5)})
        cn, aa, pa, jac, ra = heuristic_features(g, (1, 2))
        assert cn == 1.0 and pa == 1.0
        assert ra == pytest.approx(0.25)

    def test_heuristics_match_bruteforce_oracle(self):
        rng = np.random.default_rng(6)
        g = random_connected_graph(rng, 30, extra=60)
        neigh = [set(g.neighbors(u)[0].tolist()) for u in range(g.n)]
        for _ in range(50):
            u, v = rng.integers(0, g.n, size=2)
            u, v = int(u), int(v)
            if u == v:
                continue
            common = neigh[u] & neigh[v]
            want = np.array(
                [
                    len(common),
                    sum(1 / math.log(len(neigh[z])) for z in common if len(neigh[z]) > 1),
                    len(neigh[u]) * len(neigh[v]),
                    len(common) / len(neigh[u] | neigh[v]) if neigh[u] | neigh[v] else 0.0,
                    sum(1 / len(neigh[z]) for z in common),
                ]
            )
            npt.assert_allclose(heuristic_features(g, (u, v)), want)


def _indicator_embedding(labels: np.ndarray) -> SparseEmbedding:
    k = int(labels.max()) + 1
    dense = np.zeros((len(labels), k))
    dense[np.arange(len(labels)), labels] = 1.0
    return SparseEmbedding.from_dense(dense)


class TestLinkPrediction:
    def _graph(self, seed=0):
        rng = np.random.default_rng(seed)
        return random_connected_graph(rng, 40, extra=80)

    def test_perfect_features_reach_one(self, monkeypatch):
        def leaked(g_train, spec, pairs_list, seed):
            # train pos, train neg, test pos, test neg in this order
            flags = (1.0, 0.0, 1.0, 0.0)
            return [np.full((len(p), 1), f) for p, f in zip(pairs_list, flags)]

        monkeypatch.setattr(eg, "_linkpred_features", leaked)
        report = run_link_prediction(self._graph(), EmbedderSpec("nr"), runs=3, seed=0)
        assert report.mean == pytest.approx(1.0)

    def test_random_features_near_half(self, monkeypatch):
        feature_rng = np.random.default_rng(123)

        def noise(g_train, spec, pairs_list, seed):
            return [feature_rng.random((len(p), 4)) for p in pairs_list]

        monkeypatch.setattr(eg, "_linkpred_features", noise)
        report = run_link_prediction(self._graph(1), EmbedderSpec("nr"), runs=10, seed=1)
        assert abs(report.mean - 0.5) < 0.07

    def test_embeddings_beat_chance_on_planted_blocks(self):
        rng = np.random.default_rng(11)
        g = planted_partition_graph(rng, [15, 15], 0.7, 0.08)
        report = run_link_prediction(g, EmbedderSpec("nr", gamma=1.0), runs=3, seed=2)
        assert report.mean > 0.6
        assert report.run_count == 3
        assert report.config["embedder"] == "nr"

    def test_heuristic_route_runs(self):
        report = run_link_prediction(self._graph(2), EmbedderSpec("heuristics"), runs=2, seed=3)
        assert 0.0 <= report.mean <= 1.0

    def test_deterministic_given_seed(self):
        g = self._graph(3)
        a = run_link_prediction(g, EmbedderSpec("nr"), runs=2, seed=7)
        b = run_link_prediction(g, EmbedderSpec("nr"), runs=2, seed=7)
        assert a.values == b.values

    def test_parallel_jobs_match_serial(self):
        g = self._graph(4)
        serial = run_link_prediction(g, EmbedderSpec("nr"), runs=4, seed=5, jobs=1)
        parallel = run_link_prediction(g, EmbedderSpec("nr"), runs=4, seed=5, jobs=2)
        assert serial.values == parallel.values


class TestRegression:
    def test_exact_linear_target_gives_one(self):
        rng = np.random.default_rng(2)
        x = rng.random((50, 4))
        beta = np.array([2.0, -1.0, 0.5, 3.0])
        y = x @ beta + 0.7
        r2, ridge = eg._fit_linear_r2(x[:40], y[:40], x[40:], y[40:])
        assert r2 == pytest.approx(1.0)
        assert not ridge

    def test_constant_target_gives_zero(self):
        rng = np.random.default_rng(3)
        x = rng.random((30, 3))
        y = np.full(30, 5.0)
        r2, _ = eg._fit_linear_r2(x[:24], y[:24], x[24:], y[24:])
        assert r2 == 0.0

    def test_singular_design_uses_ridge(self):
        rng = np.random.default_rng(4)
        col = rng.random((30, 1))
        x = np.hstack([col, col])  # duplicated column -> rank deficient
        y = col.ravel() * 2.0
        r2, ridge = eg._fit_linear_r2(x[:24], y[:24], x[24:], y[24:])
        assert ridge
        assert r2 == pytest.approx(1.0, abs=1e-6)

    def test_complete_graph_degree_is_constant_and_ridge_recorded(self):
        g = complete_graph(10)
        report = run_regression(g, EmbedderSpec("nr"), "degree", runs=2, seed=0)
        # one community -> all-ones feature column, collinear with intercept
        assert report.values == (0.0, 0.0)
        assert report.details["ridge_fallback_runs"] == [0, 1]

    def test_degree_recovered_on_structured_graph(self):
        rng = np.random.default_rng(5)
        g = planted_partition_graph(rng, [12, 12, 12], 0.65, 0.08)
        report = run_regression(g, EmbedderSpec("nr"), "degree", runs=3, seed=1)
        assert report.task == "regression_degree"
        assert report.metric == "r2"
        assert all(v <= 1.0 for v in report.values)

    def test_unknown_target_rejected(self):
        with pytest.raises(ValidationError):
            run_regression(complete_graph(4), EmbedderSpec("nr"), "betweenness", runs=1)

    def test_pagerank_and_clustcoef_targets_run(self):
        rng = np.random.default_rng(6)
        g = random_connected_graph(rng, 20, extra=30)
        for target in ("pagerank", "clustcoef"):
            report = run_regression(g, EmbedderSpec("nr"), target, runs=2, seed=2)
            assert report.run_count == 2


class TestSpectral:
    def test_indicator_rows_give_perfect_nmi(self, monkeypatch):
        labels = np.repeat([0, 1, 2], 10)
        monkeypatch.setattr(eg, "embed_graph", lambda g, spec, seed: _indicator_embedding(labels))
        rng = np.random.default_rng(7)
        g = random_connected_graph(rng, 30, extra=30)
        report = run_spectral_clustering(g, EmbedderSpec("nr"), labels, runs=2, seed=0)
        assert report.mean == pytest.approx(1.0)

    def test_disconnected_affinity_gets_floor(self):
        e = _indicator_embedding(np.array([0, 0, 1, 1]))
        aff = cosine_affinity(e)
        assert np.all(aff > 0)  # floor applied
        assert aff[0, 1] == pytest.approx(1.0, abs=1e-9)

    def test_connected_affinity_untouched(self):
        e = SparseEmbedding.from_dense(np.array([[1.0, 0.5], [0.5, 1.0], [1.0, 1.0]]))
        aff = cosine_affinity(e)
        assert aff[0, 0] == pytest.approx(1.0)
        assert aff[0, 1] > 1e-6

    def test_random_embeddings_score_near_zero(self, monkeypatch):
        emb_rng = np.random.default_rng(55)
        labels = np.repeat([0, 1], 20)
        monkeypatch.setattr(
            eg, "embed_graph", lambda g, spec, seed: SparseEmbedding.from_dense(emb_rng.random((40, 6)))
        )
        rng = np.random.default_rng(9)
        g = random_connected_graph(rng, 40, extra=40)
        report = run_spectral_clustering(g, EmbedderSpec("nr"), labels, runs=5, seed=1)
        assert report.mean < 0.2

    def test_label_length_checked(self):
        with pytest.raises(ValidationError):
            run_spectral_clustering(complete_graph(4), EmbedderSpec("nr"), np.zeros(3), runs=1)


class TestClassification:
    def test_indicator_rows_reach_one(self, monkeypatch):
        labels = np.repeat([0, 1, 2], 12)
        monkeypatch.setattr(eg, "embed_graph", lambda g, spec, seed: _indicator_embedding(labels))
        rng = np.random.default_rng(10)
        g = random_connected_graph(rng, 36, extra=40)
        report = run_classification(g, EmbedderSpec("nr"), labels, runs=3, seed=0)
        assert report.mean == pytest.approx(1.0)

    def test_shuffled_labels_near_majority_rate(self, monkeypatch):
        rng = np.random.default_rng(20)
        labels = rng.permutation(np.repeat([0, 1], 25))  # majority rate 0.5
        emb_rng = np.random.default_rng(77)
        monkeypatch.setattr(
            eg, "embed_graph", lambda g, spec, seed: SparseEmbedding.from_dense(emb_rng.random((50, 5)))
        )
        g = random_connected_graph(rng, 50, extra=60)
        report = run_classification(g, EmbedderSpec("nr"), labels, runs=8, seed=3)
        assert abs(report.mean - 0.5) < 0.15

    def test_rare_class_split_resampled(self):
        rng = np.random.default_rng(30)
        g = random_connected_graph(rng, 15, extra=20)
        labels = np.zeros(15, dtype=int)
        labels[3] = 1  # a single node of class 1
        report = run_classification(g, EmbedderSpec("nr"), labels, runs=3, seed=4)
        assert report.run_count == 3


class TestEmbedGraph:
    def test_kinds_and_validation(self, two_block_graph):
        e = embed_graph(two_block_graph, EmbedderSpec("nr", gamma=1.0), seed=0)
        assert e.n_rows == 8
        e2 = embed_graph(two_block_graph, EmbedderSpec("mf", gamma=1.0), seed=0)
        assert e2.n_rows == 8
        with pytest.raises(ValidationError):
            embed_graph(two_block_graph, EmbedderSpec("heuristics"), seed=0)
        with pytest.raises(ValidationError):
            EmbedderSpec("word2vec")


class TestEvalReport:
    def test_mean_std_consistency(self):
        report = EvalReport("t", "acc", (0.5, 0.7, 0.6))
        assert report.mean == pytest.approx(0.6)
        assert report.std == pytest.approx(0.1)
        assert report.run_count == 3

    def test_single_run_std_zero(self):
        assert EvalReport("t", "acc", (0.4,)).std == 0.0

    def test_roundtrip_and_inconsistency_detected(self, tmp_path):
        report = EvalReport("t", "r2", (0.1, 0.2), config={"gamma": 1.0})
        p = tmp_path / "report.json"
        report.save(p)
        loaded = EvalReport.load(p)
        assert loaded.values == report.values
        assert loaded.config == {"gamma": 1.0}
        bad = report.to_dict()
        bad["mean"] = 0.9
        with pytest.raises(FormatError):
            EvalReport.from_dict(bad)

    def test_empty_values_rejected(self):
        with pytest.raises(ValidationError):
            EvalReport("t", "acc", ())


class TestLoadNodeClasses:
    def test_reads_and_ignores_unknown(self, tmp_path):
        labels = NodeLabelMap(("a", "b", "c"))
        p = tmp_path / "classes.tsv"
        p.write_text("a\tx\nb\ty\nc\tx\nzzz\tq\n", encoding="utf-8")
        y, names = load_node_classes(p, labels)
        assert y.tolist() == [0, 1, 0]
        assert names == ("x", "y")

    def test_missing_node_rejected(self, tmp_path):
        labels = NodeLabelMap(("a", "b"))
        p = tmp_path / "classes.tsv"
        p.write_text("a\tx\n", encoding="utf-8")
        with pytest.raises(FormatError, match="no class label"):
            load_node_classes(p, labels)
