"""Graph-level evaluation battery: link prediction, structural regressions,
spectral clustering of embedding similarities, and vertex classification.

Every task runs ``runs`` independent repetitions, each with its own derived
seed, and returns an :class:`~sinr.report.EvalReport`. Embeddings are
re-trained on the split's train graph for link prediction; node-level tasks
re-train per run on the full graph.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .community import LouvainConfig, Partition, louvain, nmi
from .embedding import MfConfig, SparseEmbedding, sinr_mf, sinr_nr
from .errors import FormatError, ValidationError
from .graph import NodeLabelMap, WeightedGraph, build_graph, component_labels
from .report import EvalReport
from .rng import spawn_rng, spawn_seed

EMBEDDER_KINDS = ("nr", "mf", "heuristics")


@dataclass(frozen=True)
class EmbedderSpec:
    """Which representation feeds a task: node recall ("nr"), factorization
    ("mf"), or the link-prediction heuristic features ("heuristics")."""

    kind: str = "nr"
    gamma: float = 1.0
    mf: MfConfig = MfConfig()

    def __post_init__(self):
        if self.kind not in EMBEDDER_KINDS:
            raise ValidationError(f"unknown embedder kind {self.kind!r}")
        if not self.gamma > 0:
            raise ValidationError("gamma must be positive")


def embed_graph(g: WeightedGraph, spec: EmbedderSpec, seed: int) -> SparseEmbedding:
    """Detect communities (seeded Louvain) and embed ``g`` per ``spec``."""
    if spec.kind == "heuristics":
        raise ValidationError("the heuristics feature set is not an embedding")
    p = louvain(g, LouvainConfig(gamma=spec.gamma, seed=spawn_seed(seed, 1))).partition
    if spec.kind == "nr":
        return sinr_nr(g, p)
    emb, _ = sinr_mf(g, p, replace(spec.mf, seed=spawn_seed(seed, 2)))
    return emb


# --------------------------------------------------------------------------
# link prediction


@dataclass(frozen=True, eq=False)
class LinkPredSplit:
    """Edge-removal split: the train graph keeps the graph connected; test
    positives are the removed edges; negatives come from the complement of the
    original edge set (sizes matched to the positive sets, capped by the
    number of available non-edges)."""

    train_graph: WeightedGraph
    test_pos: np.ndarray
    train_neg: np.ndarray
    test_neg: np.ndarray
    seed: int

    @property
    def train_pos(self) -> np.ndarray:
        us, vs, _ = self.train_graph.edge_arrays()
        return np.column_stack([us, vs])


def _bfs_reaches(adj: list[set[int]], src: int, dst: int) -> bool:
    if src == dst:
        return True
    seen = {src}
    stack = [src]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v == dst:
                return True
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def _sample_non_edges(
    g: WeightedGraph, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Up to ``count`` distinct non-edges of ``g``, uniform without replacement."""
    n = g.n
    total_pairs = n * (n - 1) // 2
    available = total_pairs - g.m
    count = min(count, available)
    if count == 0:
        return np.empty((0, 2), dtype=np.int64)
    edge_set = {(int(u), int(v)) for u, v in zip(*g.edge_arrays()[:2])}
    if available <= 4 * count or total_pairs <= 10_000:
        # dense regime: enumerate the complement and choose directly
        candidates = [
            (u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edge_set
        ]
        picked = rng.choice(len(candidates), size=count, replace=False)
        return np.array([candidates[i] for i in picked], dtype=np.int64)
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < count:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u == v:
            continue
        pair = (u, v) if u < v else (v, u)
        if pair in edge_set or pair in chosen:
            continue
        chosen.add(pair)
    return np.array(sorted(chosen), dtype=np.int64)


def make_linkpred_split(g: WeightedGraph, test_fraction: float, seed: int) -> LinkPredSplit:
    """Remove ``⌊test_fraction·m⌋`` edges without increasing the component
    count (rejection sampling over a seed-shuffled edge order), then sample
    balanced negatives from the complement of the original edge set.

    Raises if the graph is disconnected, or if the target fraction cannot be
    reached without disconnecting (reporting the achieved fraction).
    """
    if not 0 < test_fraction < 1:
        raise ValidationError("test_fraction must lie strictly between 0 and 1")
    if component_labels(g).max() != 0:
        raise ValidationError("link-prediction splits require a connected graph")
    us, vs, ws = g.edge_arrays()
    m = g.m
    target = math.floor(test_fraction * m)
    if target < 1:
        raise ValidationError(f"test_fraction {test_fraction} yields zero test edges on {m} edges")
    rng = spawn_rng(seed, 0x51)
    adj: list[set[int]] = [set() for _ in range(g.n)]
    for u, v in zip(us, vs):
        adj[u].add(int(v))
        adj[v].add(int(u))
    removed: list[int] = []
    for idx in rng.permutation(m):
        if len(removed) == target:
            break
        u, v = int(us[idx]), int(vs[idx])
        adj[u].discard(v)
        adj[v].discard(u)
        if _bfs_reaches(adj, u, v):
            removed.append(int(idx))
        else:
            adj[u].add(v)
            adj[v].add(u)
    if len(removed) < target:
        raise ValidationError(
            f"cannot remove {target} of {m} edges without disconnecting; "
            f"achieved {len(removed)} ({len(removed) / m:.3f} of edges)"
        )
    removed_mask = np.zeros(m, dtype=bool)
    removed_mask[removed] = True
    train_edges = {
        (int(u), int(v)): float(w)
        for u, v, w in zip(us[~removed_mask], vs[~removed_mask], ws[~removed_mask])
    }
    train_graph = build_graph(g.n, train_edges)
    test_pos = np.column_stack([us[removed_mask], vs[removed_mask]]).astype(np.int64)
    negatives = _sample_non_edges(g, (m - target) + target, rng)
    rng.shuffle(negatives, axis=0)
    n_test_neg = min(target, len(negatives))
    test_neg = negatives[:n_test_neg]
    train_neg = negatives[n_test_neg:]
    return LinkPredSplit(
        train_graph=train_graph,
        test_pos=test_pos,
        train_neg=np.asarray(train_neg, dtype=np.int64).reshape(-1, 2),
        test_neg=np.asarray(test_neg, dtype=np.int64).reshape(-1, 2),
        seed=seed,
    )


def hadamard_features(e: SparseEmbedding, pair: Sequence[int]) -> sp.csr_matrix:
    """Elementwise product of the two rows (sparse 1×k)."""
    u, v = int(pair[0]), int(pair[1])
    return e.matrix[u].multiply(e.matrix[v]).tocsr()


def _hadamard_matrix(e: SparseEmbedding, pairs: np.ndarray) -> np.ndarray:
    if len(pairs) == 0:
        return np.empty((0, e.n_cols))
    return np.asarray(e.matrix[pairs[:, 0]].multiply(e.matrix[pairs[:, 1]]).todense())


def heuristic_features(g: WeightedGraph, pair: Sequence[int]) -> np.ndarray:
    """Five classic link-prediction scores for a node pair:
    common neighbours, Adamic-Adar, preferential attachment, Jaccard,
    resource allocation."""
    u, v = int(pair[0]), int(pair[1])
    nu, _ = g.neighbors(u)
    nv, _ = g.neighbors(v)
    common = np.intersect1d(nu, nv, assume_unique=True)
    cn = float(len(common))
    degs = np.diff(g.indptr)
    aa = 0.0
    ra = 0.0
    for z in common:
        dz = int(degs[z])
        if dz > 1:
            aa += 1.0 / math.log(dz)
        ra += 1.0 / dz
    pa = float(len(nu) * len(nv))
    union = len(np.union1d(nu, nv))
    jaccard = cn / union if union else 0.0
    return np.array([cn, aa, pa, jaccard, ra])


def _heuristic_matrix(g: WeightedGraph, pairs: np.ndarray) -> np.ndarray:
    if len(pairs) == 0:
        return np.empty((0, 5))
    return np.vstack([heuristic_features(g, p) for p in pairs])


def make_classifier(kind: str, seed: int):
    """The task classifier: gradient-boosted trees (depth 6, 100 rounds,
    learning rate 0.3) by default, logistic regression as the fallback."""
    if kind == "gbdt":
        from sklearn.ensemble import HistGradientBoostingClassifier

        return HistGradientBoostingClassifier(
            max_depth=6,
            max_iter=100,
            learning_rate=0.3,
            min_samples_leaf=1,
            random_state=seed,
        )
    if kind == "logreg":
        from sklearn.linear_model import LogisticRegression

        return LogisticRegression(max_iter=1000, random_state=seed)
    raise ValidationError(f"unknown classifier kind {kind!r}")


def _linkpred_features(
    g_train: WeightedGraph, spec: EmbedderSpec, pairs_list: Iterable[np.ndarray], seed: int
) -> list[np.ndarray]:
    if spec.kind == "heuristics":
        return [_heuristic_matrix(g_train, pairs) for pairs in pairs_list]
    e = embed_graph(g_train, spec, seed)
    return [_hadamard_matrix(e, pairs) for pairs in pairs_list]


def _linkpred_one_run(run: int, g: WeightedGraph, spec: EmbedderSpec, test_fraction: float,
                      seed: int, classifier: str) -> float:
    split = make_linkpred_split(g, test_fraction, spawn_seed(seed, 0x11, run))
    train_pos = split.train_pos
    x_tr_pos, x_tr_neg, x_te_pos, x_te_neg = _linkpred_features(
        split.train_graph, spec,
        (train_pos, split.train_neg, split.test_pos, split.test_neg),
        spawn_seed(seed, 0x12, run),
    )
    x_tr = np.vstack([x_tr_pos, x_tr_neg])
    y_tr = np.concatenate([np.ones(len(x_tr_pos)), np.zeros(len(x_tr_neg))])
    x_te = np.vstack([x_te_pos, x_te_neg])
    y_te = np.concatenate([np.ones(len(x_te_pos)), np.zeros(len(x_te_neg))])
    clf = make_classifier(classifier, spawn_seed(seed, 0x13, run))
    clf.fit(x_tr, y_tr)
    return float(np.mean(clf.predict(x_te) == y_te))


def _parallel_runs(fn: Callable[[int], float], runs: int, jobs: int) -> list[float]:
    if jobs <= 1:
        return [fn(r) for r in range(runs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(runs)))


def run_link_prediction(
    g: WeightedGraph,
    spec: EmbedderSpec,
    runs: int,
    *,
    test_fraction: float = 0.2,
    seed: int = 0,
    classifier: str = "gbdt",
    jobs: int = 1,
) -> EvalReport:
    """Balanced link-prediction accuracy over ``runs`` independent splits."""
    if runs < 1:
        raise ValidationError("runs must be at least 1")
    fn = partial(_linkpred_one_run, g=g, spec=spec, test_fraction=test_fraction,
                 seed=seed, classifier=classifier)
    values = _parallel_runs(fn, runs, jobs)
    return EvalReport(
        task="link_prediction",
        metric="accuracy",
        values=tuple(values),
        config={
            "embedder": spec.kind,
            "gamma": spec.gamma,
            "runs": runs,
            "seed": seed,
            "test_fraction": test_fraction,
            "classifier": classifier,
        },
    )


# --------------------------------------------------------------------------
# node-level tasks

REGRESSION_TARGETS = ("degree", "clustcoef", "pagerank")


def _regression_target(g: WeightedGraph, target: str) -> np.ndarray:
    from .graph import clustering_coefficients, pagerank

    if target == "degree":
        return g.degrees().astype(np.float64)
    if target == "clustcoef":
        return clustering_coefficients(g)
    if target == "pagerank":
        return pagerank(g)
    raise ValidationError(f"unknown regression target {target!r}")


def _node_split(n: int, rng: np.random.Generator, train_share: float = 0.8):
    order = rng.permutation(n)
    cut = int(round(train_share * n))
    return order[:cut], order[cut:]


def _r2_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0  # zero-variance target carries no explainable signal
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot


def _fit_linear_r2(
    x_tr: np.ndarray, y_tr: np.ndarray, x_te: np.ndarray, y_te: np.ndarray
) -> tuple[float, bool]:
    """OLS with intercept; on a singular design, ridge with penalty 1e-8.

    Returns (held-out R², whether the ridge fallback was used).
    """
    design = np.column_stack([np.ones(len(x_tr)), x_tr])
    used_ridge = np.linalg.matrix_rank(design) < design.shape[1]
    if used_ridge:
        from sklearn.linear_model import Ridge

        model = Ridge(alpha=1e-8)
    else:
        from sklearn.linear_model import LinearRegression

        model = LinearRegression()
    model.fit(x_tr, y_tr)
    return _r2_score(y_te, model.predict(x_te)), used_ridge


def run_regression(
    g: WeightedGraph,
    spec: EmbedderSpec,
    target: str,
    runs: int,
    *,
    seed: int = 0,
    jobs: int = 1,
) -> EvalReport:
    """R² of an OLS regression from embedding rows to a structural property,
    over ``runs`` 80/20 node splits (embedding re-trained per run)."""
    if runs < 1:
        raise ValidationError("runs must be at least 1")
    y = _regression_target(g, target)
    fn = partial(_regression_one_run, g=g, spec=spec, y=y, seed=seed)
    results = _parallel_runs(fn, runs, jobs)
    values = [r2 for r2, _ in results]
    fallback_runs = [r for r, (_, ridge) in enumerate(results) if ridge]
    details = {"ridge_fallback_runs": fallback_runs} if fallback_runs else {}
    return EvalReport(
        task=f"regression_{target}",
        metric="r2",
        values=tuple(values),
        config={"embedder": spec.kind, "gamma": spec.gamma, "runs": runs,
                "seed": seed, "target": target},
        details=details,
    )


def _regression_one_run(run: int, g: WeightedGraph, spec: EmbedderSpec,
                        y: np.ndarray, seed: int) -> tuple[float, bool]:
    e = embed_graph(g, spec, spawn_seed(seed, 0x21, run))
    x = e.to_dense()
    tr, te = _node_split(g.n, spawn_rng(seed, 0x22, run))
    return _fit_linear_r2(x[tr], y[tr], x[te], y[te])


def run_spectral_clustering(
    g: WeightedGraph,
    spec: EmbedderSpec,
    labels: np.ndarray,
    runs: int,
    *,
    seed: int = 0,
    jobs: int = 1,
) -> EvalReport:
    """NMI between ground-truth classes and normalized-cut spectral clusters
    of the cosine-affinity matrix of embedding rows."""
    labels = np.asarray(labels)
    if len(labels) != g.n:
        raise ValidationError("one ground-truth label per node is required")
    if runs < 1:
        raise ValidationError("runs must be at least 1")
    fn = partial(_spectral_one_run, g=g, spec=spec, labels=labels, seed=seed)
    values = _parallel_runs(fn, runs, jobs)
    return EvalReport(
        task="spectral_clustering",
        metric="nmi",
        values=tuple(values),
        config={"embedder": spec.kind, "gamma": spec.gamma, "runs": runs,
                "seed": seed, "clusters": int(len(np.unique(labels)))},
    )


def cosine_affinity(e: SparseEmbedding) -> np.ndarray:
    """Dense pairwise cosine similarities of embedding rows.

    If the positive-affinity graph is disconnected, a uniform floor of 1e-12
    is added so spectral methods see a single component.
    """
    dense = e.to_dense()
    norms = np.linalg.norm(dense, axis=1)
    if np.any(norms == 0):
        raise ValidationError("cosine affinity is undefined for zero rows")
    aff = (dense / norms[:, None]) @ (dense / norms[:, None]).T
    np.clip(aff, 0.0, 1.0, out=aff)
    from scipy.sparse.csgraph import connected_components

    n_comp, _ = connected_components(sp.csr_matrix(aff > 0), directed=False)
    if n_comp > 1:
        aff = aff + 1e-12
    return aff


def _spectral_one_run(run: int, g: WeightedGraph, spec: EmbedderSpec,
                      labels: np.ndarray, seed: int) -> float:
    from sklearn.cluster import SpectralClustering

    e = embed_graph(g, spec, spawn_seed(seed, 0x31, run))
    aff = cosine_affinity(e)
    model = SpectralClustering(
        n_clusters=int(len(np.unique(labels))),
        affinity="precomputed",
        assign_labels="kmeans",
        random_state=spawn_seed(seed, 0x32, run),
    )
    pred = model.fit_predict(aff)
    return nmi(labels, pred)


def run_classification(
    g: WeightedGraph,
    spec: EmbedderSpec,
    labels: np.ndarray,
    runs: int,
    *,
    seed: int = 0,
    classifier: str = "gbdt",
    jobs: int = 1,
) -> EvalReport:
    """Multiclass accuracy of the task classifier on embedding rows over
    80/20 node splits; splits missing a class in train are resampled."""
    labels = np.asarray(labels)
    if len(labels) != g.n:
        raise ValidationError("one ground-truth label per node is required")
    if runs < 1:
        raise ValidationError("runs must be at least 1")
    fn = partial(_classification_one_run, g=g, spec=spec, labels=labels,
                 seed=seed, classifier=classifier)
    values = _parallel_runs(fn, runs, jobs)
    return EvalReport(
        task="classification",
        metric="accuracy",
        values=tuple(values),
        config={"embedder": spec.kind, "gamma": spec.gamma, "runs": runs,
                "seed": seed, "classifier": classifier},
    )


def _classification_one_run(run: int, g: WeightedGraph, spec: EmbedderSpec,
                            labels: np.ndarray, seed: int, classifier: str) -> float:
    e = embed_graph(g, spec, spawn_seed(seed, 0x41, run))
    x = e.to_dense()
    classes = np.unique(labels)
    for attempt in range(100):
        rng = spawn_rng(seed, 0x42, run, attempt)
        tr, te = _node_split(g.n, rng)
        if len(te) and np.array_equal(np.unique(labels[tr]), classes):
            break
    else:
        raise ValidationError("could not draw a split containing every class in train")
    clf = make_classifier(classifier, spawn_seed(seed, 0x43, run))
    clf.fit(x[tr], labels[tr])
    return float(np.mean(clf.predict(x[te]) == labels[te]))


def load_node_classes(
    path: str | Path, labels: NodeLabelMap
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Read ``node_label<TAB>class`` rows; returns class ids per node (ids in
    first-seen order) plus the class names. Rows for unknown nodes are
    ignored (the graph may be an LCC of a larger dataset); every graph node
    must be covered."""
    path = Path(path)
    class_ids: dict[str, int] = {}
    out = np.full(len(labels), -1, dtype=np.int64)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise FormatError("expected node_label<TAB>class", path=str(path), line=lineno)
            node, cls = fields
            if node not in labels:
                continue
            out[labels.id_of(node)] = class_ids.setdefault(cls, len(class_ids))
    if np.any(out < 0):
        missing = labels.label_of(int(np.flatnonzero(out < 0)[0]))
        raise FormatError(f"node {missing!r} has no class label", path=str(path))
    names = tuple(sorted(class_ids, key=class_ids.get))
    return out, names
