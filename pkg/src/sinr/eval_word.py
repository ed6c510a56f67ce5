"""Word-level evaluation: similarity, categorization, and stability measures.

Intrinsic quality checks for word embeddings (rank agreement with human
similarity judgements, concept categorization purity) plus two stability
measures: average pairwise NMI of repeated community detections, and the
proportion of nearest neighbors that change between two models trained on
the same corpus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .community import LouvainConfig, louvain, nmi
from .embedding import SparseEmbedding, top_k_neighbors
from .errors import FormatError, ValidationError
from .graph import NodeLabelMap, WeightedGraph
from .rng import spawn_seed

__all__ = [
    "SimilarityDataset",
    "CategorizationDataset",
    "load_similarity_dataset",
    "load_categorization_dataset",
    "word_similarity",
    "concept_categorization",
    "community_stability",
    "varnn",
    "mean_varnn",
    "DEFAULT_VARNN_GRID",
]

#: Neighborhood sizes at which instability curves are sampled by default.
DEFAULT_VARNN_GRID = (5, 10, 15, 20, 25, 30, 35, 40, 45, 50)


@dataclass(frozen=True)
class SimilarityDataset:
    """Human-scored word pairs: the higher the score, the more similar."""

    name: str
    pairs: tuple[tuple[str, str, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "pairs", tuple((a, b, float(s)) for a, b, s in self.pairs)
        )
        seen = set()
        for a, b, s in self.pairs:
            if not math.isfinite(s):
                raise ValidationError(f"score for ({a!r}, {b!r}) is not finite")
            key = (a, b) if a <= b else (b, a)
            if key in seen:
                raise ValidationError(f"duplicate pair ({a!r}, {b!r})")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class CategorizationDataset:
    """Words tagged with a gold category, e.g. ``tiger -> animal``."""

    name: str
    items: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple((w, c) for w, c in self.items))
        words = [w for w, _ in self.items]
        if len(set(words)) != len(words):
            dup = next(w for w in words if words.count(w) > 1)
            raise ValidationError(f"duplicate word {dup!r}")
        if len(set(c for _, c in self.items)) < 2:
            raise ValidationError("dataset needs at least 2 categories")

    @property
    def categories(self) -> tuple[str, ...]:
        return tuple(sorted({c for _, c in self.items}))

    def __len__(self) -> int:
        return len(self.items)


def _split_columns(line: str, expected: int) -> list[str] | None:
    fields = line.split("\t")
    if len(fields) != expected:
        fields = line.split()
    return fields if len(fields) == expected else None


def load_similarity_dataset(
    path: str | Path,
    name: str | None = None,
    *,
    layout: str = "tsv",
    lowercase: bool = False,
) -> SimilarityDataset:
    """Read a similarity dataset.

    ``layout="tsv"`` covers ``word1<TAB>word2<TAB>score`` files and the
    whitespace-separated variants shipped by MEN and WordSim-353 (a header
    line is tolerated). ``layout="scws"`` reads the SCWS ratings table,
    keeping the two words and the average rating.
    """
    path = Path(path)
    if layout not in ("tsv", "scws"):
        raise ValidationError(f"unknown similarity layout {layout!r}")
    pairs = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if layout == "scws":
                fields = line.split("\t")
                if len(fields) < 8:
                    raise FormatError(
                        "expected the SCWS ratings layout", path=str(path), line=lineno
                    )
                w1, w2, score_text = fields[1], fields[3], fields[7]
            else:
                fields = _split_columns(line, 3)
                if fields is None:
                    raise FormatError(
                        "expected word1<TAB>word2<TAB>score", path=str(path), line=lineno
                    )
                w1, w2, score_text = fields
            try:
                score = float(score_text)
            except ValueError:
                if layout == "tsv" and lineno == 1:
                    continue  # header row
                raise FormatError(
                    f"bad score {score_text!r}", path=str(path), line=lineno
                ) from None
            if lowercase:
                w1, w2 = w1.lower(), w2.lower()
            pairs.append((w1, w2, score))
    return SimilarityDataset(name or path.stem, tuple(pairs))


def load_categorization_dataset(
    path: str | Path, name: str | None = None, *, lowercase: bool = False
) -> CategorizationDataset:
    """Read ``word<TAB>category`` rows (whitespace-separated also accepted),
    the layout the AP / BLESS / ESSLLI category files reduce to."""
    path = Path(path)
    items = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = _split_columns(line, 2)
            if fields is None:
                raise FormatError(
                    "expected word<TAB>category", path=str(path), line=lineno
                )
            word, category = fields
            if lowercase:
                word = word.lower()
            items.append((word, category))
    return CategorizationDataset(name or path.stem, tuple(items))


def _pair_cosine(e: SparseEmbedding, u: int, v: int, norms: np.ndarray) -> float:
    if norms[u] == 0.0 or norms[v] == 0.0:
        return 0.0
    dot = e.matrix[u].multiply(e.matrix[v]).sum()
    return float(dot / (norms[u] * norms[v]))


def word_similarity(
    e: SparseEmbedding, labels: NodeLabelMap, ds: SimilarityDataset
) -> tuple[float, float]:
    """Spearman correlation between human scores and embedding cosines.

    Pairs with an out-of-vocabulary word are dropped; returns the rank
    correlation over the retained pairs and the retained fraction.
    """
    from scipy.stats import spearmanr

    retained = [
        (labels.id_of(a), labels.id_of(b), s)
        for a, b, s in ds.pairs
        if a in labels and b in labels
    ]
    if len(retained) < 2:
        raise ValidationError(
            f"only {len(retained)} of {len(ds)} pairs are in-vocabulary; "
            "need at least 2"
        )
    norms = np.sqrt(np.asarray(e.matrix.multiply(e.matrix).sum(axis=1)).ravel())
    human = np.array([s for _, _, s in retained])
    cosines = np.array([_pair_cosine(e, u, v, norms) for u, v, _ in retained])
    if np.ptp(human) == 0.0 or np.ptp(cosines) == 0.0:
        rho = 0.0  # a constant series carries no rank information
    else:
        rho = float(spearmanr(human, cosines).statistic)
    return rho, len(retained) / len(ds)


def _purity(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Fraction of points whose cluster's dominant gold label matches theirs."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    _, ti = np.unique(y_true, return_inverse=True)
    _, pi = np.unique(y_pred, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return float(table.max(axis=1).sum() / len(y_true))


def concept_categorization(
    e: SparseEmbedding,
    labels: NodeLabelMap,
    ds: CategorizationDataset,
    runs: int = 10,
    seed: int = 0,
) -> tuple[float, float]:
    """Cluster the dataset words and score purity against the gold categories.

    Runs k-means (k = number of categories, 10 restarts per run) and
    average-linkage agglomerative clustering on cosine distances; each run
    keeps the better purity of the two, and runs are averaged. Returns
    ``(purity, coverage)`` with out-of-vocabulary words dropped.
    """
    from sklearn.cluster import AgglomerativeClustering, KMeans

    if runs < 1:
        raise ValidationError("runs must be at least 1")
    present = [(w, c) for w, c in ds.items if w in labels]
    if not present:
        raise ValidationError(f"no word of {ds.name!r} is in the vocabulary")
    coverage = len(present) / len(ds)
    cats = sorted({c for _, c in present})
    y_true = np.array([cats.index(c) for _, c in present])
    k = len(cats)
    if len(present) < k:
        raise ValidationError("fewer embedded words than categories")
    rows = np.array([labels.id_of(w) for w, _ in present])
    x = e.matrix[rows].toarray()
    norms = np.linalg.norm(x, axis=1)
    xn = np.divide(x, norms[:, None], out=np.zeros_like(x), where=norms[:, None] > 0)

    if k == 1:
        assignments = [np.zeros(len(present), dtype=int)]
        agg_purity = _purity(y_true, assignments[0])
    else:
        cos = np.clip(xn @ xn.T, -1.0, 1.0)
        dist = 1.0 - cos
        np.fill_diagonal(dist, 0.0)
        agg = AgglomerativeClustering(n_clusters=k, metric="precomputed", linkage="average")
        agg_purity = _purity(y_true, agg.fit_predict(dist))

    per_run = []
    for run in range(runs):
        km = KMeans(
            n_clusters=k,
            n_init=10,
            max_iter=300,
            random_state=spawn_seed(seed, 0x61, run),
        )
        per_run.append(max(_purity(y_true, km.fit_predict(xn)), agg_purity))
    return float(np.mean(per_run)), coverage


def community_stability(g: WeightedGraph, cfg: LouvainConfig, runs: int = 10) -> float:
    """Average pairwise NMI between community structures found with
    distinct seeds (seeds derived from ``cfg.seed``)."""
    if runs < 2:
        raise ValidationError("runs must be at least 2")
    parts = [
        louvain(g, replace(cfg, seed=spawn_seed(cfg.seed, 0x71, r))).partition
        for r in range(runs)
    ]
    return float(np.mean([nmi(a, b) for a, b in combinations(parts, 2)]))


def varnn(
    e_a: SparseEmbedding,
    labels_a: NodeLabelMap,
    e_b: SparseEmbedding,
    labels_b: NodeLabelMap,
    word: str,
    n_neighbors: int,
) -> float:
    """Proportion of the word's nearest neighbors that differ between two
    models: ``1 - |nn_A ∩ nn_B| / N`` with cosine neighborhoods of size N."""
    if n_neighbors < 1:
        raise ValidationError("n_neighbors must be at least 1")
    for e, labels, tag in ((e_a, labels_a, "first"), (e_b, labels_b, "second")):
        if word not in labels:
            raise ValidationError(f"word {word!r} missing from the {tag} model")
        if e.n_rows - 1 < n_neighbors:
            raise ValidationError(
                f"the {tag} model has fewer than {n_neighbors} neighbor candidates"
            )
    nn_a = {labels_a.label_of(i) for i, _ in top_k_neighbors(e_a, labels_a.id_of(word), n_neighbors)}
    nn_b = {labels_b.label_of(i) for i, _ in top_k_neighbors(e_b, labels_b.id_of(word), n_neighbors)}
    return 1.0 - len(nn_a & nn_b) / n_neighbors


def _neighbor_table(e: SparseEmbedding, n_neighbors: int, chunk: int = 512) -> np.ndarray:
    """Row ids of the ``n_neighbors`` nearest rows for every row, ordered by
    descending cosine with ties to the lower id (matches top_k_neighbors)."""
    norms = np.sqrt(np.asarray(e.matrix.multiply(e.matrix).sum(axis=1)).ravel())
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms == 0)[0])
        raise ValidationError(f"row {bad} is zero; cosine similarity is undefined")
    out = np.empty((e.n_rows, n_neighbors), dtype=np.int64)
    for start in range(0, e.n_rows, chunk):
        stop = min(start + chunk, e.n_rows)
        # raw dots divided by norms afterwards: bitwise-identical values to
        # top_k_neighbors, so exact ties land in the same order
        sims = (e.matrix[start:stop] @ e.matrix.T).toarray()
        sims /= norms[start:stop, None] * norms[None, :]
        rows = np.arange(stop - start)
        sims[rows, start + rows] = -np.inf  # never report the word itself
        # stable argsort keeps ascending ids among equal similarities
        order = np.argsort(-sims, axis=1, kind="stable")
        out[start:stop] = order[:, :n_neighbors]
    return out


def mean_varnn(
    models: Sequence[tuple[SparseEmbedding, NodeLabelMap]],
    grid: Iterable[int] = DEFAULT_VARNN_GRID,
    sample: Iterable[str] | None = None,
) -> tuple[tuple[int, float], ...]:
    """Neighborhood instability curve: mean varnn over all model pairs and
    words, at each neighborhood size in ``grid``.

    Words are the vocabulary shared by every model, optionally intersected
    with ``sample``.
    """
    grid = tuple(sorted(int(n) for n in grid))
    if not grid or grid[0] < 1:
        raise ValidationError("grid must hold at least one positive size")
    if len(models) < 2:
        raise ValidationError("need at least two models to compare")
    n_max = grid[-1]
    for e, _ in models:
        if e.n_rows - 1 < n_max:
            raise ValidationError(f"a model has fewer than {n_max} neighbor candidates")
    shared = set(models[0][1].labels)
    for _, labels in models[1:]:
        shared &= set(labels.labels)
    if sample is not None:
        shared &= set(sample)
    if not shared:
        raise ValidationError("models have no shared vocabulary to compare")
    words = sorted(shared)

    union = sorted(set().union(*(labels.labels for _, labels in models)))
    gid = {label: i for i, label in enumerate(union)}
    tables = []
    for e, labels in models:
        row_labels = np.array([gid[lab] for lab in labels.labels], dtype=np.int64)
        tables.append(row_labels[_neighbor_table(e, n_max)])
    word_rows = [
        np.array([labels.id_of(w) for w in words], dtype=np.int64)
        for _, labels in models
    ]

    sums = np.zeros(len(grid))
    rank = np.full(len(union), n_max, dtype=np.int64)
    positions = np.arange(n_max)
    for i, j in combinations(range(len(models)), 2):
        for wi in range(len(words)):
            a = tables[i][word_rows[i][wi]]
            b = tables[j][word_rows[j][wi]]
            rank[b] = positions
            pa = rank[a]
            for t, n in enumerate(grid):
                inter = np.count_nonzero(pa[:n] < n)
                sums[t] += 1.0 - inter / n
            rank[b] = n_max
    total = len(words) * (len(models) * (len(models) - 1) // 2)
    return tuple((n, float(sums[t] / total)) for t, n in enumerate(grid))
