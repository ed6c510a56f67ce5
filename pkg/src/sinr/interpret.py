"""Probing and annotation tooling for sparse embeddings.

Dimensions of a community-based embedding are communities, so they can be
described by the words that activate them most. This module ranks those
words, builds word-intrusion annotation tasks (top-3 words of a dimension
plus a carefully sampled intruder), inspects which dimensions carry a word
or a set of words, and scores collected annotation files, including a
Fleiss' kappa agreement summary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .embedding import SparseEmbedding
from .errors import FormatError, ValidationError
from .graph import NodeLabelMap
from .rng import spawn_rng

__all__ = [
    "DimensionDescriptor",
    "IntrusionTask",
    "WordProfile",
    "SharedDimensions",
    "top_words",
    "strongest_dimensions",
    "shared_dimensions",
    "sample_intrusion_tasks",
    "save_intrusion_tasks",
    "load_intrusion_key",
    "TaskKey",
    "Annotation",
    "load_annotations",
    "score_annotations",
    "annotation_agreement",
    "AgreementReport",
    "fleiss_kappa",
]


@dataclass(frozen=True)
class DimensionDescriptor:
    """A dimension summarized by its highest-valued words.

    ``entries`` is ranked by descending value with ties on ascending word
    id; ``member_count`` is the number of words with any weight on the
    dimension, and ``truncated`` marks lists cut short because fewer
    nonzero words exist than were requested.
    """

    dimension: int
    entries: tuple[tuple[str, float], ...]
    member_count: int
    truncated: bool

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple((w, float(v)) for w, v in self.entries)
        )


@dataclass(frozen=True)
class IntrusionTask:
    """One annotation unit: three related words plus an intruder."""

    dimension: int
    top_words: tuple[str, str, str]
    intruder: str
    presentation: tuple[str, str, str, str]
    model_id: str
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "top_words", tuple(self.top_words))
        object.__setattr__(self, "presentation", tuple(self.presentation))
        if self.intruder in self.top_words:
            raise ValidationError("the intruder must not be one of the top words")
        members = (*self.top_words, self.intruder)
        if len(set(members)) != 4:
            raise ValidationError("task words must be four distinct labels")
        if sorted(self.presentation) != sorted(members):
            raise ValidationError(
                "presentation must be a shuffle of the four task words"
            )


@dataclass(frozen=True)
class WordProfile:
    """A word's strongest dimensions, each with its descriptor."""

    word: str
    entries: tuple[tuple[int, float, DimensionDescriptor], ...]
    truncated: bool


def _column_entries(csc: sp.csc_matrix, dim: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = csc.indptr[dim], csc.indptr[dim + 1]
    return csc.indices[lo:hi], csc.data[lo:hi]


def _ranked_ids(ids: np.ndarray, vals: np.ndarray) -> np.ndarray:
    return np.asarray(ids)[np.lexsort((ids, -np.asarray(vals)))]


def top_words(
    e: SparseEmbedding, labels: NodeLabelMap, dim: int, k: int = 10
) -> DimensionDescriptor:
    """The ``k`` highest-valued words on a dimension (nonzero words only)."""
    if not 0 <= dim < e.n_cols:
        raise ValidationError(f"dimension {dim} out of range")
    if k < 1:
        raise ValidationError("k must be at least 1")
    if len(labels) != e.n_rows:
        raise ValidationError("label count does not match embedding rows")
    ids, vals = _column_entries(e.matrix.tocsc(), dim)
    order = np.lexsort((ids, -vals))[:k]
    entries = tuple(
        (labels.label_of(int(ids[i])), float(vals[i])) for i in order
    )
    return DimensionDescriptor(
        dimension=dim,
        entries=entries,
        member_count=len(ids),
        truncated=len(ids) < k,
    )


def strongest_dimensions(
    e: SparseEmbedding,
    labels: NodeLabelMap,
    word: str,
    k: int = 3,
    words_per_dim: int = 5,
) -> WordProfile:
    """The ``k`` highest coordinates of a word, with a descriptor per
    dimension; shorter (and flagged) when the row has fewer nonzeros."""
    if word not in labels:
        raise ValidationError(f"unknown word {word!r}")
    if k < 1:
        raise ValidationError("k must be at least 1")
    dims, vals = e.row(labels.id_of(word))
    order = np.lexsort((dims, -vals))[:k]
    entries = tuple(
        (
            int(dims[i]),
            float(vals[i]),
            top_words(e, labels, int(dims[i]), k=words_per_dim),
        )
        for i in order
    )
    return WordProfile(word=word, entries=entries, truncated=len(dims) < k)


@dataclass(frozen=True, eq=False)
class SharedDimensions:
    """Dimensions on which at least two of the queried words are active."""

    words: tuple[str, ...]
    dimensions: tuple[int, ...]
    values: np.ndarray  # len(words) x len(dimensions)
    descriptors: tuple[DimensionDescriptor, ...]

    @property
    def presence(self) -> np.ndarray:
        return self.values > 0

    def save_grid(self, path: str | Path, presence: bool = True) -> None:
        """Write a plot-ready grid: one row per word, one column per shared
        dimension labeled with its strongest words."""
        headers = [
            "d{}:{}".format(d.dimension, "+".join(w for w, _ in d.entries))
            for d in self.descriptors
        ]
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("\t".join(["word", *headers]) + "\n")
            for wi, word in enumerate(self.words):
                if presence:
                    cells = [str(int(v > 0)) for v in self.values[wi]]
                else:
                    cells = [f"{float(v)!r}" for v in self.values[wi]]
                fh.write("\t".join([word, *cells]) + "\n")


def shared_dimensions(
    e: SparseEmbedding,
    labels: NodeLabelMap,
    words: Sequence[str],
    words_per_dim: int = 3,
) -> SharedDimensions:
    """Common support of a word set: every dimension carrying ≥2 of them."""
    missing = [w for w in words if w not in labels]
    if missing:
        raise ValidationError(
            "words not in the vocabulary: " + ", ".join(missing)
        )
    if len(words) < 2:
        raise ValidationError("need at least two words to share dimensions")
    rows = [labels.id_of(w) for w in words]
    sub = e.matrix[rows].toarray()
    dims = np.flatnonzero((sub > 0).sum(axis=0) >= 2)
    return SharedDimensions(
        words=tuple(words),
        dimensions=tuple(int(j) for j in dims),
        values=sub[:, dims],
        descriptors=tuple(
            top_words(e, labels, int(j), k=words_per_dim) for j in dims
        ),
    )


def _column_order_stats(csc: sp.csc_matrix, n_rows: int, q: int) -> np.ndarray:
    """The q-th (0-based) ascending order statistic of every column,
    zeros included — cheap because only nonzeros are stored."""
    out = np.empty(csc.shape[1])
    for j in range(csc.shape[1]):
        vals = np.sort(csc.data[csc.indptr[j] : csc.indptr[j + 1]])
        zeros = n_rows - len(vals)
        out[j] = 0.0 if q < zeros else vals[q - zeros]
    return out


def sample_intrusion_tasks(
    e: SparseEmbedding,
    labels: NodeLabelMap,
    count: int,
    seed: int = 0,
    model_id: str = "",
) -> tuple[IntrusionTask, ...]:
    """Build ``count`` intrusion tasks on distinct, uniformly drawn dimensions.

    Each task shows the dimension's top-3 words plus an intruder drawn
    uniformly from the words that sit in the bottom 30% of this dimension's
    values (zeros included) while reaching the top 10% of some other
    dimension. Dimensions without a qualifying intruder are redrawn; more
    than 100 such failures abort.
    """
    if e.n_cols < 2:
        raise ValidationError("need at least two dimensions")
    if count < 1:
        raise ValidationError("count must be at least 1")
    if count > e.n_cols:
        raise ValidationError(
            f"count {count} exceeds the {e.n_cols} available dimensions"
        )
    if len(labels) != e.n_rows:
        raise ValidationError("label count does not match embedding rows")

    n = e.n_rows
    csc = e.matrix.tocsc()
    low = _column_order_stats(csc, n, math.floor(0.3 * (n - 1)))
    high = _column_order_stats(csc, n, math.ceil(0.9 * (n - 1)))

    col_of_entry = np.repeat(np.arange(e.n_cols), np.diff(csc.indptr))
    strong_mask = (csc.data >= high[col_of_entry]) & (csc.data > 0)
    strong = sp.csc_matrix(
        (
            np.ones(int(strong_mask.sum()), dtype=np.int64),
            (csc.indices[strong_mask], col_of_entry[strong_mask]),
        ),
        shape=csc.shape,
    )
    strong_counts = np.asarray(strong.sum(axis=1)).ravel()

    rng = spawn_rng(seed, 0x81)
    remaining = list(range(e.n_cols))
    tasks: list[IntrusionTask] = []
    failures = 0
    while len(tasks) < count:
        if failures >= 100:
            raise ValidationError(
                "no qualifying intruder for 100 sampled dimensions; giving up"
            )
        if not remaining:
            raise ValidationError(
                f"only {len(tasks)} of {count} dimensions have a qualifying "
                "intruder"
            )
        dim = remaining.pop(int(rng.integers(len(remaining))))
        ids, vals = _column_entries(csc, dim)
        if len(ids) < 3:
            failures += 1
            continue
        top3 = _ranked_ids(ids, vals)[:3]

        column = np.zeros(n)
        column[ids] = vals
        candidates = (column <= low[dim]) & (
            strong_counts - np.asarray(strong[:, dim].todense()).ravel() >= 1
        )
        candidates[top3] = False
        pool = np.flatnonzero(candidates)
        if len(pool) == 0:
            failures += 1
            continue
        intruder = int(pool[rng.integers(len(pool))])

        members = [labels.label_of(int(i)) for i in top3] + [labels.label_of(intruder)]
        order = rng.permutation(4)
        tasks.append(
            IntrusionTask(
                dimension=dim,
                top_words=tuple(members[:3]),
                intruder=members[3],
                presentation=tuple(members[i] for i in order),
                model_id=model_id,
                seed=seed,
            )
        )
    return tuple(tasks)


# --- task files and annotation scoring ------------------------------------


@dataclass(frozen=True)
class TaskKey:
    """Answer-side record of an exported task."""

    intruder: str
    dimension: int
    presentation: tuple[str, str, str, str]


def _task_id(task: IntrusionTask, index: int) -> str:
    prefix = task.model_id or "task"
    return f"{prefix}-{index:04d}"


def save_intrusion_tasks(
    tasks: Sequence[IntrusionTask], tasks_path: str | Path, key_path: str | Path
) -> None:
    """Write the annotator-facing task list and the separate answer key.

    The task file holds only the shuffled words; everything that would give
    the answer away (intruder, dimension, provenance) goes to the key file.
    """
    with Path(tasks_path).open("w", encoding="utf-8") as fh:
        for i, task in enumerate(tasks):
            fh.write("\t".join([_task_id(task, i), *task.presentation]) + "\n")
    with Path(key_path).open("w", encoding="utf-8") as fh:
        for i, task in enumerate(tasks):
            fh.write(
                "\t".join(
                    [
                        _task_id(task, i),
                        str(task.dimension),
                        task.intruder,
                        ",".join(task.presentation),
                        task.model_id,
                        str(task.seed),
                    ]
                )
                + "\n"
            )


def load_intrusion_key(path: str | Path) -> dict[str, TaskKey]:
    path = Path(path)
    key: dict[str, TaskKey] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 6:
                raise FormatError("expected 6 key fields", path=str(path), line=lineno)
            task_id, dim_text, intruder, words_text = fields[:4]
            if task_id in key:
                raise FormatError(
                    f"duplicate task id {task_id!r}", path=str(path), line=lineno
                )
            try:
                dim = int(dim_text)
            except ValueError:
                raise FormatError(
                    f"bad dimension {dim_text!r}", path=str(path), line=lineno
                ) from None
            presentation = tuple(words_text.split(","))
            if len(presentation) != 4 or len(set(presentation)) != 4:
                raise FormatError(
                    "presentation must list 4 distinct words",
                    path=str(path),
                    line=lineno,
                )
            if intruder not in presentation:
                raise FormatError(
                    "intruder missing from presentation", path=str(path), line=lineno
                )
            key[task_id] = TaskKey(intruder, dim, presentation)
    return key


#: Allowed annotator responses: a confident pick, a two-way hesitation,
#: "everything is consistent", or an explicit skip.
VERDICTS = ("sure", "hesitate", "consistent", "skip")


@dataclass(frozen=True)
class Annotation:
    task_id: str
    annotator: str
    verdict: str
    words: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if self.verdict not in VERDICTS:
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "sure" and len(self.words) != 1:
            raise ValidationError("a 'sure' response names exactly one word")
        if self.verdict == "hesitate" and (
            len(self.words) != 2 or self.words[0] == self.words[1]
        ):
            raise ValidationError("a 'hesitate' response names two distinct words")
        if self.verdict in ("consistent", "skip") and self.words:
            raise ValidationError(f"a {self.verdict!r} response names no words")


def load_annotations(path: str | Path) -> tuple[Annotation, ...]:
    """Read ``task_id<TAB>annotator<TAB>verdict<TAB>words`` rows, where
    ``words`` is comma-separated and ``-`` (or empty) means none."""
    path = Path(path)
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise FormatError(
                    "expected task_id<TAB>annotator<TAB>verdict<TAB>words",
                    path=str(path),
                    line=lineno,
                )
            task_id, annotator, verdict, words_text = fields
            words = () if words_text in ("", "-") else tuple(words_text.split(","))
            try:
                out.append(Annotation(task_id, annotator, verdict, words))
            except ValidationError as exc:
                raise FormatError(str(exc), path=str(path), line=lineno) from None
    return tuple(out)


def _check_annotation(key: Mapping[str, TaskKey], ann: Annotation) -> TaskKey:
    entry = key.get(ann.task_id)
    if entry is None:
        raise ValidationError(f"unknown task id {ann.task_id!r}")
    for w in ann.words:
        if w not in entry.presentation:
            raise ValidationError(
                f"word {w!r} is not part of task {ann.task_id!r}"
            )
    return entry


def score_annotations(
    key: Mapping[str, TaskKey], annotations: Iterable[Annotation]
) -> dict[str, int]:
    """Tally responses into the six outcome categories.

    ``intruder_ok``/``intruder_ko``: confident pick that is/isn't the
    intruder; ``hesitate_ok``/``hesitate_ko``: two-way hesitation that
    does/doesn't contain it; ``consistent``: all four words judged
    coherent; ``skipped``: no coherence perceived at all.
    """
    counts = {
        "intruder_ok": 0,
        "intruder_ko": 0,
        "hesitate_ok": 0,
        "hesitate_ko": 0,
        "consistent": 0,
        "skipped": 0,
        "total": 0,
    }
    for ann in annotations:
        entry = _check_annotation(key, ann)
        if ann.verdict == "sure":
            bucket = "intruder_ok" if ann.words[0] == entry.intruder else "intruder_ko"
        elif ann.verdict == "hesitate":
            bucket = "hesitate_ok" if entry.intruder in ann.words else "hesitate_ko"
        elif ann.verdict == "consistent":
            bucket = "consistent"
        else:
            bucket = "skipped"
        counts[bucket] += 1
        counts["total"] += 1
    return counts


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    at_least_two: float  # share of multi-rated tasks with a matching pair
    all_agree: float  # share of multi-rated tasks rated unanimously
    items: int


def annotation_agreement(
    key: Mapping[str, TaskKey], annotations: Iterable[Annotation]
) -> AgreementReport:
    """Inter-annotator agreement over the selections themselves.

    Responses are compared by presentation slot (which of the four shown
    words were chosen), so the categories are shared across tasks; only
    tasks with at least two raters contribute.
    """
    by_task: dict[str, list[str]] = {}
    for ann in annotations:
        entry = _check_annotation(key, ann)
        if ann.verdict == "sure":
            category = f"pick:{entry.presentation.index(ann.words[0])}"
        elif ann.verdict == "hesitate":
            slots = sorted(entry.presentation.index(w) for w in ann.words)
            category = "pair:{},{}".format(*slots)
        else:
            category = ann.verdict
        by_task.setdefault(ann.task_id, []).append(category)

    rated = {t: cats for t, cats in by_task.items() if len(cats) >= 2}
    if not rated:
        raise ValidationError("no task has two or more annotations")
    categories = sorted({c for cats in rated.values() for c in cats})
    table = np.zeros((len(rated), len(categories)), dtype=np.int64)
    for i, task_id in enumerate(sorted(rated)):
        for c in rated[task_id]:
            table[i, categories.index(c)] += 1
    peaks = table.max(axis=1)
    return AgreementReport(
        kappa=fleiss_kappa(table),
        at_least_two=float(np.mean(peaks >= 2)),
        all_agree=float(np.mean(peaks == table.sum(axis=1))),
        items=len(rated),
    )


def fleiss_kappa(table: np.ndarray) -> float:
    """Fleiss' kappa for an items-by-categories count table.

    Handles a variable number of raters per item; items with fewer than two
    ratings carry no agreement information and are dropped.
    """
    arr = np.asarray(table, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValidationError("expected an items x categories table")
    if np.any(arr < 0) or not np.all(arr == np.round(arr)):
        raise ValidationError("table entries must be non-negative counts")
    raters = arr.sum(axis=1)
    arr = arr[raters >= 2]
    raters = raters[raters >= 2]
    if len(arr) == 0:
        raise ValidationError("need at least one item with two or more ratings")
    p_item = ((arr**2).sum(axis=1) - raters) / (raters * (raters - 1))
    p_bar = float(p_item.mean())
    shares = arr.sum(axis=0) / arr.sum()
    p_expected = float((shares**2).sum())
    if p_expected == 1.0:
        return 1.0  # a single category everywhere is perfect agreement
    return float((p_bar - p_expected) / (1.0 - p_expected))
