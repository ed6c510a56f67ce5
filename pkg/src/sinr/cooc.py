"""Word co-occurrence networks from tokenized corpora.

A corpus (one sentence per line, whitespace tokens) is reduced to a retained
vocabulary (length and frequency filters, with an exception list exempting
tokens from the length filter), co-occurrence counts are accumulated with a
forward context window that never crosses sentence boundaries, and edges whose
pointwise mutual information is negative are dropped before extracting the
largest connected component.

PMI uses p(w_u, w_v) = cooc(u,v) / Σ_{i,j} cooc(i,j) (ordered double sum) and
p(w_u) = occ(u) / Σ occ. The keep test log(p_uv / (p_u·p_v)) ≥ 0 is evaluated
in exact integer arithmetic — cooc_uv·S_o² ≥ occ_u·occ_v·S_c — so boundary
pairs (PMI exactly 0, which are kept) never fall to float rounding.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import FormatError, ValidationError
from .graph import NodeLabelMap, WeightedGraph, build_graph, largest_connected_component


@dataclass(frozen=True)
class CorpusConfig:
    window_size: int = 5
    min_count: int = 20
    min_word_length: int = 3
    lowercase: bool = True

    def __post_init__(self):
        if self.window_size < 1:
            raise ValidationError("window_size must be at least 1")
        if self.min_count < 1 or self.min_word_length < 1:
            raise ValidationError("min_count and min_word_length must be positive")


@dataclass(eq=False)
class Vocabulary:
    """Retained tokens with ids by descending frequency, ties lexicographic."""

    tokens: tuple[str, ...]
    occ: np.ndarray
    exceptions: frozenset[str] = frozenset()

    def __post_init__(self):
        self.occ = np.asarray(self.occ, dtype=np.int64)
        if len(self.tokens) != len(self.occ):
            raise ValidationError("token / count length mismatch")
        if len(self.occ) and self.occ.min() <= 0:
            raise ValidationError("occurrence counts must be positive")

    @cached_property
    def _index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id_of(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise ValidationError(f"token {token!r} not in vocabulary") from None

    def token_of(self, word_id: int) -> str:
        if not 0 <= word_id < len(self.tokens):
            raise ValidationError(f"word id {word_id} out of range")
        return self.tokens[word_id]

    @property
    def total_occurrences(self) -> int:
        return int(self.occ.sum())


@dataclass(eq=False)
class CoocAccumulator:
    """Symmetric co-occurrence counts keyed by (low id, high id); no diagonal."""

    counts: dict[tuple[int, int], int] = field(default_factory=dict)
    window_size: int = 5

    def count(self, u: int, v: int) -> int:
        if u == v:
            return 0
        key = (u, v) if u < v else (v, u)
        return self.counts.get(key, 0)

    @property
    def pair_mass(self) -> int:
        """Total co-occurrence mass over ordered pairs (the PMI denominator)."""
        return 2 * sum(self.counts.values())

    def merged(self, other: "CoocAccumulator") -> "CoocAccumulator":
        """Combine counts from a shard; window sizes must agree."""
        if self.window_size != other.window_size:
            raise ValidationError("cannot merge accumulators with different window sizes")
        out = dict(self.counts)
        for key, c in other.counts.items():
            out[key] = out.get(key, 0) + c
        return CoocAccumulator(out, self.window_size)


def read_corpus(path: str | Path) -> Iterator[list[str]]:
    """Yield one token list per non-empty line of a UTF-8 corpus file."""
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            tokens = line.split()
            if tokens:
                yield tokens


def read_exception_list(path: str | Path) -> frozenset[str]:
    """One token per line; blank lines ignored."""
    out = set()
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            token = line.strip()
            if token:
                out.add(token)
    return frozenset(out)


def _normalize(token: str, cfg: CorpusConfig) -> str:
    return token.lower() if cfg.lowercase else token


def build_vocab(
    corpus: Iterable[Sequence[str]],
    cfg: CorpusConfig,
    exceptions: Iterable[str] = (),
) -> Vocabulary:
    """Count every token, then retain those with occ ≥ min_count and length
    ≥ min_word_length (exception-list tokens skip the length test only)."""
    exc = frozenset(_normalize(t, cfg) for t in exceptions)
    counts: Counter[str] = Counter()
    for sentence in corpus:
        counts.update(_normalize(t, cfg) for t in sentence)
    retained = [
        (token, c)
        for token, c in counts.items()
        if c >= cfg.min_count and (len(token) >= cfg.min_word_length or token in exc)
    ]
    if not retained:
        raise ValidationError("no tokens survive the vocabulary filters")
    retained.sort(key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(
        tokens=tuple(t for t, _ in retained),
        occ=np.array([c for _, c in retained], dtype=np.int64),
        exceptions=exc,
    )


def accumulate_cooc(
    corpus: Iterable[Sequence[str]], vocab: Vocabulary, cfg: CorpusConfig
) -> CoocAccumulator:
    """Count co-occurrences with a forward window of ``cfg.window_size``.

    Positions are raw token positions — filtered-out tokens still take up
    space in the window — and windows stop at sentence boundaries. Pairs of
    the same word are not counted.
    """
    index = vocab._index
    window = cfg.window_size
    counts: dict[tuple[int, int], int] = {}
    for sentence in corpus:
        ids = [index.get(_normalize(t, cfg), -1) for t in sentence]
        n = len(ids)
        for i, u in enumerate(ids):
            if u < 0:
                continue
            for j in range(i + 1, min(i + window + 1, n)):
                v = ids[j]
                if v < 0 or v == u:
                    continue
                key = (u, v) if u < v else (v, u)
                counts[key] = counts.get(key, 0) + 1
    return CoocAccumulator(counts, window)


def pmi_filter(acc: CoocAccumulator, vocab: Vocabulary) -> tuple[WeightedGraph, NodeLabelMap]:
    """Drop negative-PMI pairs, keep counts as weights, return the LCC.

    Returns the graph plus the word labels of its nodes (ids are remapped by
    the LCC extraction).
    """
    if not acc.counts:
        raise ValidationError("co-occurrence accumulator is empty")
    s_o = vocab.total_occurrences
    s_c = acc.pair_mass
    kept: dict[tuple[int, int], float] = {}
    for (u, v), c in acc.counts.items():
        if c * s_o * s_o >= int(vocab.occ[u]) * int(vocab.occ[v]) * s_c:
            kept[(u, v)] = float(c)
    if not kept:
        raise ValidationError("every co-occurrence pair failed the PMI test")
    full = build_graph(len(vocab), kept)
    lcc, remap = largest_connected_component(full)
    return lcc, NodeLabelMap(vocab.tokens).subset(remap)


def build_cooccurrence_graph(
    corpus_path: str | Path,
    cfg: CorpusConfig = CorpusConfig(),
    exceptions: Iterable[str] = (),
) -> tuple[WeightedGraph, NodeLabelMap, Vocabulary]:
    """Corpus file -> (PMI-filtered LCC graph, word labels, vocabulary)."""
    vocab = build_vocab(read_corpus(corpus_path), cfg, exceptions)
    acc = accumulate_cooc(read_corpus(corpus_path), vocab, cfg)
    g, labels = pmi_filter(acc, vocab)
    return g, labels, vocab


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Sidecar format: ``token<TAB>occurrences``, one row per word id."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for token, c in zip(vocab.tokens, vocab.occ):
            fh.write(f"{token}\t{int(c)}\n")


def load_vocabulary(path: str | Path, exceptions: Iterable[str] = ()) -> Vocabulary:
    path = Path(path)
    tokens: list[str] = []
    occ: list[int] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise FormatError("expected token<TAB>occurrences", path=str(path), line=lineno)
            try:
                occ.append(int(fields[1]))
            except ValueError:
                raise FormatError(f"count {fields[1]!r} is not an integer",
                                  path=str(path), line=lineno) from None
            tokens.append(fields[0])
    return Vocabulary(tuple(tokens), np.array(occ, dtype=np.int64), frozenset(exceptions))
