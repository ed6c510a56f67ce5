"""Undirected weighted graphs in CSR form, with the structural measures used
downstream: degrees, connected components, clustering coefficient, PageRank.

Graphs are simple (no self-loops, no parallel edges), weights are strictly
positive, and node ids are contiguous integers starting at 0. String labels
live in a separate :class:`NodeLabelMap` so the numeric core stays lean.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ConvergenceError, FormatError, ValidationError

_GRAPH_MAGIC = b"SINRGR01"


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric CSR adjacency: ``indices[indptr[u]:indptr[u+1]]`` are the
    neighbours of ``u`` in ascending order, ``weights`` the matching edge
    weights. Each undirected edge is stored twice.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return len(self.indices) // 2

    @cached_property
    def total_weight(self) -> float:
        """Sum of edge weights, each undirected edge counted once."""
        return float(self.weights.sum()) / 2.0

    @cached_property
    def _row_of_entry(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbour ids and edge weights of ``u`` (views, do not mutate)."""
        _check_node(self, u)
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def degrees(self) -> np.ndarray:
        """Unweighted degree of every node."""
        return np.diff(self.indptr).astype(np.int64)

    def weighted_degrees(self) -> np.ndarray:
        """Weighted degree (strength) of every node."""
        out = np.zeros(self.n)
        np.add.at(out, self._row_of_entry, self.weights)
        return out

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edges as parallel arrays ``(us, vs, ws)`` with ``us < vs``."""
        rows = self._row_of_entry
        mask = rows < self.indices
        return rows[mask], self.indices[mask], self.weights[mask]

    def has_edge(self, u: int, v: int) -> bool:
        ids, _ = self.neighbors(u)
        pos = np.searchsorted(ids, v)
        return pos < len(ids) and ids[pos] == v

    def validate(self) -> None:
        """Check structural invariants; raise :class:`ValidationError` if broken."""
        if len(self.indptr) < 1 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValidationError("corrupt CSR index pointer")
        if np.any(np.diff(self.indptr) < 0):
            raise ValidationError("CSR index pointer is not monotone")
        if len(self.indices) != len(self.weights):
            raise ValidationError("indices and weights length mismatch")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.n):
            raise ValidationError("neighbour id out of range")
        rows = self._row_of_entry
        if np.any(rows == self.indices):
            raise ValidationError("self-loop present")
        # ascending neighbour ids within each row, no duplicates
        same_row = rows[1:] == rows[:-1]
        if np.any(same_row & (np.diff(self.indices) <= 0)):
            raise ValidationError("adjacency rows must be strictly ascending")
        if np.any(~np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise ValidationError("edge weights must be finite and positive")
        # symmetry: the sorted (u, v, w) multiset equals the sorted (v, u, w) one
        fwd = np.lexsort((self.indices, rows))
        bwd = np.lexsort((rows, self.indices))
        if not (
            np.array_equal(rows[fwd], self.indices[bwd])
            and np.array_equal(self.indices[fwd], rows[bwd])
            and np.array_equal(self.weights[fwd], self.weights[bwd])
        ):
            raise ValidationError("adjacency is not symmetric")


@dataclass(frozen=True, eq=False)
class NodeLabelMap:
    """Bijection between contiguous node ids and string labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("node labels must be unique")

    @cached_property
    def _index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def id_of(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValidationError(f"unknown node label {label!r}") from None

    def label_of(self, node: int) -> str:
        if not 0 <= node < len(self.labels):
            raise ValidationError(f"node id {node} out of range")
        return self.labels[node]

    def subset(self, remap: np.ndarray) -> "NodeLabelMap":
        """Labels for the nodes kept by an id remap (old id -> new id or -1)."""
        kept = [(new, self.labels[old]) for old, new in enumerate(remap) if new >= 0]
        kept.sort()
        return NodeLabelMap(tuple(lab for _, lab in kept))


def _check_node(g: WeightedGraph, u: int) -> None:
    if not 0 <= u < g.n:
        raise ValidationError(f"node id {u} out of range for graph with {g.n} nodes")


def build_graph(n: int, edge_weights: Mapping[tuple[int, int], float]) -> WeightedGraph:
    """Build a graph from ``{(u, v): w}`` with ``u != v``; keys may appear in
    either orientation but an edge must only appear once."""
    if n < 0:
        raise ValidationError("node count must be non-negative")
    us = np.empty(2 * len(edge_weights), dtype=np.int64)
    vs = np.empty_like(us)
    ws = np.empty(2 * len(edge_weights))
    for k, ((u, v), w) in enumerate(edge_weights.items()):
        if u == v:
            raise ValidationError(f"self-loop on node {u}")
        if not 0 <= u < n or not 0 <= v < n:
            raise ValidationError(f"edge ({u}, {v}) out of range")
        if not np.isfinite(w) or w <= 0:
            raise ValidationError(f"edge ({u}, {v}) has non-positive weight {w}")
        us[2 * k], vs[2 * k], ws[2 * k] = u, v, w
        us[2 * k + 1], vs[2 * k + 1], ws[2 * k + 1] = v, u, w
    order = np.lexsort((vs, us))
    us, vs, ws = us[order], vs[order], ws[order]
    if len(us) and np.any((us[1:] == us[:-1]) & (vs[1:] == vs[:-1])):
        raise ValidationError("duplicate edge in input")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, us + 1, 1)
    np.cumsum(indptr, out=indptr)
    return WeightedGraph(indptr=indptr, indices=vs, weights=ws)


def load_edge_list(path: str | Path, weighted: bool = False) -> tuple[WeightedGraph, NodeLabelMap]:
    """Read ``src<TAB>dst[<TAB>weight]`` rows into a graph.

    Duplicate edges have their weights summed, self-loops are dropped, and
    labels get contiguous ids in first-seen order. Lines that are blank or
    start with ``#``/``%`` are skipped. Without ``weighted`` every edge counts
    1.0 per occurrence and any third column is ignored.
    """
    path = Path(path)
    ids: dict[str, int] = {}
    acc: dict[tuple[int, int], float] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith(("#", "%")):
                continue
            fields = line.split("\t") if "\t" in line else line.split()
            if len(fields) < 2 or (weighted and len(fields) < 3):
                raise FormatError(
                    f"expected src, dst{', weight' if weighted else ''} but got {len(fields)} field(s)",
                    path=str(path), line=lineno,
                )
            a, b = fields[0], fields[1]
            if weighted:
                try:
                    w = float(fields[2])
                except ValueError:
                    raise FormatError(f"weight {fields[2]!r} is not a number",
                                      path=str(path), line=lineno) from None
                if not np.isfinite(w) or w < 0:
                    raise ValidationError(f"{path}:{lineno}: edge weight must be non-negative and finite, got {w}")
            else:
                w = 1.0
            u = ids.setdefault(a, len(ids))
            v = ids.setdefault(b, len(ids))
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            acc[key] = acc.get(key, 0.0) + w
    # zero-weight rows are legal input but produce no edge
    acc = {k: w for k, w in acc.items() if w > 0}
    labels = NodeLabelMap(tuple(ids))
    return build_graph(len(ids), acc), labels


def save_edge_list(g: WeightedGraph, labels: NodeLabelMap, path: str | Path) -> None:
    """Write the graph as TAB-separated ``src dst weight`` rows, ``src < dst``."""
    us, vs, ws = g.edge_arrays()
    with Path(path).open("w", encoding="utf-8") as fh:
        for u, v, w in zip(us, vs, ws):
            fh.write(f"{labels.label_of(int(u))}\t{labels.label_of(int(v))}\t{float(w)!r}\n")


def save_graph(g: WeightedGraph, path: str | Path, labels: NodeLabelMap | None = None) -> None:
    """Serialize to the versioned little-endian binary cache format."""
    with Path(path).open("wb") as fh:
        fh.write(_GRAPH_MAGIC)
        header = np.array([g.n, len(g.indices), 1 if labels is not None else 0], dtype="<u8")
        fh.write(header.tobytes())
        fh.write(g.indptr.astype("<i8").tobytes())
        fh.write(g.indices.astype("<i8").tobytes())
        fh.write(g.weights.astype("<f8").tobytes())
        if labels is not None:
            blob = json.dumps(list(labels.labels), ensure_ascii=False).encode("utf-8")
            fh.write(np.array([len(blob)], dtype="<u8").tobytes())
            fh.write(blob)


def load_graph(path: str | Path) -> tuple[WeightedGraph, NodeLabelMap | None]:
    """Read a cache written by :func:`save_graph`, verifying magic and shape."""
    raw = Path(path).read_bytes()
    if raw[: len(_GRAPH_MAGIC)] != _GRAPH_MAGIC:
        raise FormatError("not a graph cache (bad magic)", path=str(path))
    off = len(_GRAPH_MAGIC)
    n, nnz, has_labels = (int(x) for x in np.frombuffer(raw, dtype="<u8", count=3, offset=off))
    off += 24
    indptr = np.frombuffer(raw, dtype="<i8", count=n + 1, offset=off).astype(np.int64)
    off += 8 * (n + 1)
    indices = np.frombuffer(raw, dtype="<i8", count=nnz, offset=off).astype(np.int64)
    off += 8 * nnz
    weights = np.frombuffer(raw, dtype="<f8", count=nnz, offset=off).astype(np.float64)
    off += 8 * nnz
    labels = None
    if has_labels:
        (blob_len,) = np.frombuffer(raw, dtype="<u8", count=1, offset=off)
        off += 8
        labels = NodeLabelMap(tuple(json.loads(raw[off : off + int(blob_len)].decode("utf-8"))))
    g = WeightedGraph(indptr=indptr, indices=indices, weights=weights)
    g.validate()
    if labels is not None and len(labels) != g.n:
        raise FormatError("label block does not match node count", path=str(path))
    return g, labels


def component_labels(g: WeightedGraph) -> np.ndarray:
    """Connected-component id per node, numbered in first-seen order."""
    comp = np.full(g.n, -1, dtype=np.int64)
    current = 0
    for start in range(g.n):
        if comp[start] >= 0:
            continue
        comp[start] = current
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in g.indices[g.indptr[u] : g.indptr[u + 1]]:
                if comp[v] < 0:
                    comp[v] = current
                    queue.append(v)
        current += 1
    return comp


def largest_connected_component(g: WeightedGraph) -> tuple[WeightedGraph, np.ndarray]:
    """Restrict to the largest component.

    Returns the sub-graph plus an id remap (old id -> new id, -1 for dropped
    nodes). Ties between equally large components go to the one containing the
    lowest node id.
    """
    if g.n == 0:
        raise ValidationError("graph has no nodes")
    comp = component_labels(g)
    sizes = np.bincount(comp)
    keep = int(np.argmax(sizes))  # argmax takes the first (lowest-id) winner on ties
    remap = np.full(g.n, -1, dtype=np.int64)
    members = np.flatnonzero(comp == keep)
    remap[members] = np.arange(len(members))
    us, vs, ws = g.edge_arrays()
    mask = remap[us] >= 0
    edges = {(int(remap[u]), int(remap[v])): float(w) for u, v, w in zip(us[mask], vs[mask], ws[mask])}
    return build_graph(len(members), edges), remap


def degree(g: WeightedGraph, u: int) -> int:
    """Number of neighbours of ``u``."""
    _check_node(g, u)
    return int(g.indptr[u + 1] - g.indptr[u])


def weighted_degree(g: WeightedGraph, u: int) -> float:
    """Sum of edge weights incident to ``u``."""
    ids, ws = g.neighbors(u)
    return float(ws.sum())


def clustering_coefficient(g: WeightedGraph, u: int) -> float:
    """Unweighted local clustering coefficient of ``u`` (0.0 when degree < 2)."""
    ids, _ = g.neighbors(u)
    d = len(ids)
    if d < 2:
        return 0.0
    links = 0
    for v in ids:
        nv = g.indices[g.indptr[v] : g.indptr[v + 1]]
        links += len(np.intersect1d(ids, nv, assume_unique=True))
    return links / (d * (d - 1))  # each triangle edge counted from both ends


def clustering_coefficients(g: WeightedGraph) -> np.ndarray:
    """Local clustering coefficient for every node."""
    return np.array([clustering_coefficient(g, u) for u in range(g.n)])


def pagerank(
    g: WeightedGraph,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 1000,
) -> np.ndarray:
    """PageRank by power iteration on the weighted random walk.

    The transition probability u -> v is ``w_uv / weighted_degree(u)``.
    Iterates until the L1 change drops below ``tol``; raises
    :class:`ConvergenceError` carrying the last iterate otherwise.
    """
    if g.n == 0:
        raise ValidationError("graph has no nodes")
    if not 0 < damping < 1:
        raise ValidationError("damping must lie strictly between 0 and 1")
    wdeg = g.weighted_degrees()
    if np.any(wdeg == 0):
        raise ValidationError("pagerank requires every node to have an edge")
    rows = g._row_of_entry
    out_frac = g.weights / wdeg[rows]
    x = np.full(g.n, 1.0 / g.n)
    teleport = (1.0 - damping) / g.n
    for _ in range(max_iter):
        nxt = teleport + damping * np.bincount(g.indices, weights=x[rows] * out_frac, minlength=g.n)
        if np.abs(nxt - x).sum() < tol:
            return nxt
        x = nxt
    raise ConvergenceError(
        f"pagerank did not reach tolerance {tol} in {max_iter} iterations", last_iterate=x
    )
