"""Community detection: seeded Louvain with a resolution parameter, the
matching modularity, and normalized mutual information between partitions.

Modularity of a partition P of graph g with total edge weight W:

    Q = sum over communities c of  w_c / W - gamma * (s_c / 2W)^2

where w_c is the intra-community edge weight (each edge once) and s_c the sum
of weighted degrees of the community's members. ``gamma`` trades community
size against count: larger values favour more, smaller communities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .graph import NodeLabelMap, WeightedGraph
from .rng import spawn_rng


def _first_seen_relabel(values) -> np.ndarray:
    mapping: dict[int, int] = {}
    out = np.empty(len(values), dtype=np.int64)
    for i, v in enumerate(values):
        out[i] = mapping.setdefault(int(v), len(mapping))
    return out


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of each node to one community.

    Community ids are contiguous integers starting at 0 and every community is
    non-empty; use :meth:`from_labels` to normalize arbitrary label vectors.
    """

    assignment: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "assignment", arr)
        if arr.ndim != 1 or len(arr) == 0:
            raise ValidationError("assignment must be a non-empty 1-d array")
        if arr.min() < 0:
            raise ValidationError("community ids must be non-negative")
        seen = np.unique(arr)
        if not np.array_equal(seen, np.arange(len(seen))):
            raise ValidationError("community ids must be contiguous from 0 with no empty community")

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Build a partition from any label vector, renumbering communities in
        first-seen order."""
        return cls(_first_seen_relabel(labels))

    def __len__(self) -> int:
        return len(self.assignment)

    @property
    def community_count(self) -> int:
        return int(self.assignment.max()) + 1

    @cached_property
    def members(self) -> tuple[np.ndarray, ...]:
        """Member node ids per community, ascending."""
        order = np.argsort(self.assignment, kind="stable")
        bounds = np.searchsorted(self.assignment[order], np.arange(self.community_count + 1))
        return tuple(np.sort(order[bounds[i] : bounds[i + 1]]) for i in range(self.community_count))


@dataclass(frozen=True)
class LouvainConfig:
    gamma: float = 1.0
    seed: int = 0
    min_modularity_gain: float = 1e-6
    max_passes: int = 100

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValidationError("gamma must be positive")
        if self.min_modularity_gain < 0:
            raise ValidationError("min_modularity_gain must be non-negative")
        if self.max_passes < 1:
            raise ValidationError("max_passes must be at least 1")


@dataclass(frozen=True)
class LouvainResult:
    partition: Partition
    modularity_trace: tuple[float, ...]
    """Q of the flattened node-level partition: singletons first, then one
    entry per completed pass."""


def modularity(g: WeightedGraph, p: Partition, gamma: float = 1.0) -> float:
    """Resolution-parametrized modularity of ``p`` on ``g``."""
    if len(p) != g.n:
        raise ValidationError(f"partition covers {len(p)} nodes, graph has {g.n}")
    if g.m == 0:
        raise ValidationError("modularity is undefined on an edgeless graph")
    comm = p.assignment
    rows = g._row_of_entry
    intra = comm[rows] == comm[g.indices]
    w_c = np.bincount(comm[rows[intra]], weights=g.weights[intra], minlength=p.community_count) / 2.0
    s_c = np.bincount(comm, weights=g.weighted_degrees(), minlength=p.community_count)
    big_w = g.total_weight
    return float(np.sum(w_c / big_w) - gamma * np.sum((s_c / (2.0 * big_w)) ** 2))


def louvain(g: WeightedGraph, config: LouvainConfig = LouvainConfig()) -> LouvainResult:
    """Greedy modularity optimization: local moving plus graph aggregation.

    Node visitation order is shuffled from ``config.seed`` once per pass. A
    node moves only for a strict modularity gain; on ties it keeps its current
    community, and among equally good new communities the lowest id wins.
    Sweeps within a pass repeat until one gains less than
    ``config.min_modularity_gain`` (this, not a zero-move fixed point, is what
    keeps run time near-linear in m on structureless graphs); the pass loop
    stops under the same threshold or after ``config.max_passes``.
    """
    if g.n == 0:
        raise ValidationError("graph has no nodes")
    if g.m == 0:
        # no edges: every node is its own community
        return LouvainResult(Partition(np.arange(g.n)), ())
    rng = spawn_rng(config.seed, 0x10)
    adj: list[dict[int, float]] = [dict() for _ in range(g.n)]
    for u in range(g.n):
        lo, hi = g.indptr[u], g.indptr[u + 1]
        adj[u] = {int(v): float(w) for v, w in zip(g.indices[lo:hi], g.weights[lo:hi])}
    loops = np.zeros(g.n)
    deg = g.weighted_degrees().astype(float)
    big_m = float(deg.sum())  # = 2W, invariant across aggregation levels

    membership = np.arange(g.n)
    q_prev = modularity(g, Partition(membership), config.gamma)
    trace = [q_prev]

    for _ in range(config.max_passes):
        comm, improved = _local_move(
            adj, loops, deg, config.gamma, big_m, rng, config.min_modularity_gain
        )
        if not improved:
            break
        membership = _first_seen_relabel(comm[membership])
        q_new = modularity(g, Partition(membership), config.gamma)
        trace.append(q_new)
        if q_new - q_prev < config.min_modularity_gain:
            break
        q_prev = q_new
        adj, loops, deg = _aggregate(adj, loops, _first_seen_relabel(comm))

    return LouvainResult(Partition(membership), tuple(trace))


def _local_move(
    adj: list[dict[int, float]],
    loops: np.ndarray,
    deg: np.ndarray,
    gamma: float,
    big_m: float,
    rng: np.random.Generator,
    min_gain: float,
) -> tuple[np.ndarray, bool]:
    """One level of greedy local moving. Returns (community per node, moved?)."""
    n = len(adj)
    comm = np.arange(n)
    tot = deg.copy()  # summed weighted degree per community
    order = rng.permutation(n)
    improved = False
    while True:
        moves = 0
        sweep_gain = 0.0  # ΔQ accrued by this sweep's moves
        for i in order:
            i = int(i)
            c0 = int(comm[i])
            k_i = deg[i]
            link: dict[int, float] = {}
            for j, w in adj[i].items():
                c = int(comm[j])
                link[c] = link.get(c, 0.0) + w
            tot[c0] -= k_i
            stay_gain = link.get(c0, 0.0) - gamma * tot[c0] * k_i / big_m
            best_c, best_gain = c0, stay_gain
            for c in sorted(link):  # ascending id => ties resolve to the lowest
                if c == c0:
                    continue
                gain = link[c] - gamma * tot[c] * k_i / big_m
                if gain > best_gain:
                    best_c, best_gain = c, gain
            tot[best_c] += k_i
            if best_c != c0:
                comm[i] = best_c
                moves += 1
                sweep_gain += (best_gain - stay_gain) * 2.0 / big_m
        if moves == 0:
            break
        improved = True
        if sweep_gain < min_gain:
            break
    return comm, improved


def _aggregate(
    adj: list[dict[int, float]], loops: np.ndarray, comm: np.ndarray
) -> tuple[list[dict[int, float]], np.ndarray, np.ndarray]:
    """Collapse communities into super-nodes, folding intra weight into loops."""
    k = int(comm.max()) + 1
    new_adj: list[dict[int, float]] = [dict() for _ in range(k)]
    new_loops = np.zeros(k)
    for i, row in enumerate(adj):
        ci = int(comm[i])
        new_loops[ci] += loops[i]
        for j, w in row.items():
            cj = int(comm[j])
            if ci == cj:
                if i < j:
                    new_loops[ci] += w
            else:
                new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
    new_deg = np.array([sum(row.values()) for row in new_adj]) + 2.0 * new_loops
    return new_adj, new_loops, new_deg


def _assignment_of(p) -> np.ndarray:
    if isinstance(p, Partition):
        return p.assignment
    arr = np.asarray(p)
    if arr.ndim != 1:
        raise ValidationError("label vector must be 1-d")
    return _first_seen_relabel(arr)


def nmi(a, b) -> float:
    """Normalized mutual information with arithmetic-mean normalization.

    Accepts :class:`Partition` objects or raw label vectors. When both
    partitions carry zero information (e.g. each is a single community) the
    0/0 case is defined as 0.0.
    """
    x, y = _assignment_of(a), _assignment_of(b)
    if len(x) != len(y):
        raise ValidationError(f"partitions cover {len(x)} and {len(y)} nodes")
    n = len(x)
    if n == 0:
        raise ValidationError("partitions must be non-empty")
    kx, ky = int(x.max()) + 1, int(y.max()) + 1
    cont = np.zeros((kx, ky))
    np.add.at(cont, (x, y), 1.0)
    px = cont.sum(axis=1) / n
    py = cont.sum(axis=0) / n
    mi = 0.0
    for i in range(kx):
        for j in range(ky):
            nij = cont[i, j]
            if nij > 0:
                mi += (nij / n) * math.log(nij / (n * px[i] * py[j]))
    h_x = -float(np.sum(px * np.log(px, where=px > 0, out=np.zeros_like(px))))
    h_y = -float(np.sum(py * np.log(py, where=py > 0, out=np.zeros_like(py))))
    denom = 0.5 * (h_x + h_y)
    if denom == 0.0:
        return 0.0
    return float(min(max(mi / denom, 0.0), 1.0))


def save_partition(p: Partition, labels: NodeLabelMap, path: str | Path) -> None:
    """Write ``node_label<TAB>community_id`` rows, one per node."""
    if len(labels) != len(p):
        raise ValidationError("label map does not match partition size")
    with Path(path).open("w", encoding="utf-8") as fh:
        for u, c in enumerate(p.assignment):
            fh.write(f"{labels.label_of(u)}\t{int(c)}\n")


def load_partition(path: str | Path, labels: NodeLabelMap) -> Partition:
    """Read a partition saved by :func:`save_partition`.

    Every label must appear exactly once; community ids are renumbered in
    first-seen node-id order (a no-op for files this package wrote).
    """
    path = Path(path)
    raw = np.full(len(labels), -1, dtype=np.int64)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise FormatError("expected node_label<TAB>community_id", path=str(path), line=lineno)
            try:
                cid = int(fields[1])
            except ValueError:
                raise FormatError(f"community id {fields[1]!r} is not an integer",
                                  path=str(path), line=lineno) from None
            u = labels.id_of(fields[0])
            if raw[u] >= 0:
                raise FormatError(f"duplicate node {fields[0]!r}", path=str(path), line=lineno)
            raw[u] = cid
    if np.any(raw < 0):
        missing = labels.label_of(int(np.flatnonzero(raw < 0)[0]))
        raise FormatError(f"node {missing!r} missing from partition file", path=str(path))
    return Partition.from_labels(raw)
