"""Shared generators and independent oracles for the test suite.

Oracles here deliberately use different algorithms / data layouts than the
package (union-find instead of BFS, dense matrices instead of CSR, explicit
double loops instead of vectorized accumulation) so that agreement is
meaningful.
"""

from __future__ import annotations

import numpy as np

from sinr.graph import WeightedGraph, build_graph


def random_graph(rng: np.random.Generator, n: int, p: float, weighted: bool = False) -> WeightedGraph:
    """Erdos-Renyi style graph; not necessarily connected."""
    edges = {}
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges[(u, v)] = float(rng.uniform(0.5, 3.0)) if weighted else 1.0
    return build_graph(n, edges)


def random_connected_graph(
    rng: np.random.Generator, n: int, extra: int = 0, weighted: bool = False
) -> WeightedGraph:
    """Random spanning tree plus ``extra`` random chords."""
    edges = {}
    order = rng.permutation(n)
    for i in range(1, n):
        u, v = int(order[rng.integers(0, i)]), int(order[i])
        key = (min(u, v), max(u, v))
        edges[key] = float(rng.uniform(0.5, 3.0)) if weighted else 1.0
    attempts = 0
    while extra > 0 and attempts < 50 * (extra + 1):
        attempts += 1
        u, v = rng.integers(0, n, size=2)
        u, v = int(u), int(v)
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in edges:
            continue
        edges[key] = float(rng.uniform(0.5, 3.0)) if weighted else 1.0
        extra -= 1
    return build_graph(n, edges)


def complete_graph(n: int) -> WeightedGraph:
    return build_graph(n, {(i, j): 1.0 for i in range(n) for j in range(i + 1, n)})


def two_cliques_graph(k: int = 10, bridged: bool = True) -> WeightedGraph:
    """Two k-cliques, optionally joined by a single edge (0 .. k-1 | k .. 2k-1)."""
    edges = {}
    for base in (0, k):
        for i in range(k):
            for j in range(i + 1, k):
                edges[(base + i, base + j)] = 1.0
    if bridged:
        edges[(k - 1, k)] = 1.0
    return build_graph(2 * k, edges)


def planted_partition_graph(
    rng: np.random.Generator, sizes: list[int], p_in: float, p_out: float, weighted: bool = False
) -> WeightedGraph:
    """Blocks with dense intra- and sparse inter-block connectivity."""
    n = sum(sizes)
    block = np.repeat(np.arange(len(sizes)), sizes)
    edges = {}
    for u in range(n):
        for v in range(u + 1, n):
            p = p_in if block[u] == block[v] else p_out
            if rng.random() < p:
                edges[(u, v)] = float(rng.uniform(0.5, 2.0)) if weighted else 1.0
    return build_graph(n, edges)


def dense_adjacency(g: WeightedGraph) -> np.ndarray:
    a = np.zeros((g.n, g.n))
    us, vs, ws = g.edge_arrays()
    a[us, vs] = ws
    a[vs, us] = ws
    return a


def components_oracle(g: WeightedGraph) -> np.ndarray:
    """Connected components by union-find (package uses BFS)."""
    parent = list(range(g.n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    us, vs, _ = g.edge_arrays()
    for u, v in zip(us, vs):
        ru, rv = find(int(u)), find(int(v))
        if ru != rv:
            parent[ru] = rv
    roots = {}
    out = np.empty(g.n, dtype=np.int64)
    for u in range(g.n):
        r = find(u)
        out[u] = roots.setdefault(r, len(roots))
    return out


def clustering_oracle(g: WeightedGraph, u: int) -> float:
    ids, _ = g.neighbors(u)
    nb = [int(x) for x in ids]
    d = len(nb)
    if d < 2:
        return 0.0
    a = dense_adjacency(g)
    tri = sum(1 for i in nb for j in nb if i < j and a[i, j] > 0)
    return 2.0 * tri / (d * (d - 1))


def modularity_oracle(g: WeightedGraph, assignment: np.ndarray, gamma: float) -> float:
    """Q from the dense definition, community by community."""
    a = dense_adjacency(g)
    big_w = a.sum() / 2.0
    q = 0.0
    for c in np.unique(assignment):
        members = np.flatnonzero(assignment == c)
        w_c = a[np.ix_(members, members)].sum() / 2.0
        s_c = a[members, :].sum()
        q += w_c / big_w - gamma * (s_c / (2.0 * big_w)) ** 2
    return q


def node_recall_oracle(g: WeightedGraph, assignment: np.ndarray) -> np.ndarray:
    """Dense per-community edge-weight shares, one row per node."""
    a = dense_adjacency(g)
    k = int(assignment.max()) + 1
    out = np.zeros((g.n, k))
    for u in range(g.n):
        dw = a[u].sum()
        for c in range(k):
            out[u, c] = a[u, assignment == c].sum() / dw
    return out


def pagerank_oracle(g: WeightedGraph, damping: float = 0.85) -> np.ndarray:
    """Fixed point of the PageRank linear system by direct solve."""
    a = dense_adjacency(g)
    p = a / a.sum(axis=1, keepdims=True)
    n = g.n
    return np.linalg.solve(np.eye(n) - damping * p.T, np.full(n, (1.0 - damping) / n))
