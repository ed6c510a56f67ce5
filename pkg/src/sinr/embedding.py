"""Community-based sparse embeddings.

Two constructions over a graph and a partition into k communities:

* node recall (``sinr_nr``): row u holds, per community, the share of u's
  weighted degree that points into that community — nonnegative, rows sum
  to 1, at most min(degree(u), k) nonzeros;
* factorization (``sinr_mf``): U minimizing the mean squared error between
  the dense adjacency A and U·Cᵀ, with C the binary community indicator,
  learned by SGD over rows and clamped to be nonnegative at export.

Rows index nodes (or words), columns index communities, so coordinates stay
individually meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .community import Partition
from .errors import ConvergenceError, FormatError, ValidationError
from .graph import WeightedGraph
from .rng import spawn_rng

_EMB_MAGIC = b"SINREM01"


@dataclass(eq=False)
class SparseEmbedding:
    """CSR matrix of nonnegative values plus optional per-dimension labels."""

    matrix: sp.csr_matrix
    dimension_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, copy=False)
        m.sum_duplicates()
        m.sort_indices()
        m.eliminate_zeros()
        if m.nnz and m.data.min() < 0:
            raise ValidationError("embedding values must be nonnegative")
        self.matrix = m.astype(np.float64)
        if self.dimension_labels is not None:
            self.dimension_labels = tuple(self.dimension_labels)
            if len(self.dimension_labels) != self.n_cols:
                raise ValidationError("dimension label count does not match column count")

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Column ids (ascending) and values of row ``u``."""
        if not 0 <= u < self.n_rows:
            raise ValidationError(f"row {u} out of range")
        lo, hi = self.matrix.indptr[u], self.matrix.indptr[u + 1]
        return self.matrix.indices[lo:hi], self.matrix.data[lo:hi]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @classmethod
    def from_dense(cls, arr: np.ndarray, dimension_labels=None) -> "SparseEmbedding":
        return cls(sp.csr_matrix(np.asarray(arr, dtype=np.float64)), dimension_labels)


@dataclass(frozen=True)
class MfConfig:
    epochs: int = 3000
    learning_rate: float = 5e-3
    seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self):
        if self.epochs <= 0:
            raise ValidationError("epochs must be positive")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.init_scale <= 0:
            raise ValidationError("init_scale must be positive")


def _community_mass(g: WeightedGraph, p: Partition) -> np.ndarray:
    """Dense n×k matrix with entry (u, i) = weighted edge mass from u into C_i."""
    if len(p) != g.n:
        raise ValidationError(f"partition covers {len(p)} nodes, graph has {g.n}")
    out = np.zeros((g.n, p.community_count))
    np.add.at(out, (g._row_of_entry, p.assignment[g.indices]), g.weights)
    return out


def node_recall(g: WeightedGraph, p: Partition, u: int) -> np.ndarray:
    """Share of u's weighted degree pointing into each community."""
    ids, ws = g.neighbors(u)
    if len(ids) == 0:
        raise ValidationError(f"node {u} is isolated; node recall is undefined")
    out = np.zeros(p.community_count)
    np.add.at(out, p.assignment[ids], ws)
    return out / ws.sum()


def sinr_nr(g: WeightedGraph, p: Partition) -> SparseEmbedding:
    """Node-recall embedding: one dimension per community, rows sum to 1."""
    if len(p) != g.n:
        raise ValidationError(f"partition covers {len(p)} nodes, graph has {g.n}")
    wdeg = g.weighted_degrees()
    if np.any(wdeg == 0):
        isolated = int(np.flatnonzero(wdeg == 0)[0])
        raise ValidationError(f"node {isolated} is isolated; node recall is undefined")
    adjacency = sp.csr_matrix(
        (g.weights, g.indices, g.indptr), shape=(g.n, g.n)
    )
    indicator = sp.csr_matrix(
        (np.ones(g.n), p.assignment, np.arange(g.n + 1)),
        shape=(g.n, p.community_count),
    )
    rows = sp.diags(1.0 / wdeg) @ (adjacency @ indicator)
    return SparseEmbedding(rows.tocsr())


def sinr_mf(
    g: WeightedGraph, p: Partition, config: MfConfig = MfConfig(), max_nodes: int = 20_000
) -> tuple[SparseEmbedding, np.ndarray]:
    """Factorization embedding: SGD on MSE(A, U·Cᵀ) over rows of U.

    One SGD sample is a row u with loss (1/n)·Σ_v (A[u,v] − U[u, c(v)])²;
    rows touch disjoint parameters, so the per-epoch sweep is computed as one
    vectorized update in O(nk) without materializing A. Negative entries are
    clamped to zero only at export. Returns the embedding and the per-epoch
    trace of the full-matrix MSE.
    """
    if g.n > max_nodes:
        raise ValidationError(
            f"graph has {g.n} nodes, above the dense-adjacency cap of {max_nodes}"
        )
    k = p.community_count
    sizes = np.bincount(p.assignment, minlength=k).astype(np.float64)
    mass = _community_mass(g, p)  # D[u, i] = sum_{v in C_i} A[u, v]
    row_sq = np.zeros(g.n)
    np.add.at(row_sq, g._row_of_entry, g.weights**2)

    rng = spawn_rng(config.seed, 0x3F)
    u_mat = rng.random((g.n, k)) * config.init_scale
    step = 2.0 * config.learning_rate / g.n
    trace = np.empty(config.epochs)
    for epoch in range(config.epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            u_mat -= step * (u_mat * sizes - mass)
            sse = row_sq.sum() - 2.0 * float(np.sum(u_mat * mass)) + float(np.sum(u_mat**2 * sizes))
            loss = sse / (g.n * g.n)
        if not np.isfinite(loss):
            raise ConvergenceError(
                f"MF loss became non-finite at epoch {epoch}; try a smaller learning rate "
                f"than {config.learning_rate}",
                last_iterate=u_mat,
            )
        trace[epoch] = loss
    return SparseEmbedding.from_dense(np.maximum(u_mat, 0.0)), trace


def _norms(e: SparseEmbedding) -> np.ndarray:
    return np.sqrt(np.asarray(e.matrix.multiply(e.matrix).sum(axis=1)).ravel())


def cosine_similarity(e: SparseEmbedding, u: int, v: int) -> float:
    """Cosine of rows u and v; raises on zero rows."""
    cu, xu = e.row(u)
    cv, xv = e.row(v)
    nu, nv = np.linalg.norm(xu), np.linalg.norm(xv)
    if nu == 0 or nv == 0:
        raise ValidationError("cosine similarity is undefined for a zero row")
    common_u = np.isin(cu, cv)
    common_v = np.isin(cv, cu)
    return float(np.dot(xu[common_u], xv[common_v]) / (nu * nv))


def top_k_neighbors(e: SparseEmbedding, u: int, k: int) -> list[tuple[int, float]]:
    """The k most cosine-similar rows to u (u excluded), descending; ties go
    to the lower row id."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    norms = _norms(e)
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms == 0)[0])
        raise ValidationError(f"row {bad} is zero; cosine similarity is undefined")
    sims = (e.matrix @ e.matrix[u].T).toarray().ravel() / (norms * norms[u])
    sims[u] = -np.inf
    order = np.lexsort((np.arange(e.n_rows), -sims))
    k = min(k, e.n_rows - 1)
    return [(int(i), float(sims[i])) for i in order[:k]]


def save_embedding_text(e: SparseEmbedding, labels, path: str | Path) -> None:
    """Write the text format: header ``n k``, then ``label dim:value ...`` rows.

    Row labels must not contain whitespace (word and node labels never do).
    """
    from .graph import NodeLabelMap  # local import to avoid cycle in type usage

    if isinstance(labels, NodeLabelMap):
        names = labels.labels
    else:
        names = tuple(labels)
    if len(names) != e.n_rows:
        raise ValidationError("label count does not match row count")
    if any(len(name.split()) != 1 for name in names):
        raise ValidationError("row labels must be whitespace-free for the text format")
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"{e.n_rows} {e.n_cols}\n")
        for u in range(e.n_rows):
            cols, vals = e.row(u)
            entries = " ".join(f"{int(c)}:{float(x)!r}" for c, x in zip(cols, vals))
            fh.write(f"{names[u]} {entries}".rstrip() + "\n")


def load_embedding_text(path: str | Path):
    """Read the text format; returns ``(embedding, label_map)``."""
    from .graph import NodeLabelMap

    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError("expected header 'n k'", path=str(path), line=1)
        try:
            n, k = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError("expected integer header 'n k'", path=str(path), line=1) from None
        names, rows_i, rows_j, rows_v = [], [], [], []
        for lineno, line in enumerate(fh, start=2):
            fields = line.split()
            if not fields:
                continue
            names.append(fields[0])
            for entry in fields[1:]:
                try:
                    c, v = entry.split(":")
                    rows_i.append(len(names) - 1)
                    rows_j.append(int(c))
                    rows_v.append(float(v))
                except ValueError:
                    raise FormatError(f"bad entry {entry!r}", path=str(path), line=lineno) from None
    if len(names) != n:
        raise FormatError(f"header promised {n} rows, found {len(names)}", path=str(path))
    if rows_j and (min(rows_j) < 0 or max(rows_j) >= k):
        raise FormatError("dimension index out of range", path=str(path))
    m = sp.csr_matrix((rows_v, (rows_i, rows_j)), shape=(n, k))
    return SparseEmbedding(m), NodeLabelMap(tuple(names))


def save_embedding(e: SparseEmbedding, labels, path: str | Path) -> None:
    """Binary cache mirroring the text content (little-endian)."""
    import json

    from .graph import NodeLabelMap

    names = labels.labels if isinstance(labels, NodeLabelMap) else tuple(labels)
    if len(names) != e.n_rows:
        raise ValidationError("label count does not match row count")
    m = e.matrix
    with Path(path).open("wb") as fh:
        fh.write(_EMB_MAGIC)
        has_dims = 1 if e.dimension_labels is not None else 0
        fh.write(np.array([e.n_rows, e.n_cols, m.nnz, has_dims], dtype="<u8").tobytes())
        fh.write(m.indptr.astype("<i8").tobytes())
        fh.write(m.indices.astype("<i8").tobytes())
        fh.write(m.data.astype("<f8").tobytes())
        blob = json.dumps(list(names), ensure_ascii=False).encode("utf-8")
        fh.write(np.array([len(blob)], dtype="<u8").tobytes())
        fh.write(blob)
        if has_dims:
            blob = json.dumps(list(e.dimension_labels), ensure_ascii=False).encode("utf-8")
            fh.write(np.array([len(blob)], dtype="<u8").tobytes())
            fh.write(blob)


def load_embedding(path: str | Path):
    """Read a cache written by :func:`save_embedding`; returns ``(embedding, label_map)``."""
    import json

    from .graph import NodeLabelMap

    raw = Path(path).read_bytes()
    if raw[: len(_EMB_MAGIC)] != _EMB_MAGIC:
        raise FormatError("not an embedding cache (bad magic)", path=str(path))
    off = len(_EMB_MAGIC)
    n, k, nnz, has_dims = (int(x) for x in np.frombuffer(raw, dtype="<u8", count=4, offset=off))
    off += 32
    indptr = np.frombuffer(raw, dtype="<i8", count=n + 1, offset=off).astype(np.int64)
    off += 8 * (n + 1)
    indices = np.frombuffer(raw, dtype="<i8", count=nnz, offset=off).astype(np.int64)
    off += 8 * nnz
    data = np.frombuffer(raw, dtype="<f8", count=nnz, offset=off).astype(np.float64)
    off += 8 * nnz
    (blob_len,) = np.frombuffer(raw, dtype="<u8", count=1, offset=off)
    off += 8
    names = json.loads(raw[off : off + int(blob_len)].decode("utf-8"))
    off += int(blob_len)
    dim_labels = None
    if has_dims:
        (blob_len,) = np.frombuffer(raw, dtype="<u8", count=1, offset=off)
        off += 8
        dim_labels = tuple(json.loads(raw[off : off + int(blob_len)].decode("utf-8")))
    m = sp.csr_matrix((data, indices, indptr), shape=(n, k))
    return SparseEmbedding(m, dim_labels), NodeLabelMap(tuple(names))
