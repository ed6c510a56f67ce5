"""Sparse interpretable embeddings built from community structure.

The pipeline: build a weighted graph (from an edge list or from word
co-occurrence filtered by PMI), detect communities with seeded Louvain, then
embed each node by how its edges distribute over the communities (node recall)
or by factorizing the adjacency against the community indicator matrix.
Evaluation, interpretability probes, and a CLI sit on top.
"""

from __future__ import annotations

from .community import (
    LouvainConfig,
    LouvainResult,
    Partition,
    louvain,
    load_partition,
    modularity,
    nmi,
    save_partition,
)
from .cooc import (
    CorpusConfig,
    Vocabulary,
    build_cooccurrence_graph,
    pmi_filter,
    read_exception_list,
)
from .embedding import (
    MfConfig,
    SparseEmbedding,
    load_embedding,
    load_embedding_text,
    node_recall,
    save_embedding,
    save_embedding_text,
    sinr_mf,
    sinr_nr,
)
from .errors import ConvergenceError, FormatError, SinrError, ValidationError
from .eval_graph import (
    EmbedderSpec,
    embed_graph,
    run_classification,
    run_link_prediction,
    run_regression,
    run_spectral_clustering,
)
from .eval_word import (
    community_stability,
    concept_categorization,
    mean_varnn,
    varnn,
    word_similarity,
)
from .graph import (
    NodeLabelMap,
    WeightedGraph,
    build_graph,
    clustering_coefficient,
    clustering_coefficients,
    component_labels,
    degree,
    largest_connected_component,
    load_edge_list,
    load_graph,
    pagerank,
    save_edge_list,
    save_graph,
    weighted_degree,
)
from .interpret import (
    sample_intrusion_tasks,
    shared_dimensions,
    strongest_dimensions,
    top_words,
)
from .report import EvalReport

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "FormatError",
    "SinrError",
    "ValidationError",
    "NodeLabelMap",
    "WeightedGraph",
    "build_graph",
    "clustering_coefficient",
    "clustering_coefficients",
    "component_labels",
    "degree",
    "largest_connected_component",
    "load_edge_list",
    "load_graph",
    "pagerank",
    "save_edge_list",
    "save_graph",
    "weighted_degree",
    "LouvainConfig",
    "LouvainResult",
    "Partition",
    "louvain",
    "load_partition",
    "modularity",
    "nmi",
    "save_partition",
    "CorpusConfig",
    "Vocabulary",
    "build_cooccurrence_graph",
    "pmi_filter",
    "read_exception_list",
    "MfConfig",
    "SparseEmbedding",
    "load_embedding",
    "load_embedding_text",
    "node_recall",
    "save_embedding",
    "save_embedding_text",
    "sinr_mf",
    "sinr_nr",
    "EmbedderSpec",
    "embed_graph",
    "run_classification",
    "run_link_prediction",
    "run_regression",
    "run_spectral_clustering",
    "community_stability",
    "concept_categorization",
    "mean_varnn",
    "varnn",
    "word_similarity",
    "sample_intrusion_tasks",
    "shared_dimensions",
    "strongest_dimensions",
    "top_words",
    "EvalReport",
    "__version__",
]
