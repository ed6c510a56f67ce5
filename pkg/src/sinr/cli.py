"""The ``sinr`` command line: one entry point wiring the whole pipeline.

Graph/corpus ingestion, community detection, both embedders, every
evaluation protocol, interpretability probes, and dataset plumbing. All
randomness flows from ``--seed`` so any subcommand re-run with the same
configuration produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .community import LouvainConfig, louvain, save_partition, load_partition
from .cooc import (
    CorpusConfig,
    build_cooccurrence_graph,
    read_exception_list,
    save_vocabulary,
)
from .datasets import DATASET_NAMES, fetch_datasets, prepare_dataset
from .embedding import (
    _EMB_MAGIC,
    MfConfig,
    SparseEmbedding,
    load_embedding,
    load_embedding_text,
    save_embedding,
    save_embedding_text,
    sinr_mf,
    sinr_nr,
)
from .errors import FormatError, SinrError, ValidationError
from .eval_graph import (
    EmbedderSpec,
    load_node_classes,
    run_classification,
    run_link_prediction,
    run_regression,
    run_spectral_clustering,
)
from .eval_word import (
    DEFAULT_VARNN_GRID,
    community_stability,
    concept_categorization,
    load_categorization_dataset,
    load_similarity_dataset,
    mean_varnn,
    word_similarity,
)
from .graph import (
    _GRAPH_MAGIC,
    NodeLabelMap,
    WeightedGraph,
    load_edge_list,
    load_graph,
    save_graph,
)
from .interpret import (
    annotation_agreement,
    load_annotations,
    load_intrusion_key,
    sample_intrusion_tasks,
    save_intrusion_tasks,
    score_annotations,
    shared_dimensions,
    strongest_dimensions,
    top_words,
)
from .report import EvalReport
from .rng import spawn_seed

GRAPH_TASKS = ("linkpred", "degree", "clustcoef", "pagerank", "spectral", "classify")
WORD_TASKS = ("similarity", "categorize", "stability", "varnn")

#: Run counts used when --runs is absent: graph protocols average 50 runs,
#: word-level protocols 10.
DEFAULT_GRAPH_RUNS = 50
DEFAULT_WORD_RUNS = 10


def default_gamma(n_nodes: int) -> float:
    """Resolution default by graph size: 1 under 10k nodes, 5 above."""
    return 1.0 if n_nodes < 10_000 else 5.0


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation settings (flags > config file > defaults)."""

    command: str
    seed: int = 0
    gamma: float | None = None
    runs: int | None = None
    epochs: int = 3000
    learning_rate: float = 5e-3
    jobs: int = 1
    out_dir: Path = Path(".")

    def __post_init__(self):
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")
        if self.gamma is not None and self.gamma <= 0:
            raise ValidationError(f"invalid gamma {self.gamma}")
        if self.runs is not None and self.runs < 1:
            raise ValidationError("runs must be at least 1")
        if self.epochs < 1 or self.learning_rate <= 0:
            raise ValidationError("invalid factorization settings")
        if self.jobs < 1:
            raise ValidationError("jobs must be at least 1")

    def resolve_gamma(self, g: WeightedGraph) -> float:
        return self.gamma if self.gamma is not None else default_gamma(g.n)

    def resolve_runs(self, task: str) -> int:
        if self.runs is not None:
            return self.runs
        return DEFAULT_GRAPH_RUNS if task in GRAPH_TASKS else DEFAULT_WORD_RUNS


def _read_config_file(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; '#' comments; keys use flag spelling."""
    out: dict[str, str] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(
                    f"{path}:{lineno}: expected key = value, got {line!r}"
                )
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


_CASTS = {
    "seed": int,
    "runs": int,
    "jobs": int,
    "epochs": int,
    "count": int,
    "dim": int,
    "k": int,
    "window": int,
    "min_count": int,
    "min_length": int,
    "words_per_dim": int,
    "gamma": float,
    "learning_rate": float,
    "test_fraction": float,
    "init_scale": float,
}


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill argparse ``None`` values from the optional config file."""
    if not getattr(args, "config", None):
        return args
    overrides = _read_config_file(args.config)
    for key, text in overrides.items():
        if not hasattr(args, key):
            raise ValidationError(f"config key {key!r} is not a known option")
        if getattr(args, key) is None:
            cast = _CASTS.get(key, str)
            try:
                setattr(args, key, cast(text))
            except ValueError:
                raise ValidationError(
                    f"config value {text!r} is invalid for {key!r}"
                ) from None
    return args


def _run_config(args: argparse.Namespace) -> RunConfig:
    out_dir = getattr(args, "out_dir", None)
    if out_dir is None:
        out_dir = os.environ.get("SINR_OUT_DIR", ".")
    return RunConfig(
        command=args.command,
        seed=getattr(args, "seed", None) or 0,
        gamma=getattr(args, "gamma", None),
        runs=getattr(args, "runs", None),
        epochs=getattr(args, "epochs", None) or 3000,
        learning_rate=getattr(args, "learning_rate", None) or 5e-3,
        jobs=getattr(args, "jobs", None) or 1,
        out_dir=Path(out_dir),
    )


def _load_any_graph(path: str | Path, weighted: bool = False):
    """Accept either the binary graph cache or a plain edge list."""
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(len(_GRAPH_MAGIC))
    if magic == _GRAPH_MAGIC:
        g, labels = load_graph(path)
        if labels is None:
            labels = NodeLabelMap(tuple(str(i) for i in range(g.n)))
        return g, labels
    return load_edge_list(path, weighted=weighted)


def _load_any_model(path: str | Path):
    """Accept either the binary embedding cache or the text format."""
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(len(_EMB_MAGIC))
    if magic == _EMB_MAGIC:
        return load_embedding(path)
    try:
        return load_embedding_text(path)
    except UnicodeDecodeError:
        raise FormatError("not an embedding file", path=str(path)) from None


def _out_path(cfg: RunConfig, explicit: str | None, default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir / default_name


def _partition_for(g, labels, args, cfg: RunConfig):
    if getattr(args, "partition", None):
        return load_partition(args.partition, labels)
    lcfg = LouvainConfig(gamma=cfg.resolve_gamma(g), seed=spawn_seed(cfg.seed, 1))
    return louvain(g, lcfg).partition


def _save_model(e: SparseEmbedding, labels, path: Path, fmt: str) -> None:
    if fmt == "binary":
        save_embedding(e, labels, path)
    else:
        save_embedding_text(e, labels, path)


def _write_report(report: EvalReport, path: Path) -> None:
    report.save(path)
    print(report)
    print(f"wrote {path}")


# --- subcommand handlers ----------------------------------------------------


def _cmd_build_graph(args, cfg: RunConfig) -> int:
    g, labels = load_edge_list(args.edges, weighted=args.weighted)
    out = _out_path(cfg, args.out, "graph.bin")
    save_graph(g, out, labels)
    print(f"graph: n={g.n} m={g.m} -> {out}")
    return 0


def _cmd_build_cooc(args, cfg: RunConfig) -> int:
    ccfg = CorpusConfig(
        window_size=args.window if args.window is not None else 5,
        min_count=args.min_count if args.min_count is not None else 20,
        min_word_length=args.min_length if args.min_length is not None else 3,
        lowercase=not args.no_lowercase,
    )
    exceptions = read_exception_list(args.exceptions) if args.exceptions else ()
    g, labels, vocab = build_cooccurrence_graph(args.corpus, ccfg, exceptions)
    out = _out_path(cfg, args.out, "cooc.bin")
    save_graph(g, out, labels)
    print(f"cooc graph: {len(vocab.tokens)} types, n={g.n} m={g.m} -> {out}")
    if args.vocab_out:
        save_vocabulary(vocab, args.vocab_out)
        print(f"vocabulary -> {args.vocab_out}")
    return 0


def _cmd_louvain(args, cfg: RunConfig) -> int:
    g, labels = _load_any_graph(args.graph, weighted=args.weighted)
    lcfg = LouvainConfig(gamma=cfg.resolve_gamma(g), seed=cfg.seed)
    result = louvain(g, lcfg)
    out = _out_path(cfg, args.out, "partition.tsv")
    save_partition(result.partition, labels, out)
    final_q = result.modularity_trace[-1] if result.modularity_trace else 0.0
    print(
        f"louvain: gamma={lcfg.gamma} communities="
        f"{result.partition.community_count} modularity={final_q:.4f} -> {out}"
    )
    return 0


def _cmd_embed(args, cfg: RunConfig, kind: str) -> int:
    g, labels = _load_any_graph(args.graph, weighted=args.weighted)
    partition = _partition_for(g, labels, args, cfg)
    if kind == "nr":
        e = sinr_nr(g, partition)
    else:
        mf_cfg = MfConfig(
            epochs=cfg.epochs,
            learning_rate=cfg.learning_rate,
            seed=spawn_seed(cfg.seed, 2),
            init_scale=args.init_scale if args.init_scale is not None else 0.1,
        )
        e, trace = sinr_mf(g, partition, mf_cfg)
        print(f"factorization: final loss {trace[-1]:.6g}")
    out = _out_path(cfg, args.out, f"embedding_{kind}.tsv")
    _save_model(e, labels, out, args.format)
    print(f"embedding: {e.n_rows}x{e.n_cols}, nnz={e.nnz} -> {out}")
    return 0


def _embedder_spec(args, cfg: RunConfig, g) -> EmbedderSpec:
    mf = MfConfig(epochs=cfg.epochs, learning_rate=cfg.learning_rate)
    return EmbedderSpec(kind=args.embed, gamma=cfg.resolve_gamma(g), mf=mf)


def _cmd_eval_linkpred(args, cfg: RunConfig) -> int:
    g, _ = _load_any_graph(args.graph, weighted=args.weighted)
    report = run_link_prediction(
        g,
        _embedder_spec(args, cfg, g),
        runs=cfg.resolve_runs("linkpred"),
        test_fraction=args.test_fraction if args.test_fraction is not None else 0.2,
        seed=cfg.seed,
        classifier=args.classifier,
        jobs=cfg.jobs,
    )
    _write_report(report, _out_path(cfg, args.out, f"linkpred_{args.embed}.json"))
    return 0


def _cmd_eval_regression(args, cfg: RunConfig, target: str) -> int:
    g, _ = _load_any_graph(args.graph, weighted=args.weighted)
    report = run_regression(
        g,
        _embedder_spec(args, cfg, g),
        target,
        runs=cfg.resolve_runs(target),
        seed=cfg.seed,
        jobs=cfg.jobs,
    )
    _write_report(report, _out_path(cfg, args.out, f"regression_{target}_{args.embed}.json"))
    return 0


def _cmd_eval_spectral(args, cfg: RunConfig) -> int:
    g, labels = _load_any_graph(args.graph, weighted=args.weighted)
    classes, _ = load_node_classes(args.classes, labels)
    report = run_spectral_clustering(
        g,
        _embedder_spec(args, cfg, g),
        classes,
        runs=cfg.resolve_runs("spectral"),
        seed=cfg.seed,
        jobs=cfg.jobs,
    )
    _write_report(report, _out_path(cfg, args.out, f"spectral_{args.embed}.json"))
    return 0


def _cmd_eval_classify(args, cfg: RunConfig) -> int:
    g, labels = _load_any_graph(args.graph, weighted=args.weighted)
    classes, _ = load_node_classes(args.classes, labels)
    report = run_classification(
        g,
        _embedder_spec(args, cfg, g),
        classes,
        runs=cfg.resolve_runs("classify"),
        seed=cfg.seed,
        classifier=args.classifier,
        jobs=cfg.jobs,
    )
    _write_report(report, _out_path(cfg, args.out, f"classify_{args.embed}.json"))
    return 0


def _cmd_eval_similarity(args, cfg: RunConfig) -> int:
    e, labels = _load_any_model(args.model)
    ds = load_similarity_dataset(
        args.dataset, layout=args.layout, lowercase=args.lowercase
    )
    rho, coverage = word_similarity(e, labels, ds)
    report = EvalReport(
        task="word_similarity",
        metric="spearman",
        values=(rho,),
        config={"dataset": ds.name, "model": str(args.model)},
        details={"coverage": coverage, "pairs": len(ds)},
    )
    _write_report(report, _out_path(cfg, args.out, f"similarity_{ds.name}.json"))
    return 0


def _cmd_eval_categorize(args, cfg: RunConfig) -> int:
    e, labels = _load_any_model(args.model)
    ds = load_categorization_dataset(args.dataset, lowercase=args.lowercase)
    runs = cfg.resolve_runs("categorize")
    purity, coverage = concept_categorization(e, labels, ds, runs=runs, seed=cfg.seed)
    report = EvalReport(
        task="concept_categorization",
        metric="purity",
        values=(purity,),
        config={"dataset": ds.name, "model": str(args.model), "runs": runs,
                "seed": cfg.seed},
        details={"coverage": coverage, "categories": len(ds.categories)},
    )
    _write_report(report, _out_path(cfg, args.out, f"categorize_{ds.name}.json"))
    return 0


def _cmd_eval_stability(args, cfg: RunConfig) -> int:
    g, _ = _load_any_graph(args.graph, weighted=args.weighted)
    runs = cfg.resolve_runs("stability")
    lcfg = LouvainConfig(gamma=cfg.resolve_gamma(g), seed=cfg.seed)
    value = community_stability(g, lcfg, runs=runs)
    report = EvalReport(
        task="community_stability",
        metric="nmi",
        values=(value,),
        config={"gamma": lcfg.gamma, "runs": runs, "seed": cfg.seed},
    )
    _write_report(report, _out_path(cfg, args.out, "stability.json"))
    return 0


def _cmd_eval_varnn(args, cfg: RunConfig) -> int:
    if len(args.models) < 2:
        raise ValidationError("varnn needs at least two --models")
    models = [_load_any_model(p) for p in args.models]
    grid = DEFAULT_VARNN_GRID
    if args.grid:
        grid = tuple(int(x) for x in args.grid.split(","))
    sample = None
    if args.sample_file:
        sample = [
            line.strip()
            for line in Path(args.sample_file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    curve = mean_varnn(models, grid=grid, sample=sample)
    out = _out_path(cfg, args.out, "varnn.json")
    payload = {
        "task": "varnn",
        "curve": [[n, v] for n, v in curve],
        "config": {"models": [str(p) for p in args.models], "grid": list(grid)},
    }
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for n, v in curve:
        print(f"N={n}: mean varnn {v:.4f}")
    print(f"wrote {out}")
    return 0


def _cmd_probe_top_words(args, cfg: RunConfig) -> int:
    e, labels = _load_any_model(args.model)
    d = top_words(e, labels, args.dim, k=args.k if args.k is not None else 10)
    lines = [f"{w}\t{v!r}" for w, v in d.entries]
    note = " (all nonzero words shown)" if d.truncated else ""
    print(f"dimension {d.dimension}: {d.member_count} members{note}")
    print("\n".join(lines))
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _cmd_probe_word_dims(args, cfg: RunConfig) -> int:
    e, labels = _load_any_model(args.model)
    profile = strongest_dimensions(
        e,
        labels,
        args.word,
        k=args.k if args.k is not None else 3,
        words_per_dim=args.words_per_dim if args.words_per_dim is not None else 5,
    )
    for dim, value, desc in profile.entries:
        tops = ", ".join(w for w, _ in desc.entries)
        print(f"d{dim}\t{value:.4f}\t{tops}")
    if profile.truncated:
        print("(fewer active dimensions than requested)")
    return 0


def _cmd_probe_shared_dims(args, cfg: RunConfig) -> int:
    e, labels = _load_any_model(args.model)
    sd = shared_dimensions(e, labels, args.words.split(","))
    out = _out_path(cfg, args.out, "shared_dims.tsv")
    sd.save_grid(out, presence=not args.values)
    print(f"{len(sd.dimensions)} shared dimensions -> {out}")
    return 0


def _cmd_intrusion_gen(args, cfg: RunConfig) -> int:
    e, labels = _load_any_model(args.model)
    tasks = sample_intrusion_tasks(
        e,
        labels,
        count=args.count,
        seed=cfg.seed,
        model_id=args.model_id,
    )
    tasks_out = _out_path(cfg, args.tasks_out, "intrusion_tasks.tsv")
    key_out = _out_path(cfg, args.key_out, "intrusion_key.tsv")
    save_intrusion_tasks(tasks, tasks_out, key_out)
    print(f"{len(tasks)} tasks -> {tasks_out} (key: {key_out})")
    return 0


def _cmd_intrusion_score(args, cfg: RunConfig) -> int:
    key = load_intrusion_key(args.key)
    annotations = load_annotations(args.annotations)
    counts = score_annotations(key, annotations)
    payload: dict = {"counts": counts}
    if args.agreement:
        rep = annotation_agreement(key, annotations)
        payload["agreement"] = {
            "fleiss_kappa": rep.kappa,
            "at_least_two": rep.at_least_two,
            "all_agree": rep.all_agree,
            "items": rep.items,
        }
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def _cmd_fetch_datasets(args, cfg: RunConfig) -> int:
    names = args.names.split(",") if args.names else None
    fetch_datasets(args.dest, names=names, manifest=args.manifest)
    return 0


def _cmd_prep_dataset(args, cfg: RunConfig) -> int:
    stats = prepare_dataset(args.name, args.source, args.dest)
    print(f"{args.name}: " + " ".join(f"{k}={v}" for k, v in sorted(stats.items())))
    return 0


# --- parser -----------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master random seed (default 0)")
    p.add_argument("--out-dir", default=None,
                   help="output directory (default $SINR_OUT_DIR or '.')")
    p.add_argument("--config", default=None,
                   help="optional key = value config file; flags win")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers for runs")


def _add_graph_in(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True,
                   help="binary graph cache or edge-list file")
    p.add_argument("--weighted", action="store_true",
                   help="edge-list input has a weight column")


def _add_eval_common(p: argparse.ArgumentParser, kinds=("nr", "mf", "heuristics")) -> None:
    p.add_argument("--embed", choices=kinds, default="nr")
    p.add_argument("--gamma", type=float, default=None,
                   help="resolution (default: 1 under 10k nodes, else 5)")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None, help="factorization epochs")
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--out", default=None, help="report path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinr",
        description="Sparse interpretable graph and word embeddings from communities.",
    )
    parser.add_argument("--version", action="version", version=f"sinr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="cache an edge list as a binary graph")
    p.add_argument("--edges", required=True)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--out", default=None)
    _add_common(p)

    p = sub.add_parser("build-cooc", help="corpus -> PMI-filtered co-occurrence graph")
    p.add_argument("--corpus", required=True, help="one sentence per line")
    p.add_argument("--exceptions", default=None, help="length-exempt token list")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--min-count", type=int, default=None)
    p.add_argument("--min-length", type=int, default=None)
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--out", default=None)
    p.add_argument("--vocab-out", default=None)
    _add_common(p)

    p = sub.add_parser("louvain", help="detect communities")
    _add_graph_in(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--out", default=None)
    _add_common(p)

    for kind in ("nr", "mf"):
        p = sub.add_parser(f"embed-{kind}", help=f"train the {kind} embedding")
        _add_graph_in(p)
        p.add_argument("--partition", default=None,
                       help="partition file (default: run community detection)")
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--format", choices=("text", "binary"), default="text")
        p.add_argument("--out", default=None)
        if kind == "mf":
            p.add_argument("--epochs", type=int, default=None)
            p.add_argument("--learning-rate", type=float, default=None)
            p.add_argument("--init-scale", type=float, default=None)
        _add_common(p)

    p = sub.add_parser("eval", help="run an evaluation protocol")
    eval_sub = p.add_subparsers(dest="task", required=True)

    q = eval_sub.add_parser("linkpred", help="edge-removal link prediction accuracy")
    _add_graph_in(q)
    _add_eval_common(q)
    q.add_argument("--test-fraction", type=float, default=None)
    q.add_argument("--classifier", choices=("gbdt", "logreg"), default="gbdt")
    _add_common(q)

    for target in ("degree", "clustcoef", "pagerank"):
        q = eval_sub.add_parser(target, help=f"{target} regression R²")
        _add_graph_in(q)
        _add_eval_common(q, kinds=("nr", "mf"))
        _add_common(q)

    q = eval_sub.add_parser("spectral", help="spectral clustering NMI vs classes")
    _add_graph_in(q)
    q.add_argument("--classes", required=True)
    _add_eval_common(q, kinds=("nr", "mf"))
    _add_common(q)

    q = eval_sub.add_parser("classify", help="node classification accuracy")
    _add_graph_in(q)
    q.add_argument("--classes", required=True)
    _add_eval_common(q, kinds=("nr", "mf"))
    q.add_argument("--classifier", choices=("gbdt", "logreg"), default="gbdt")
    _add_common(q)

    q = eval_sub.add_parser("similarity", help="word-pair similarity Spearman")
    q.add_argument("--model", required=True, help="text-format embedding")
    q.add_argument("--dataset", required=True)
    q.add_argument("--layout", choices=("tsv", "scws"), default="tsv")
    q.add_argument("--lowercase", action="store_true")
    q.add_argument("--out", default=None)
    _add_common(q)

    q = eval_sub.add_parser("categorize", help="concept categorization purity")
    q.add_argument("--model", required=True)
    q.add_argument("--dataset", required=True)
    q.add_argument("--lowercase", action="store_true")
    q.add_argument("--runs", type=int, default=None)
    q.add_argument("--out", default=None)
    _add_common(q)

    q = eval_sub.add_parser("stability", help="community stability across seeds")
    _add_graph_in(q)
    q.add_argument("--gamma", type=float, default=None)
    q.add_argument("--runs", type=int, default=None)
    q.add_argument("--out", default=None)
    _add_common(q)

    q = eval_sub.add_parser("varnn", help="neighborhood instability curve")
    q.add_argument("--models", nargs="+", required=True,
                   help="two or more text-format embeddings")
    q.add_argument("--grid", default=None, help="comma-separated neighbor counts")
    q.add_argument("--sample-file", default=None, help="restrict to these words")
    q.add_argument("--out", default=None)
    _add_common(q)

    p = sub.add_parser("probe", help="inspect a trained model")
    probe_sub = p.add_subparsers(dest="task", required=True)

    q = probe_sub.add_parser("top-words", help="strongest words of a dimension")
    q.add_argument("--model", required=True)
    q.add_argument("--dim", type=int, required=True)
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--out", default=None)
    _add_common(q)

    q = probe_sub.add_parser("word-dims", help="strongest dimensions of a word")
    q.add_argument("--model", required=True)
    q.add_argument("--word", required=True)
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--words-per-dim", type=int, default=None)
    _add_common(q)

    q = probe_sub.add_parser("shared-dims", help="dimensions common to a word set")
    q.add_argument("--model", required=True)
    q.add_argument("--words", required=True, help="comma-separated word list")
    q.add_argument("--values", action="store_true",
                   help="export values instead of presence/absence")
    q.add_argument("--out", default=None)
    _add_common(q)

    p = sub.add_parser("intrusion-gen", help="sample word-intrusion tasks")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--model-id", default="")
    p.add_argument("--tasks-out", default=None)
    p.add_argument("--key-out", default=None)
    _add_common(p)

    p = sub.add_parser("intrusion-score", help="score collected annotations")
    p.add_argument("--key", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--agreement", action="store_true",
                   help="add Fleiss' kappa and agreement rates")
    p.add_argument("--out", default=None)
    _add_common(p)

    p = sub.add_parser("fetch-datasets", help="download benchmark data")
    p.add_argument("--dest", default="data")
    p.add_argument("--names", default=None,
                   help=f"comma-separated subset of: {', '.join(DATASET_NAMES)}")
    p.add_argument("--manifest", default=None, help="JSON manifest with mirrors/hashes")
    _add_common(p)

    p = sub.add_parser("prep-dataset", help="convert a raw download")
    p.add_argument("--name", required=True, choices=("cora", "citeseer", "email-eu"))
    p.add_argument("--source", required=True, help="archive or directory")
    p.add_argument("--dest", default="data")
    _add_common(p)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        cfg = _run_config(args)
        command = args.command
        if command == "build-graph":
            return _cmd_build_graph(args, cfg)
        if command == "build-cooc":
            return _cmd_build_cooc(args, cfg)
        if command == "louvain":
            return _cmd_louvain(args, cfg)
        if command == "embed-nr":
            return _cmd_embed(args, cfg, "nr")
        if command == "embed-mf":
            return _cmd_embed(args, cfg, "mf")
        if command == "eval":
            task = args.task
            if task == "linkpred":
                return _cmd_eval_linkpred(args, cfg)
            if task in ("degree", "clustcoef", "pagerank"):
                return _cmd_eval_regression(args, cfg, task)
            if task == "spectral":
                return _cmd_eval_spectral(args, cfg)
            if task == "classify":
                return _cmd_eval_classify(args, cfg)
            if task == "similarity":
                return _cmd_eval_similarity(args, cfg)
            if task == "categorize":
                return _cmd_eval_categorize(args, cfg)
            if task == "stability":
                return _cmd_eval_stability(args, cfg)
            if task == "varnn":
                return _cmd_eval_varnn(args, cfg)
        if command == "probe":
            task = args.task
            if task == "top-words":
                return _cmd_probe_top_words(args, cfg)
            if task == "word-dims":
                return _cmd_probe_word_dims(args, cfg)
            if task == "shared-dims":
                return _cmd_probe_shared_dims(args, cfg)
        if command == "intrusion-gen":
            return _cmd_intrusion_gen(args, cfg)
        if command == "intrusion-score":
            return _cmd_intrusion_score(args, cfg)
        if command == "fetch-datasets":
            return _cmd_fetch_datasets(args, cfg)
        if command == "prep-dataset":
            return _cmd_prep_dataset(args, cfg)
        raise ValidationError(f"unhandled command {command!r}")
    except SinrError as exc:
        print(f"sinr: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sinr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
