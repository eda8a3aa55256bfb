"""Umbrella command line: one subcommand per pipeline stage.

Artifacts flow between stages as files, so each stage can be run, inspected,
and re-run independently. `serve` reads the same config file as the library.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .annotations import (
    load_annotations,
    load_gazetteer,
    save_annotations,
    tag_with_gazetteer,
)
from .clustering import candidate_labels, select_clusters
from .config import AppConfig, ConfigError, load_config
from .corpus import Corpus, ingest, load_corpus, save_corpus
from .embeddings import TrainingConfig, load_model, save_model, train
from .evaluation import evaluate, report_tsv, save_report
from .index import Query, build_index, export_run, load_index, save_index, search
from .summarizer import SummaryConfig, summarize
from .term_extraction import word_cloud


class CliError(Exception):
    pass


def _load_corpus_arg(path: str) -> Corpus:
    p = Path(path)
    if not p.exists():
        raise CliError(f"corpus not found: {path}")
    if p.suffix == ".jsonl":
        return ingest(p)
    return load_corpus(p)


def _load_mentions(corpus: Corpus, gazetteer_path: str | None,
                   annotations_path: str | None):
    if annotations_path:
        return load_annotations(corpus, annotations_path)
    if gazetteer_path:
        return tag_with_gazetteer(corpus, load_gazetteer(gazetteer_path))
    return []


def _load_or_build_index(corpus, mentions, index_path: str | None):
    if index_path and Path(index_path).exists():
        return load_index(index_path, corpus)
    return build_index(corpus, mentions)


def _parse_pairs(spec: str, option: str) -> dict[str, str]:
    """Parse name=path[,name=path...] option values."""
    pairs: dict[str, str] = {}
    for chunk in spec.split(","):
        name, sep, path = chunk.partition("=")
        if not sep or not name or not path:
            raise CliError(f"{option}: expected name=path, got {chunk!r}")
        if name in pairs:
            raise CliError(f"{option}: duplicate name {name!r}")
        pairs[name] = path
    return pairs


def cmd_ingest(args) -> int:
    corpus = ingest(args.input, args.format)
    save_corpus(corpus, args.out)
    print(f"ingested {len(corpus)} documents -> {args.out}")
    return 0


def cmd_annotate(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    mentions = _load_mentions(corpus, args.gazetteer, args.annotations)
    if not mentions and not args.gazetteer and not args.annotations:
        raise CliError("one of --gazetteer or --annotations is required")
    save_annotations(mentions, args.out)
    print(f"annotated {len(mentions)} mentions -> {args.out}")
    return 0


def cmd_train_embeddings(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    phrases: list[str] = []
    if args.phrases:
        phrases = [line.strip() for line
                   in Path(args.phrases).read_text("utf-8").splitlines()
                   if line.strip()]
    config = TrainingConfig(dimension=args.dimension, window=args.window,
                            negatives=args.negatives, epochs=args.epochs,
                            min_count=args.min_count, seed=args.seed)
    model = train(corpus, phrases, config)
    save_model(model, args.out)
    print(f"trained {len(model.vocabulary)} vectors "
          f"(dimension {model.dimension}) -> {args.out}")
    return 0


def cmd_index(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    mentions = _load_mentions(corpus, args.gazetteer, args.annotations)
    index = build_index(corpus, mentions)
    save_index(index, args.out)
    print(f"indexed {index.n_docs} documents, "
          f"{len(index.word_postings)} word terms, "
          f"{len(index.entity_postings)} entity keys -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve
    config = load_config(args.config) if args.config else load_config()
    overrides = {}
    if args.host is not None:
        overrides["host"] = args.host
    if args.port is not None:
        overrides["port"] = args.port
    if overrides:
        import dataclasses
        config = dataclasses.replace(config, **overrides)
    serve(config)
    return 0


def cmd_search(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    mentions = _load_mentions(corpus, args.gazetteer, args.annotations)
    index = _load_or_build_index(corpus, mentions, args.index)
    query = Query(text=args.query, category=args.category,
                  entity_surface=args.entity, page=args.page,
                  page_size=args.page_size)
    total, hits, _ = search(index, query, args.mode)
    if args.run_out:
        tag = args.tag or args.mode
        export_run(index, [(args.qid, query)], args.mode,
                   depth=args.depth, tag=tag, path=args.run_out)
    if args.json:
        print(json.dumps({
            "total": total,
            "hits": [{"doc_id": h.doc_id, "score": h.score,
                      "snippet": h.snippet} for h in hits],
        }, sort_keys=True))
    else:
        print(f"{total} documents")
        offset = (args.page - 1) * args.page_size
        for rank, hit in enumerate(hits, start=offset + 1):
            print(f"{rank:4d}. {hit.doc_id}  {hit.score:.4f}  {hit.snippet}")
    return 0


def cmd_summarize(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    doc = corpus.get(args.doc_id)
    if doc is None:
        raise CliError(f"unknown document id {args.doc_id!r}")
    mentions = _load_mentions(corpus, args.gazetteer, args.annotations)
    model = load_model(args.model)
    terms = word_cloud(corpus, set(corpus.doc_ids()), args.terms_top_k)
    config = SummaryConfig(summary_size=args.size)
    for sentence in summarize(doc, mentions, terms, model, config):
        print(sentence)
    return 0


def cmd_clusters(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    mentions = _load_mentions(corpus, args.gazetteer, args.annotations)
    index = _load_or_build_index(corpus, mentions, args.index)
    _, _, ranked = search(index, Query(text=args.query, page_size=1),
                          args.mode)
    result_docs = set(ranked)
    if not result_docs:
        raise CliError(f"no documents match {args.query!r}")
    terms = word_cloud(corpus, result_docs, 50)
    candidates = candidate_labels(corpus, result_docs, mentions, terms)
    cluster_set = select_clusters(candidates, result_docs, args.max_clusters,
                                  query=args.query)
    for cluster in cluster_set.clusters:
        print(f"{cluster.label.cluster_id}\t{cluster.size}\t"
              f"{cluster.label.label}")
    print(f"other\t{len(cluster_set.residual)}\t(residual)")
    return 0


def cmd_terms(args) -> int:
    corpus = _load_corpus_arg(args.corpus)
    subset = set(corpus.doc_ids())
    if args.query:
        mentions = _load_mentions(corpus, args.gazetteer, args.annotations)
        index = _load_or_build_index(corpus, mentions, args.index)
        _, _, ranked = search(index, Query(text=args.query, page_size=1),
                              args.mode)
        subset = set(ranked)
        if not subset:
            raise CliError(f"no documents match {args.query!r}")
    for term in word_cloud(corpus, subset, args.top):
        print(f"{term.cvalue:.4f}\t{term.doc_frequency}\t{term.phrase}")
    return 0


def cmd_eval(args) -> int:
    run_paths = _parse_pairs(args.runs, "--runs")
    qrel_paths = _parse_pairs(args.qrels, "--qrels")
    report = evaluate(run_paths, qrel_paths, ndcg_cutoff=args.k_ndcg,
                      p_cutoff=args.k_precision)
    save_report(report, json_path=args.out,
                tsv_path=args.tsv if args.tsv else None)
    print(report_tsv(report), end="")
    return 0


def _add_corpus_options(parser, annotations=True):
    parser.add_argument("--corpus", required=True,
                        help="corpus JSONL or snapshot path")
    parser.add_argument("--gazetteer", help="gazetteer TSV for tagging")
    if annotations:
        parser.add_argument("--annotations",
                            help="standoff annotations JSONL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsearch",
        description="Faceted semantic search over incident reports.")
    parser.add_argument("--version", action="version",
                        version=f"hsearch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read a raw collection, write a snapshot")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("jsonl", "plain_dir"),
                   default="jsonl")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("annotate", help="tag entities, write standoff file")
    _add_corpus_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("train-embeddings", help="train word vectors")
    p.add_argument("--corpus", required=True)
    p.add_argument("--phrases", help="file with one multiword unit per line")
    p.add_argument("--dimension", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("index", help="build and save the inverted index")
    _add_corpus_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--config", help="config JSON path")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("search", help="query an index from the shell")
    _add_corpus_options(p)
    p.add_argument("--index", help="index snapshot (built in memory if absent)")
    p.add_argument("--query", default="")
    p.add_argument("--mode", choices=("word", "entity", "hybrid"),
                   default="hybrid")
    p.add_argument("--category")
    p.add_argument("--entity", help="entity surface filter")
    p.add_argument("--page", type=int, default=1)
    p.add_argument("--page-size", type=int, default=10)
    p.add_argument("--json", action="store_true")
    p.add_argument("--run-out", help="also export a TREC run file")
    p.add_argument("--qid", default="q1", help="query id for the run file")
    p.add_argument("--tag", help="run tag (defaults to the mode)")
    p.add_argument("--depth", type=int, default=100)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("summarize", help="print a document summary")
    _add_corpus_options(p)
    p.add_argument("--model", required=True)
    p.add_argument("--doc-id", required=True)
    p.add_argument("--size", type=int, default=3)
    p.add_argument("--terms-top-k", type=int, default=50)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("clusters", help="cluster a query's result set")
    _add_corpus_options(p)
    p.add_argument("--index")
    p.add_argument("--query", required=True)
    p.add_argument("--mode", choices=("word", "entity", "hybrid"),
                   default="hybrid")
    p.add_argument("--max-clusters", type=int, default=8)
    p.set_defaults(func=cmd_clusters)

    p = sub.add_parser("terms", help="rank terms for the corpus or a query")
    _add_corpus_options(p)
    p.add_argument("--index")
    p.add_argument("--query", default="")
    p.add_argument("--mode", choices=("word", "entity", "hybrid"),
                   default="hybrid")
    p.add_argument("--top", type=int, default=50)
    p.set_defaults(func=cmd_terms)

    p = sub.add_parser("eval", help="score runs against qrels")
    p.add_argument("--runs", required=True,
                   help="system=path[,system=path...]")
    p.add_argument("--qrels", required=True,
                   help="assessor=path[,assessor=path...]")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--tsv", help="also write the TSV table here")
    p.add_argument("--k-ndcg", type=int, default=10)
    p.add_argument("--k-precision", type=int, default=5)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surface pipeline errors without a traceback
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
