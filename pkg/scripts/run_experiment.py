#!/usr/bin/env python3
"""Run the retrieval experiment on the synthetic suite.

Builds the index over the generated collection, exports a word-mode and an
entity-mode run for the 20 planted queries, scores both against the four
assessors, and writes the report (TSV and JSON). Ends with the per-query
comparison between the two modes.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from hsearch.annotations import load_gazetteer, tag_with_gazetteer
from hsearch.corpus import ingest
from hsearch.evaluation import evaluate, report_tsv, save_report
from hsearch.index import Query, build_index, export_run
from hsearch.synth import ASSESSORS, SynthConfig, generate, write_dataset


def ensure_dataset(data_dir: Path, docs: int, seed: int) -> None:
    if (data_dir / "corpus.jsonl").exists():
        return
    print(f"generating {docs} documents into {data_dir} ...")
    write_dataset(generate(SynthConfig(n_docs=docs, seed=seed)), data_dir)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="data/synth",
                        help="dataset directory (generated when absent)")
    parser.add_argument("--out", default=None,
                        help="output directory (default <data>/experiment)")
    parser.add_argument("--docs", type=int, default=3000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--depth", type=int, default=100)
    args = parser.parse_args(argv)

    data_dir = Path(args.data)
    out_dir = Path(args.out) if args.out else data_dir / "experiment"
    out_dir.mkdir(parents=True, exist_ok=True)
    ensure_dataset(data_dir, args.docs, args.seed)

    corpus = ingest(data_dir / "corpus.jsonl")
    gazetteer = load_gazetteer(data_dir / "gazetteer.tsv")
    mentions = tag_with_gazetteer(corpus, gazetteer)
    started = time.monotonic()
    index = build_index(corpus, mentions)
    print(f"indexed {index.n_docs} documents in "
          f"{time.monotonic() - started:.2f}s "
          f"({len(mentions)} mentions)")

    manifest = json.loads((data_dir / "manifest.json").read_text("utf-8"))
    queries = [(q["qid"], Query(text=q["text"], page_size=args.depth))
               for q in manifest["queries"]]
    run_paths = {}
    for mode in ("word", "entity"):
        path = out_dir / f"{mode}.run"
        export_run(index, queries, mode, depth=args.depth, tag=mode,
                   path=path)
        run_paths[mode] = path

    qrel_paths = {assessor: data_dir / f"qrels-{assessor}.txt"
                  for assessor in ASSESSORS}
    report = evaluate(run_paths, qrel_paths)
    save_report(report, json_path=out_dir / "report.json",
                tsv_path=out_dir / "report.tsv")
    print()
    print(report_tsv(report), end="")
    print()

    wins = 0
    qids = [q["qid"] for q in manifest["queries"]]
    for qid in qids:
        def mean_over_assessors(system: str) -> float:
            values = [report.ndcg_values[(system, assessor)].get(qid)
                      for assessor in ASSESSORS]
            defined = [v for v in values if v is not None]
            return sum(defined) / len(defined)
        if mean_over_assessors("entity") > mean_over_assessors("word"):
            wins += 1
    print(f"entity mode beats word mode on nDCG for {wins}/{len(qids)} queries")
    print(f"report: {out_dir / 'report.tsv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
