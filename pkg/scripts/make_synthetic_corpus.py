#!/usr/bin/env python3
"""Generate the synthetic incident collection and its ground-truth manifest.

Writes corpus.jsonl, gazetteer.tsv, manifest.json, and one qrels file per
assessor into the output directory. The manifest records everything the
generator planted (entity documents, query suite, collocation pairs, the
"slipped" sub-collection), so downstream checks can use it as an oracle.
"""
from __future__ import annotations

import argparse
import sys

from hsearch.synth import SynthConfig, generate, write_dataset


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--docs", type=int, default=3000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--slipped", type=int, default=400,
                        help="documents in the slipped sub-collection")
    parser.add_argument("--colloc-per-pair", type=int, default=120,
                        help="documents carrying each collocation pair")
    args = parser.parse_args(argv)

    try:
        config = SynthConfig(n_docs=args.docs, seed=args.seed,
                             slipped_docs=args.slipped,
                             collocation_docs_per_pair=args.colloc_per_pair)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    dataset = generate(config)
    paths = write_dataset(dataset, args.out)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
