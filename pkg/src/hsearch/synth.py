"""Seeded generator for a synthetic incident-report collection.

The generator plants every structure the rest of the pipeline is tested
against and records the ground truth in a manifest:

- 20 multiword entity surfaces across four categories, each the target of
  one query. Relevant documents carry the surface as a contiguous mention
  (twice for grade 2, once for grade 1); distractor documents contain all
  the surface words, each twice, but never adjacent, so word-level BM25
  ranks them high while the entity route ignores them.
- Distractor documents are kept short and mention-bearing documents long,
  so length normalization keeps distractors on top of the word-mode ranking.
- Collocation pairs whose members never share a sentence but draw their
  contexts from the same private topic pool, giving them high embedding
  similarity against a random-pair baseline.
- A "slipped" sub-collection carrying fixed high-frequency phrases for the
  word-cloud fixture.
- Four assessors: one uses the planted grades verbatim, the others apply
  small fixed perturbations so agreement statistics are non-degenerate.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .annotations import Gazetteer, tag_with_gazetteer
from .corpus import Corpus, build_document
from .evaluation import Judgment, write_qrels

ASSESSORS = ("a1", "a2", "a3", "a4")

QUERY_TARGETS: tuple[tuple[str, str], ...] = (
    ("Equipment", "stanley knife blade"),
    ("Equipment", "angle grinder"),
    ("Equipment", "circular saw bench"),
    ("Equipment", "mobile scaffold tower"),
    ("Equipment", "chain hoist"),
    ("Hazard", "wet floor"),
    ("Hazard", "loose paving slab"),
    ("Hazard", "trailing cable"),
    ("Hazard", "unguarded machine edge"),
    ("Hazard", "leaking gas valve"),
    ("HarmfulConsequence", "deep laceration"),
    ("HarmfulConsequence", "fractured wrist"),
    ("HarmfulConsequence", "chemical burn"),
    ("HarmfulConsequence", "crush injury"),
    ("HarmfulConsequence", "sprained ankle"),
    ("ConstructionActivity", "roof sheeting"),
    ("ConstructionActivity", "steel erection"),
    ("ConstructionActivity", "cable pulling"),
    ("ConstructionActivity", "ground excavation"),
    ("ConstructionActivity", "wall chasing"),
)

EXTRA_ENTITIES: tuple[tuple[str, str], ...] = (
    ("ladder", "Equipment"),
    ("spillage", "Hazard"),
    ("night shift", "ProjectAttribute"),
)

COLLOCATION_PAIRS: tuple[tuple[tuple[str, str], tuple[str, ...]], ...] = (
    (("forklift", "telehandler"), ("reversing", "pallet", "banksman", "depot")),
    (("goggles", "visor"), ("polishing", "sparks", "grit", "buffing")),
    (("walkway", "gangway"), ("pedestrian", "painted", "crossing", "kerb")),
    (("solvent", "thinner"), ("vapour", "bund", "decanting", "canister")),
    (("winch", "capstan"), ("mooring", "drum", "tension", "rope")),
)

SLIPPED_PHRASES = ("risk assessment", "manual handling")

_MENTION_SENTENCES = {
    "Equipment": ("The task involved a {s} from the tool store.",
                  "The {s} was quarantined for inspection afterwards."),
    "Hazard": ("The area presented a {s} beside the access route.",
               "The {s} was signed and barriered off immediately."),
    "HarmfulConsequence": ("The operative sustained a {s} in the event.",
                           "Treatment for the {s} was given on site."),
    "ConstructionActivity": ("The crew was engaged in {s} that morning.",
                             "All {s} was suspended pending the review."),
}

_DAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday")
_PLACES = ("assembly hall", "loading dock", "workshop", "stores annexe",
           "packing line", "boiler house", "maintenance bay", "goods entrance")
_OPENINGS = (
    "On {day} morning an operative reported an incident at the {place}.",
    "The duty supervisor logged a report from the {place} on {day}.",
    "An event occurred during the early rotation at the {place}.",
)
_MIDDLES = (
    "Witness statements were collected by the safety officer.",
    "The area was inspected and housekeeping was improved.",
    "Photographs of the scene were attached to the file.",
    "A toolbox talk was delivered to the crew the next day.",
    "The equipment register was updated after the inspection.",
)
_CLOSINGS = (
    "No further action was required.",
    "The report was closed following a management review.",
    "Corrective actions were assigned with a two week deadline.",
    "The operative returned to normal duties.",
)
_SLIP_PLACES = ("stair landing", "access ramp", "canteen steps", "corridor")
_SCATTER_NOUNS = ("log", "file", "permit", "ticket")
_EXTRA_SENTENCES = (
    ("A ladder was left across the corridor and removed.", 0.15),
    ("The spillage was cleaned promptly by the crew.", 0.10),
    ("The work took place on a night shift rota.", 0.10),
)


class SynthError(Exception):
    """The generated collection violated one of its own guarantees."""


@dataclass(frozen=True)
class SynthConfig:
    n_docs: int = 3000
    seed: int = 7
    rel2_per_query: int = 4
    rel1_per_query: int = 6
    distractors_per_query: int = 8
    slipped_docs: int = 400
    collocation_docs_per_pair: int = 120

    def __post_init__(self):
        committed = (len(QUERY_TARGETS) * (self.rel2_per_query
                                           + self.rel1_per_query
                                           + self.distractors_per_query)
                     + self.slipped_docs
                     + len(COLLOCATION_PAIRS) * self.collocation_docs_per_pair)
        if committed > self.n_docs:
            raise ValueError(
                f"n_docs={self.n_docs} below committed total {committed}")
        for name in ("rel2_per_query", "rel1_per_query",
                     "distractors_per_query"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class SynthDataset:
    records: list[dict] = field(default_factory=list)
    gazetteer: list[tuple[str, str]] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    judgments: dict[str, list[Judgment]] = field(default_factory=dict)


def _opening(rng: random.Random) -> str:
    return rng.choice(_OPENINGS).format(day=rng.choice(_DAYS),
                                        place=rng.choice(_PLACES))


def _relevant_body(rng, category, surface, mentions) -> str:
    first, second = _MENTION_SENTENCES[category]
    parts = [_opening(rng), first.format(s=surface), rng.choice(_MIDDLES)]
    if mentions == 2:
        parts += [second.format(s=surface), rng.choice(_MIDDLES)]
    parts.append(rng.choice(_CLOSINGS))
    return " ".join(parts)


def _distractor_body(rng, surface) -> str:
    # every surface word twice, one word per short sentence, never adjacent
    words = surface.split()
    parts = []
    for _ in range(2):
        for word in words:
            noun = rng.choice(_SCATTER_NOUNS)
            parts.append(f"The {word} {noun} was signed.")
    return " ".join(parts)


def _slipped_body(rng) -> str:
    parts = [
        f"An operative slipped on the {rng.choice(_SLIP_PLACES)} during the"
        " morning round.",
        "A risk assessment was reviewed following the event.",
        # "for" bounds the phrase so it is never nested in a longer candidate
        "The site arranged refresher training for manual handling.",
        rng.choice(_MIDDLES),
        rng.choice(_CLOSINGS),
    ]
    return " ".join(parts)


def _collocation_sentence(rng, word, topics) -> str:
    p1, p2, p3 = rng.sample(topics, 3)
    return f"The {word} passed the {p1} point and the {p2} sign near the {p3} marker."


def _collocation_body(rng, pair_idx) -> str:
    (word_a, word_b), topics = COLLOCATION_PAIRS[pair_idx]
    parts = [
        _opening(rng),
        _collocation_sentence(rng, word_a, topics),
        rng.choice(_MIDDLES),
        _collocation_sentence(rng, word_b, topics),
        rng.choice(_CLOSINGS),
    ]
    return " ".join(parts)


def _generic_body(rng) -> str:
    middles = rng.sample(_MIDDLES, rng.randint(3, 5))
    parts = [_opening(rng), *middles]
    for sentence, probability in _EXTRA_SENTENCES:
        if rng.random() < probability:
            parts.append(sentence)
    parts.append(rng.choice(_CLOSINGS))
    return " ".join(parts)


def _perturbed_grades(base: dict[str, int], rel2_ids, rel1_ids,
                      distractor_ids, assessor: str,
                      query_index: int) -> dict[str, int]:
    grades = dict(base)
    if assessor == "a2":
        grades[rel2_ids[0]] = 1
        grades[rel1_ids[0]] = 2
    elif assessor == "a3":
        grades[rel2_ids[1]] = 1
    elif assessor == "a4":
        grades[rel1_ids[1]] = 2
        if query_index % 2 == 0:
            grades[distractor_ids[0]] = 1
    return grades


def generate(config: SynthConfig = SynthConfig()) -> SynthDataset:
    rng = random.Random(config.seed)

    plans: list[dict] = []
    for q_idx, (category, surface) in enumerate(QUERY_TARGETS):
        for _ in range(config.rel2_per_query):
            plans.append({"kind": "rel", "q": q_idx, "mentions": 2})
        for _ in range(config.rel1_per_query):
            plans.append({"kind": "rel", "q": q_idx, "mentions": 1})
        for _ in range(config.distractors_per_query):
            plans.append({"kind": "distractor", "q": q_idx})
    plans += [{"kind": "slipped"}] * config.slipped_docs
    for pair_idx in range(len(COLLOCATION_PAIRS)):
        plans += [{"kind": "colloc", "pair": pair_idx}] \
            * config.collocation_docs_per_pair
    plans += [{"kind": "generic"}] * (config.n_docs - len(plans))
    rng.shuffle(plans)

    records: list[dict] = []
    rel_docs: dict[int, dict[str, int]] = {i: {} for i in range(len(QUERY_TARGETS))}
    distractor_docs: dict[int, list[str]] = {i: [] for i in range(len(QUERY_TARGETS))}
    slipped_ids: list[str] = []
    colloc_ids: dict[int, list[str]] = {i: [] for i in range(len(COLLOCATION_PAIRS))}

    for i, plan in enumerate(plans):
        doc_id = f"r{i:04d}"
        kind = plan["kind"]
        if kind == "rel":
            category, surface = QUERY_TARGETS[plan["q"]]
            body = _relevant_body(rng, category, surface, plan["mentions"])
            rel_docs[plan["q"]][doc_id] = plan["mentions"]
        elif kind == "distractor":
            _, surface = QUERY_TARGETS[plan["q"]]
            body = _distractor_body(rng, surface)
            distractor_docs[plan["q"]].append(doc_id)
        elif kind == "slipped":
            body = _slipped_body(rng)
            slipped_ids.append(doc_id)
        elif kind == "colloc":
            body = _collocation_body(rng, plan["pair"])
            colloc_ids[plan["pair"]].append(doc_id)
        else:
            body = _generic_body(rng)
        records.append({"id": doc_id, "title": f"Incident {doc_id}",
                        "text": body})

    gazetteer = [(surface, category) for category, surface in QUERY_TARGETS]
    gazetteer += [(surface, category) for surface, category in EXTRA_ENTITIES]

    queries = []
    judgments: dict[str, list[Judgment]] = {a: [] for a in ASSESSORS}
    for q_idx, (category, surface) in enumerate(QUERY_TARGETS):
        qid = f"q{q_idx + 1:02d}"
        rel2_ids = sorted(d for d, m in rel_docs[q_idx].items() if m == 2)
        rel1_ids = sorted(d for d, m in rel_docs[q_idx].items() if m == 1)
        distractor_ids = sorted(distractor_docs[q_idx])
        base = {d: 2 for d in rel2_ids}
        base.update({d: 1 for d in rel1_ids})
        base.update({d: 0 for d in distractor_ids})
        queries.append({
            "qid": qid, "text": surface, "category": category,
            "surface": surface, "relevance": dict(sorted(base.items())),
            "distractors": distractor_ids,
        })
        for assessor in ASSESSORS:
            grades = _perturbed_grades(base, rel2_ids, rel1_ids,
                                       distractor_ids, assessor, q_idx)
            judgments[assessor] += [
                Judgment(qid, doc_id, grade, assessor)
                for doc_id, grade in sorted(grades.items())
            ]

    entity_docs: dict[str, dict[str, list[str]]] = {}
    for q_idx, (category, surface) in enumerate(QUERY_TARGETS):
        entity_docs.setdefault(category, {})[surface] = \
            sorted(rel_docs[q_idx])

    manifest = {
        "format": "incident-synth/1",
        "seed": config.seed,
        "n_docs": config.n_docs,
        "assessors": list(ASSESSORS),
        "slipped": {"doc_count": len(slipped_ids),
                    "doc_ids": sorted(slipped_ids),
                    "phrases": list(SLIPPED_PHRASES)},
        "collocations": [
            {"pair": list(COLLOCATION_PAIRS[i][0]),
             "topics": list(COLLOCATION_PAIRS[i][1]),
             "doc_ids": sorted(colloc_ids[i])}
            for i in range(len(COLLOCATION_PAIRS))
        ],
        "entity_docs": entity_docs,
        "queries": queries,
    }

    dataset = SynthDataset(records=records, gazetteer=gazetteer,
                           manifest=manifest, judgments=judgments)
    _verify(dataset)
    return dataset


def _verify(dataset: SynthDataset) -> None:
    """Re-derive the planted facts from the rendered text and compare."""
    documents = [build_document(r["id"], r["title"], r["text"])
                 for r in dataset.records]
    corpus = Corpus(documents=documents, metadata={})
    gaz = Gazetteer({phrase: category
                     for phrase, category in dataset.gazetteer})
    mentions = tag_with_gazetteer(corpus, gaz)
    by_surface: dict[tuple[str, str], set[str]] = {}
    for m in mentions:
        by_surface.setdefault((m.category, m.surface), set()).add(m.doc_id)

    for query in dataset.manifest["queries"]:
        planted = {d for d, g in query["relevance"].items() if g > 0}
        found = by_surface.get((query["category"], query["surface"]), set())
        if found != planted:
            raise SynthError(
                f"{query['qid']}: tagged docs {sorted(found ^ planted)} "
                "disagree with the plant list")
        if found & set(query["distractors"]):
            raise SynthError(f"{query['qid']}: distractor carries the surface")

    slipped = {doc.doc_id for doc in documents
               if any(t.normalized == "slipped" for t in doc.tokens)}
    if slipped != set(dataset.manifest["slipped"]["doc_ids"]):
        raise SynthError("slipped doc list disagrees with token scan")


def write_dataset(dataset: SynthDataset, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    corpus_path = out_dir / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for record in dataset.records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    paths["corpus"] = corpus_path

    gazetteer_path = out_dir / "gazetteer.tsv"
    with open(gazetteer_path, "w", encoding="utf-8") as fh:
        for phrase, category in dataset.gazetteer:
            fh.write(f"{phrase}\t{category}\n")
    paths["gazetteer"] = gazetteer_path

    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(dataset.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["manifest"] = manifest_path

    for assessor, judgments in dataset.judgments.items():
        qrels_path = out_dir / f"qrels-{assessor}.txt"
        write_qrels(judgments, qrels_path)
        paths[f"qrels-{assessor}"] = qrels_path
    return paths
