"""Typed entity mentions over documents.

Mentions arrive either from standoff annotation files (the drop-in point for
an external recognizer's output) or from a gazetteer tagger that longest-
matches phrase entries against the normalized token stream. Both paths yield
the same validated EntityMention records, so downstream consumers never care
which produced them.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, Document, tokenize


class AnnotationError(Exception):
    pass


class UnknownDocId(AnnotationError):
    pass


class OffsetOutOfBounds(AnnotationError):
    pass


class UnknownCategory(AnnotationError):
    pass


class OverlapConflict(AnnotationError):
    pass


@dataclass(frozen=True)
class EntityCategory:
    name: str
    display_color: str


DEFAULT_CATEGORIES: tuple[EntityCategory, ...] = (
    EntityCategory("Hazard", "#d62728"),
    EntityCategory("HarmfulConsequence", "#9467bd"),
    EntityCategory("ConstructionActivity", "#1f77b4"),
    EntityCategory("ProjectAttribute", "#2ca02c"),
    EntityCategory("Equipment", "#ff7f0e"),
    EntityCategory("Other", "#7f7f7f"),
)

DEFAULT_CATEGORY_NAMES = frozenset(c.name for c in DEFAULT_CATEGORIES)


def category_color(name: str,
                   categories: tuple[EntityCategory, ...] = DEFAULT_CATEGORIES) -> str:
    for cat in categories:
        if cat.name == name:
            return cat.display_color
    return "#7f7f7f"


def normalize_surface(surface: str) -> str:
    return " ".join(surface.lower().split())


@dataclass(frozen=True)
class EntityMention:
    doc_id: str
    category: str
    start: int
    end: int
    surface: str
    normalized: str


@dataclass(frozen=True)
class EntityAggregate:
    surface: str
    category: str
    mention_count: int
    doc_count: int


class Gazetteer:
    """Phrase -> category table with longest-match priority.

    Entries are stored under their normalized form; a phrase mapping to two
    different categories is rejected so matching stays well-defined.
    """

    def __init__(self, entries: dict[str, str] | None = None):
        self.entries: dict[str, str] = {}
        self._by_tokens: dict[tuple[str, ...], str] = {}
        self.max_tokens = 0
        for phrase, category in (entries or {}).items():
            self.add(phrase, category)

    def add(self, phrase: str, category: str) -> None:
        normalized = normalize_surface(phrase)
        if not normalized:
            raise ValueError("gazetteer phrase must be non-empty")
        existing = self.entries.get(normalized)
        if existing is not None and existing != category:
            raise ValueError(
                f"phrase {normalized!r} maps to both {existing!r} and {category!r}"
            )
        words = tuple(t.normalized for t in tokenize(normalized))
        if not words:
            raise ValueError(f"gazetteer phrase {phrase!r} has no tokens")
        self.entries[normalized] = category
        self._by_tokens[words] = category
        self.max_tokens = max(self.max_tokens, len(words))

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, words: tuple[str, ...]) -> str | None:
        return self._by_tokens.get(words)


def load_gazetteer(path: str | Path,
                   categories: frozenset[str] = DEFAULT_CATEGORY_NAMES) -> Gazetteer:
    """Read a TSV of phrase<TAB>category lines."""
    gaz = Gazetteer({})
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}: line {line_no}: expected phrase<TAB>category")
            phrase, category = parts
            if category not in categories:
                raise UnknownCategory(f"{path}: line {line_no}: {category!r}")
            gaz.add(phrase, category)
    return gaz


def load_annotations(corpus: Corpus, path: str | Path,
                     categories: frozenset[str] = DEFAULT_CATEGORY_NAMES,
                     ) -> list[EntityMention]:
    """Load standoff mentions and validate every one against the corpus.

    Offsets must slice real document text; overlapping mentions within one
    document are rejected outright.
    """
    raw: list[tuple[str, str, int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            for key in ("doc_id", "category", "start", "end"):
                if key not in record:
                    raise AnnotationError(f"line {line_no}: missing {key!r}")
            raw.append((record["doc_id"], record["category"],
                        int(record["start"]), int(record["end"])))

    mentions: list[EntityMention] = []
    per_doc: dict[str, list[tuple[int, int]]] = {}
    for doc_id, category, start, end in raw:
        doc = corpus.get(doc_id)
        if doc is None:
            raise UnknownDocId(doc_id)
        if category not in categories:
            raise UnknownCategory(category)
        if not (0 <= start < end <= len(doc.body)):
            raise OffsetOutOfBounds(
                f"{doc_id}: [{start},{end}) outside text of length {len(doc.body)}"
            )
        for other_start, other_end in per_doc.get(doc_id, ()):
            if start < other_end and other_start < end:
                raise OverlapConflict(
                    f"{doc_id}: [{start},{end}) overlaps [{other_start},{other_end})"
                )
        per_doc.setdefault(doc_id, []).append((start, end))
        surface = doc.body[start:end]
        mentions.append(EntityMention(
            doc_id=doc_id, category=category, start=start, end=end,
            surface=surface, normalized=normalize_surface(surface),
        ))
    mentions.sort(key=lambda m: (m.doc_id, m.start))
    return mentions


def tag_with_gazetteer(corpus: Corpus, gazetteer: Gazetteer) -> list[EntityMention]:
    """Longest-match, left-to-right, non-overlapping tagging over tokens."""
    if len(gazetteer) == 0:
        raise ValueError("gazetteer is empty")
    mentions: list[EntityMention] = []
    for doc in corpus.documents:
        mentions.extend(_tag_document(doc, gazetteer))
    return mentions


def _tag_document(doc: Document, gazetteer: Gazetteer) -> list[EntityMention]:
    tokens = doc.tokens
    words = [t.normalized for t in tokens]
    mentions = []
    i = 0
    while i < len(tokens):
        matched = 0
        category = None
        for n in range(min(gazetteer.max_tokens, len(tokens) - i), 0, -1):
            category = gazetteer.lookup(tuple(words[i:i + n]))
            if category is not None:
                matched = n
                break
        if matched:
            start, end = tokens[i].start, tokens[i + matched - 1].end
            surface = doc.body[start:end]
            mentions.append(EntityMention(
                doc_id=doc.doc_id, category=category, start=start, end=end,
                surface=surface, normalized=normalize_surface(surface),
            ))
            i += matched
        else:
            i += 1
    return mentions


def entity_aggregate(mentions: list[EntityMention], doc_ids: set[str],
                     category: str | None = None) -> list[EntityAggregate]:
    """Group mentions by (normalized surface, category) within a doc set.

    Sorted by document count, then mention count, both descending, then
    lexicographically — the order facet panes display.
    """
    counts: dict[tuple[str, str], int] = {}
    docs: dict[tuple[str, str], set[str]] = {}
    for m in mentions:
        if m.doc_id not in doc_ids:
            continue
        if category is not None and m.category != category:
            continue
        key = (m.normalized, m.category)
        counts[key] = counts.get(key, 0) + 1
        docs.setdefault(key, set()).add(m.doc_id)
    rows = [
        EntityAggregate(surface=surface, category=cat,
                        mention_count=counts[(surface, cat)],
                        doc_count=len(docs[(surface, cat)]))
        for surface, cat in counts
    ]
    rows.sort(key=lambda r: (-r.doc_count, -r.mention_count, r.surface, r.category))
    return rows


def save_annotations(mentions: list[EntityMention], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in mentions:
            fh.write(json.dumps(
                {"doc_id": m.doc_id, "category": m.category,
                 "start": m.start, "end": m.end},
                sort_keys=True) + "\n")
