"""In-process inverted index with word, entity, and hybrid BM25 ranking.

Words are indexed from the token stream; entity mentions are indexed as
first-class postings keyed by (category, normalized surface). Queries are
linked to entities by longest match against the index's own surface table,
so entity retrieval needs no external query-side tagger.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus import Corpus, content_hash, tokenize

BM25_K1 = 1.2
BM25_B = 0.75
WORD_WEIGHT = 1.0
ENTITY_WEIGHT = 1.5
SNIPPET_LIMIT = 240
DEFAULT_PAGE_SIZE = 10
RUN_DEPTH = 100
INDEX_FORMAT = "incident-index/1"

MODES = ("word", "entity", "hybrid")


class SearchError(Exception):
    pass


class UnknownDoc(SearchError):
    pass


class InvalidPage(SearchError):
    pass


class EmptyQuery(SearchError):
    pass


class UnknownMode(SearchError):
    pass


class MalformedIndexFile(SearchError):
    pass


class CorpusMismatch(SearchError):
    """Index snapshot was built from a different corpus snapshot."""


@dataclass(frozen=True)
class Posting:
    doc_id: str
    positions: tuple[int, ...]

    @property
    def tf(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class EntitySpan:
    category: str
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class Query:
    text: str = ""
    cluster_id: str | None = None
    category: str | None = None
    entity_surface: str | None = None
    page: int = 1
    page_size: int = DEFAULT_PAGE_SIZE

    def has_filters(self) -> bool:
        return any(v is not None
                   for v in (self.cluster_id, self.category, self.entity_surface))


@dataclass(frozen=True)
class SearchHit:
    doc_id: str
    score: float
    snippet: str
    highlights: tuple[tuple[int, int], ...]
    matched_entities: tuple[tuple[str, str], ...]


@dataclass
class InvertedIndex:
    corpus: Corpus
    word_postings: dict[str, tuple[Posting, ...]]
    entity_postings: dict[tuple[str, str], tuple[Posting, ...]]
    entity_spans: dict[str, tuple[EntitySpan, ...]]
    doc_lengths: dict[str, int]
    avg_doc_length: float
    n_docs: int
    word_weight: float = WORD_WEIGHT
    entity_weight: float = ENTITY_WEIGHT
    k1: float = BM25_K1
    b: float = BM25_B
    _surface_lookup: dict[tuple[str, ...], tuple[tuple[str, str], ...]] = field(
        default=None, repr=False)
    _max_surface_tokens: int = 0

    def __post_init__(self):
        if self._surface_lookup is None:
            lookup: dict[tuple[str, ...], list[tuple[str, str]]] = {}
            for category, surface in self.entity_postings:
                words = tuple(surface.split())
                lookup.setdefault(words, []).append((category, surface))
            self._surface_lookup = {w: tuple(sorted(keys))
                                    for w, keys in lookup.items()}
            self._max_surface_tokens = max(
                (len(w) for w in self._surface_lookup), default=0)

    def link_entities(self, text: str) -> list[tuple[str, str]]:
        """Longest-match query tokens against indexed entity surfaces."""
        words = [t.normalized for t in tokenize(text)]
        linked: list[tuple[str, str]] = []
        i = 0
        while i < len(words):
            hit = None
            for n in range(min(self._max_surface_tokens, len(words) - i), 0, -1):
                hit = self._surface_lookup.get(tuple(words[i:i + n]))
                if hit is not None:
                    linked.extend(k for k in hit if k not in linked)
                    i += n
                    break
            if hit is None:
                i += 1
        return linked


def query_terms(text: str) -> list[str]:
    """Unique normalized tokens in first-appearance order."""
    seen: list[str] = []
    for token in tokenize(text):
        if token.normalized not in seen:
            seen.append(token.normalized)
    return seen


def build_index(corpus: Corpus, mentions=()) -> InvertedIndex:
    word_acc: dict[str, dict[str, list[int]]] = {}
    doc_lengths: dict[str, int] = {}
    for doc in corpus.documents:
        doc_lengths[doc.doc_id] = len(doc.tokens)
        for pos, token in enumerate(doc.tokens):
            word_acc.setdefault(token.normalized, {}) \
                    .setdefault(doc.doc_id, []).append(pos)

    entity_acc: dict[tuple[str, str], dict[str, list[int]]] = {}
    span_acc: dict[str, list[EntitySpan]] = {}
    for mention in mentions:
        doc = corpus.get(mention.doc_id)
        if doc is None:
            raise UnknownDoc(mention.doc_id)
        starts = [t.start for t in doc.tokens]
        pos = max(0, bisect_right(starts, mention.start) - 1)
        key = (mention.category, mention.normalized)
        entity_acc.setdefault(key, {}).setdefault(doc.doc_id, []).append(pos)
        span_acc.setdefault(doc.doc_id, []).append(EntitySpan(
            mention.category, mention.normalized, mention.start, mention.end))

    def freeze(acc):
        return {
            key: tuple(Posting(doc_id, tuple(sorted(positions)))
                       for doc_id, positions in sorted(by_doc.items()))
            for key, by_doc in acc.items()
        }

    n_docs = len(corpus.documents)
    total_length = sum(doc_lengths.values())
    return InvertedIndex(
        corpus=corpus,
        word_postings=freeze(word_acc),
        entity_postings=freeze(entity_acc),
        entity_spans={d: tuple(sorted(spans, key=lambda s: (s.start, s.end)))
                      for d, spans in span_acc.items()},
        doc_lengths=doc_lengths,
        avg_doc_length=total_length / n_docs if n_docs else 0.0,
        n_docs=n_docs,
    )


def _idf(index: InvertedIndex, df: int) -> float:
    return math.log((index.n_docs - df + 0.5) / (df + 0.5) + 1.0)


def _bm25_sum(index: InvertedIndex, postings_map, keys, doc_id: str) -> float:
    dl = index.doc_lengths.get(doc_id)
    if dl is None:
        raise UnknownDoc(doc_id)
    score = 0.0
    for key in keys:
        postings = postings_map.get(key)
        if not postings:
            continue
        tf = 0
        for posting in postings:
            if posting.doc_id == doc_id:
                tf = posting.tf
                break
        if tf == 0:
            continue
        norm = index.k1 * (
            1.0 - index.b + index.b * dl / index.avg_doc_length)
        score += _idf(index, len(postings)) * tf * (index.k1 + 1.0) / (tf + norm)
    return score


def bm25_score(index: InvertedIndex, text: str, doc_id: str,
               mode: str = "word") -> float:
    """BM25 total for one document under the given indexing mode."""
    if mode not in MODES:
        raise UnknownMode(mode)
    if doc_id not in index.doc_lengths:
        raise UnknownDoc(doc_id)
    word_part = _bm25_sum(index, index.word_postings, query_terms(text), doc_id)
    if mode == "word":
        return word_part
    entity_part = _bm25_sum(index, index.entity_postings,
                            index.link_entities(text), doc_id)
    if mode == "entity":
        return entity_part
    return index.word_weight * word_part + index.entity_weight * entity_part


def _entity_filter_docs(index: InvertedIndex, category: str | None,
                        surface: str | None) -> set[str]:
    docs: set[str] = set()
    for (cat, surf), postings in index.entity_postings.items():
        if category is not None and cat != category:
            continue
        if surface is not None and surf != surface:
            continue
        docs.update(p.doc_id for p in postings)
    return docs


def _match_spans(index: InvertedIndex, doc_id: str, terms, linked) -> list[tuple[int, int]]:
    doc = index.corpus.get(doc_id)
    spans = [(t.start, t.end) for t in doc.tokens if t.normalized in terms]
    if linked:
        wanted = set(linked)
        spans += [(s.start, s.end) for s in index.entity_spans.get(doc_id, ())
                  if (s.category, s.surface) in wanted]
    return sorted(set(spans))


def _snippet(index: InvertedIndex, doc_id: str, matches) -> tuple[str, tuple]:
    """Densest run of match spans fitting in SNIPPET_LIMIT characters,
    anchored at a match start; earliest window wins ties."""
    body = index.corpus.get(doc_id).body
    if not matches:
        return body[:SNIPPET_LIMIT], ()
    best_i, best_j = 0, 0
    j = 0
    for i in range(len(matches)):
        if j < i:
            j = i
        while (j + 1 < len(matches)
               and matches[j + 1][1] - matches[i][0] <= SNIPPET_LIMIT):
            j += 1
        if j - i > best_j - best_i:
            best_i, best_j = i, j
    start = matches[best_i][0]
    end = min(len(body), start + SNIPPET_LIMIT)
    text = body[start:end]
    highlights = tuple((s - start, e - start) for s, e in matches
                       if s >= start and e <= end)
    return text, highlights


def search(index: InvertedIndex, query: Query, mode: str = "hybrid",
           cluster_members=None) -> tuple[int, list[SearchHit], list[str]]:
    """Rank, filter, and paginate.

    Returns (total after filtering, requested page of hits, the full ranked
    doc id list for facet computations). cluster_members must be supplied by
    the caller when query.cluster_id is set, since cluster membership is a
    per-query artifact of the clustering stage.
    """
    if mode not in MODES:
        raise UnknownMode(mode)
    if query.page < 1 or query.page_size < 1:
        raise InvalidPage(f"page={query.page} page_size={query.page_size}")
    terms = query_terms(query.text)
    if not terms and not query.has_filters():
        raise EmptyQuery("query text is empty and no filters are set")

    linked = index.link_entities(query.text) if mode in ("entity", "hybrid") else []
    candidates: set[str] = set()
    if mode in ("word", "hybrid"):
        for term in terms:
            candidates.update(p.doc_id for p in index.word_postings.get(term, ()))
    if mode in ("entity", "hybrid"):
        for key in linked:
            candidates.update(p.doc_id for p in index.entity_postings.get(key, ()))
    if not terms:
        candidates = set(index.doc_lengths)

    if query.category is not None or query.entity_surface is not None:
        candidates &= _entity_filter_docs(index, query.category,
                                          query.entity_surface)
    if query.cluster_id is not None:
        candidates &= set(cluster_members or ())

    scored = [(doc_id, bm25_score(index, query.text, doc_id, mode))
              for doc_id in candidates]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    ranked_ids = [doc_id for doc_id, _ in scored]

    total = len(scored)
    lo = (query.page - 1) * query.page_size
    page = scored[lo:lo + query.page_size]

    term_set = set(terms)
    hits = []
    for doc_id, score in page:
        doc_linked = [key for key in linked
                      if any(p.doc_id == doc_id
                             for p in index.entity_postings.get(key, ()))]
        matches = _match_spans(index, doc_id, term_set,
                               doc_linked if mode != "word" else [])
        snippet, highlights = _snippet(index, doc_id, matches)
        hits.append(SearchHit(doc_id=doc_id, score=score, snippet=snippet,
                              highlights=highlights,
                              matched_entities=tuple(doc_linked)))
    return total, hits, ranked_ids


def export_run(index: InvertedIndex, queries, mode: str = "hybrid",
               depth: int = RUN_DEPTH, tag: str = "run",
               path: str | Path | None = None) -> str:
    """TREC run lines for a list of (query_id, Query) pairs."""
    lines = []
    for query_id, query in queries:
        probe = replace(query, page=1, page_size=depth)
        _, hits, _ = search(index, probe, mode)
        for rank, hit in enumerate(hits, start=1):
            lines.append(f"{query_id} Q0 {hit.doc_id} {rank} "
                         f"{repr(hit.score)} {tag}")
    text = "\n".join(lines) + ("\n" if lines else "")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def save_index(index: InvertedIndex, path: str | Path) -> None:
    payload = {
        "format": INDEX_FORMAT,
        "corpus_sha256": content_hash(index.corpus.documents),
        "word_postings": {
            token: [[p.doc_id, list(p.positions)] for p in postings]
            for token, postings in index.word_postings.items()
        },
        "entity_postings": {
            f"{cat}\x1f{surf}": [[p.doc_id, list(p.positions)] for p in postings]
            for (cat, surf), postings in index.entity_postings.items()
        },
        "entity_spans": {
            doc_id: [[s.category, s.surface, s.start, s.end] for s in spans]
            for doc_id, spans in index.entity_spans.items()
        },
        "doc_lengths": index.doc_lengths,
        "n_docs": index.n_docs,
        "weights": [index.word_weight, index.entity_weight],
        "bm25": [index.k1, index.b],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"),
                  ensure_ascii=False)


def load_index(path: str | Path, corpus: Corpus) -> InvertedIndex:
    """Rehydrate a snapshot against the corpus it was built from."""
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedIndexFile(f"{path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != INDEX_FORMAT:
        raise MalformedIndexFile(f"{path}: missing format tag {INDEX_FORMAT!r}")
    expected = payload.get("corpus_sha256", "")
    actual = content_hash(corpus.documents)
    if expected != actual:
        raise CorpusMismatch(f"index built from corpus {expected[:12]}..., "
                             f"given {actual[:12]}...")
    try:
        word_postings = {
            token: tuple(Posting(doc_id, tuple(positions))
                         for doc_id, positions in postings)
            for token, postings in payload["word_postings"].items()
        }
        entity_postings = {}
        for joined, postings in payload["entity_postings"].items():
            cat, surf = joined.split("\x1f", 1)
            entity_postings[(cat, surf)] = tuple(
                Posting(doc_id, tuple(positions))
                for doc_id, positions in postings)
        entity_spans = {
            doc_id: tuple(EntitySpan(*row) for row in spans)
            for doc_id, spans in payload["entity_spans"].items()
        }
        doc_lengths = {d: int(v) for d, v in payload["doc_lengths"].items()}
        n_docs = int(payload["n_docs"])
        word_weight, entity_weight = payload["weights"]
        k1, b = payload["bm25"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedIndexFile(f"{path}: {exc}") from exc
    total_length = sum(doc_lengths.values())
    return InvertedIndex(
        corpus=corpus,
        word_postings=word_postings,
        entity_postings=entity_postings,
        entity_spans=entity_spans,
        doc_lengths=doc_lengths,
        avg_doc_length=total_length / n_docs if n_docs else 0.0,
        n_docs=n_docs,
        word_weight=word_weight,
        entity_weight=entity_weight,
        k1=k1,
        b=b,
    )
