"""Multiword term extraction for the word-cloud facet.

Candidates are contiguous 2..6-token n-grams within a sentence that contain
no stoplist word and no purely numeric token. Termhood is scored with the
C-value measure: frequency weighted by log2 of the term length, discounted
for candidates that mostly occur nested inside longer extracted candidates.
"""
from __future__ import annotations

import hashlib
import math
from collections import OrderedDict
from dataclasses import dataclass

from .corpus import Corpus, Document

MIN_TERM_LEN = 2
MAX_TERM_LEN = 6

DEFAULT_STOPLIST = frozenset("""
a about above after again against all am an and any are as at be because been
before being below between both but by can could did do does done down during
each few for from further had has have having he her here hers him his how i
if in into is it its just me more most my no nor not of off on once only onto
or other our out over own same she should so some such than that the their
them then there these they this those through to too under until up very was
we were what when where which while who whom why will with would you your
""".split())


class EmptySubset(Exception):
    pass


@dataclass(frozen=True)
class CandidateTerm:
    words: tuple[str, ...]
    frequency: int
    nest_parents: frozenset[tuple[str, ...]]
    nested_frequency: int
    doc_frequency: int


@dataclass(frozen=True)
class ScoredTerm:
    words: tuple[str, ...]
    cvalue: float
    doc_frequency: int

    @property
    def phrase(self) -> str:
        return " ".join(self.words)


def _is_numeric(token: str) -> bool:
    return token.replace("-", "").isdigit()


def extract_candidates(docs: list[Document],
                       stoplist: frozenset[str] = DEFAULT_STOPLIST,
                       ) -> list[CandidateTerm]:
    """Collect candidate n-grams with corpus frequencies and nesting links.

    nest_parents holds every longer extracted candidate that contains the
    candidate as a contiguous subsequence. nested_frequency counts the
    candidate's occurrence positions that lie inside at least one longer
    candidate's occurrence; because every all-eligible window is itself a
    candidate, an occurrence is nested exactly when an eligible token
    adjoins it within the sentence.
    """
    freq: dict[tuple[str, ...], int] = {}
    nested: dict[tuple[str, ...], int] = {}
    doc_sets: dict[tuple[str, ...], set[str]] = {}

    for doc in docs:
        by_sentence: dict[int, list[str]] = {}
        for tok in doc.tokens:
            by_sentence.setdefault(tok.sentence_index, []).append(tok.normalized)
        for words in by_sentence.values():
            eligible = [w not in stoplist and not _is_numeric(w) for w in words]
            for n in range(MIN_TERM_LEN, MAX_TERM_LEN + 1):
                for i in range(len(words) - n + 1):
                    if not all(eligible[i:i + n]):
                        continue
                    gram = tuple(words[i:i + n])
                    freq[gram] = freq.get(gram, 0) + 1
                    doc_sets.setdefault(gram, set()).add(doc.doc_id)
                    grows_left = i > 0 and eligible[i - 1]
                    grows_right = i + n < len(words) and eligible[i + n]
                    if n < MAX_TERM_LEN and (grows_left or grows_right):
                        nested[gram] = nested.get(gram, 0) + 1

    parents: dict[tuple[str, ...], set[tuple[str, ...]]] = {g: set() for g in freq}
    for gram in freq:
        for sub_len in range(MIN_TERM_LEN, len(gram)):
            for offset in range(len(gram) - sub_len + 1):
                parents[gram[offset:offset + sub_len]].add(gram)

    return [
        CandidateTerm(words=gram, frequency=freq[gram],
                      nest_parents=frozenset(parents[gram]),
                      nested_frequency=nested.get(gram, 0),
                      doc_frequency=len(doc_sets[gram]))
        for gram in sorted(freq)
    ]


def cvalue_rank(candidates: list[CandidateTerm]) -> list[ScoredTerm]:
    """Score candidates by C-value and return them best-first.

    Non-nested candidate a:  log2(|a|) * f(a).
    Nested candidate a:      log2(|a|) * (f(a) - mean over parents b of f(b)).
    Candidates scoring <= 0 are dropped; ties break by frequency then by
    the words themselves.
    """
    freq = {c.words: c.frequency for c in candidates}
    scored = []
    for cand in candidates:
        length = len(cand.words)
        if cand.nest_parents:
            parent_mean = sum(freq[p] for p in cand.nest_parents) / len(cand.nest_parents)
            cvalue = math.log2(length) * (cand.frequency - parent_mean)
        else:
            cvalue = math.log2(length) * cand.frequency
        if cvalue > 0:
            scored.append((cvalue, cand))
    scored.sort(key=lambda item: (-item[0], -item[1].frequency, item[1].words))
    return [ScoredTerm(words=c.words, cvalue=v, doc_frequency=c.doc_frequency)
            for v, c in scored]


def word_cloud(corpus: Corpus, subset: set[str], top_k: int,
               stoplist: frozenset[str] = DEFAULT_STOPLIST) -> list[ScoredTerm]:
    """Extract and rank terms over a document subset, returning the top_k."""
    if not subset:
        raise EmptySubset("word cloud requested for an empty result set")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    docs = [d for d in corpus.documents if d.doc_id in subset]
    if not docs:
        raise EmptySubset("no subset documents found in corpus")
    return cvalue_rank(extract_candidates(docs, stoplist))[:top_k]


class WordCloudBuilder:
    """word_cloud with a small LRU cache keyed by the subset hash.

    Facet panes re-request the cloud for the same result set as the user
    flips tabs; the cache makes those hits free without affecting results.
    """

    def __init__(self, corpus: Corpus,
                 stoplist: frozenset[str] = DEFAULT_STOPLIST,
                 cache_size: int = 32):
        self.corpus = corpus
        self.stoplist = stoplist
        self.cache_size = cache_size
        self._cache: OrderedDict[tuple[str, int], list[ScoredTerm]] = OrderedDict()

    @staticmethod
    def subset_key(subset: set[str]) -> str:
        digest = hashlib.sha1()
        for doc_id in sorted(subset):
            digest.update(doc_id.encode("utf-8"))
            digest.update(b"\x00")
        return digest.hexdigest()

    def build(self, subset: set[str], top_k: int) -> list[ScoredTerm]:
        key = (self.subset_key(subset), top_k)
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        terms = word_cloud(self.corpus, subset, top_k, self.stoplist)
        self._cache[key] = terms
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return terms
