"""Search-specific descriptive clustering of a result set.

Labels are entity surfaces and high-C-value terms found in the results. A
greedy pass balances fresh coverage against overlap with already-covered
documents, stopping at a threshold that scales with result-set size, so the
number of clusters tunes itself per query. Documents keep a single cluster
(the earliest selected label containing them); everything else lands in the
residual bucket.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

from .corpus import Corpus

RESIDUAL_CLUSTER_ID = "other"
DEFAULT_MIN_SUPPORT = 3
DEFAULT_ALPHA = 0.5
DEFAULT_MAX_CLUSTERS = 8
TOP_TERMS = 50


class ClusteringError(Exception):
    pass


class UnknownClusterId(ClusteringError):
    pass


@dataclass(frozen=True)
class ClusterLabel:
    label: str
    cluster_id: str


@dataclass(frozen=True)
class Cluster:
    label: ClusterLabel
    members: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusterSet:
    query: str
    clusters: tuple[Cluster, ...]
    residual: tuple[str, ...]

    def members_of(self, cluster_id: str) -> tuple[str, ...]:
        if cluster_id == RESIDUAL_CLUSTER_ID:
            return self.residual
        for cluster in self.clusters:
            if cluster.label.cluster_id == cluster_id:
                return cluster.members
        raise UnknownClusterId(cluster_id)


def cluster_id_for(query: str, label: str) -> str:
    digest = hashlib.sha1(f"{query}\x1f{label}".encode("utf-8")).hexdigest()
    return digest[:12]


def _contains_run(tokens: list[str], words: tuple[str, ...]) -> bool:
    n = len(words)
    return any(tuple(tokens[i:i + n]) == words
               for i in range(len(tokens) - n + 1))


def candidate_labels(corpus: Corpus, result_docs, mentions, terms,
                     min_support: int = DEFAULT_MIN_SUPPORT,
                     top_terms: int = TOP_TERMS) -> list[tuple[str, frozenset[str]]]:
    """Label candidates with their exact containing-document sets.

    Sources: normalized entity surfaces mentioned in the result docs, plus
    the strongest top_terms extracted terms matched as contiguous token runs.
    Candidates supported by fewer than min_support documents are dropped.
    """
    result_docs = set(result_docs)
    doc_sets: dict[str, set[str]] = {}
    for mention in mentions:
        if mention.doc_id in result_docs:
            doc_sets.setdefault(mention.normalized, set()).add(mention.doc_id)

    term_words = [tuple(t.words) for t in terms[:top_terms]]
    if term_words:
        for doc_id in result_docs:
            tokens = [t.normalized for t in corpus.get(doc_id).tokens]
            for words in term_words:
                if _contains_run(tokens, words):
                    doc_sets.setdefault(" ".join(words), set()).add(doc_id)

    kept = [(phrase, frozenset(docs)) for phrase, docs in doc_sets.items()
            if len(docs) >= min_support]
    kept.sort(key=lambda pair: (-len(pair[1]), pair[0]))
    return kept


def select_clusters(candidates, result_docs, max_clusters: int = DEFAULT_MAX_CLUSTERS,
                    *, query: str = "", min_support: int = DEFAULT_MIN_SUPPORT,
                    alpha: float = DEFAULT_ALPHA) -> ClusterSet:
    """Greedy label selection over the candidate pool.

    gain(label) = |uncovered docs with label| - alpha * |covered docs with
    label|; selection stops when the best gain drops below theta =
    max(min_support, ceil(0.02 * |result set|)) or max_clusters is reached.
    Ties prefer larger doc-sets, then lexicographic labels.
    """
    result_docs = set(result_docs)
    theta = max(min_support, math.ceil(0.02 * len(result_docs)))
    pool = {phrase: set(docs) & result_docs for phrase, docs in candidates}

    covered: set[str] = set()
    selection: list[tuple[str, set[str]]] = []
    while pool and len(selection) < max_clusters:
        best = None
        for phrase in sorted(pool):
            docs = pool[phrase]
            gain = len(docs - covered) - alpha * len(docs & covered)
            key = (-gain, -len(docs), phrase)
            if best is None or key < best[0]:
                best = (key, phrase, docs, gain)
        if best[3] < theta:
            break
        _, phrase, docs, _ = best
        selection.append((phrase, docs))
        covered |= docs
        del pool[phrase]

    assigned: dict[str, str] = {}
    for phrase, docs in selection:
        for doc_id in docs:
            assigned.setdefault(doc_id, phrase)

    clusters = []
    for phrase, docs in selection:
        members = tuple(sorted(d for d in docs if assigned[d] == phrase))
        clusters.append(Cluster(
            label=ClusterLabel(phrase, cluster_id_for(query, phrase)),
            members=members,
        ))
    residual = tuple(sorted(result_docs - set(assigned)))
    return ClusterSet(query=query, clusters=tuple(clusters), residual=residual)


def filter_by_cluster(ranked_docs, cluster_set: ClusterSet,
                      cluster_id: str) -> list[str]:
    """Restrict a ranking to one cluster, preserving the original order."""
    members = set(cluster_set.members_of(cluster_id))
    return [doc_id for doc_id in ranked_docs if doc_id in members]
