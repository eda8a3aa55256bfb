"""Extractive summaries from an entity-enriched sentence graph.

Sentences become nodes carrying mean-pooled vectors of their tokens plus any
entity or term phrase units they contain. Edges hold thresholded cosine
similarity, PageRank ranks the nodes, and MMR picks a diverse subset.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Document
from .embeddings import EmbeddingModel, cosine, phrase_token, sentence_vector


@dataclass(frozen=True)
class SummaryConfig:
    damping: float = 0.85
    pagerank_epsilon: float = 1e-6
    max_iterations: int = 100
    mmr_lambda: float = 0.7
    summary_size: int = 3
    min_doc_sentences: int = 5
    edge_threshold: float = 0.1

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if not 0 <= self.mmr_lambda <= 1:
            raise ValueError("mmr_lambda must lie in [0, 1]")
        if self.summary_size < 1:
            raise ValueError("summary_size must be at least 1")
        if self.pagerank_epsilon <= 0:
            raise ValueError("pagerank_epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.edge_threshold < 0:
            raise ValueError("edge_threshold must be non-negative")


@dataclass(frozen=True)
class SentenceNode:
    sentence_index: int
    vector: np.ndarray
    enriched_units: tuple[str, ...]


@dataclass
class SentenceGraph:
    nodes: list[SentenceNode]
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)


def _contains_run(tokens: list[str], words: tuple[str, ...]) -> bool:
    n = len(words)
    return any(tuple(tokens[i:i + n]) == words
               for i in range(len(tokens) - n + 1))


def _sentence_units(doc: Document, mentions, terms) -> list[tuple[str, ...]]:
    """Per-sentence sorted unique phrase tokens from entity mentions that lie
    inside the sentence span and terms matching a contiguous token run."""
    units: list[set[str]] = [set() for _ in doc.sentences]
    for mention in mentions:
        if mention.doc_id != doc.doc_id:
            continue
        for span in doc.sentences:
            if span.start <= mention.start and mention.end <= span.end:
                units[span.index].add(phrase_token(mention.normalized))
                break
    if terms:
        for span in doc.sentences:
            tokens = [t.normalized for t in doc.sentence_tokens(span.index)]
            for term in terms:
                if _contains_run(tokens, tuple(term.words)):
                    units[span.index].add(phrase_token(term.words))
    return [tuple(sorted(found)) for found in units]


def build_graph(doc: Document, mentions, terms, model: EmbeddingModel,
                config: SummaryConfig = SummaryConfig()) -> SentenceGraph:
    units = _sentence_units(doc, mentions, terms)
    nodes = []
    for span in doc.sentences:
        tokens = [t.normalized for t in doc.sentence_tokens(span.index)]
        vector = sentence_vector(model, tokens, units[span.index])
        nodes.append(SentenceNode(span.index, vector, units[span.index]))

    n = len(nodes)
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            sim = max(0.0, cosine(nodes[i].vector, nodes[j].vector))
            if sim >= config.edge_threshold:
                weights[i, j] = weights[j, i] = sim
    return SentenceGraph(nodes=nodes, weights=weights)


def _weights_of(graph) -> np.ndarray:
    if isinstance(graph, SentenceGraph):
        return graph.weights
    return np.asarray(graph, dtype=np.float64)


def pagerank(graph, config: SummaryConfig = SummaryConfig()) -> list[float]:
    """Weighted PageRank with dangling mass spread uniformly.

    PR(i) = (1-d)/N + d * sum_j (w_ji / sum_k w_jk) * PR(j), iterated from the
    uniform vector until the L1 change drops below pagerank_epsilon.
    """
    weights = _weights_of(graph)
    n = weights.shape[0]
    if n == 0:
        return []
    out_sums = weights.sum(axis=1)
    dangling = out_sums == 0.0
    transition = np.zeros_like(weights)
    live = ~dangling
    transition[live] = weights[live] / out_sums[live, None]

    d = config.damping
    scores = np.full(n, 1.0 / n)
    for _ in range(config.max_iterations):
        spread = scores[dangling].sum() / n
        fresh = (1.0 - d) / n + d * (transition.T @ scores + spread)
        if np.abs(fresh - scores).sum() < config.pagerank_epsilon:
            scores = fresh
            break
        scores = fresh
    return [float(s) for s in scores]


def mmr_select(candidates, graph, config: SummaryConfig = SummaryConfig()) -> list[int]:
    """Greedy maximum-marginal-relevance pick over ranked candidates.

    Objective at each step: lambda * rel(s) - (1-lambda) * max similarity to
    the already-selected set; ties go to the smaller sentence index.
    """
    weights = _weights_of(graph)
    lam = config.mmr_lambda
    relevance = dict(candidates)
    pool = sorted(relevance)
    selected: list[int] = []
    limit = min(config.summary_size, len(pool))
    while len(selected) < limit:
        best_index = None
        best_score = None
        for idx in pool:
            if idx in selected:
                continue
            penalty = max((weights[idx, t] for t in selected), default=0.0)
            score = lam * relevance[idx] - (1.0 - lam) * penalty
            if best_score is None or score > best_score:
                best_index, best_score = idx, score
        selected.append(best_index)
    return selected


def summarize(doc: Document, mentions, terms, model: EmbeddingModel,
              config: SummaryConfig = SummaryConfig()) -> list[str]:
    """Extract up to summary_size sentences, emitted in document order.

    Documents shorter than min_doc_sentences come back whole.
    """
    texts = [doc.sentence_text(span.index) for span in doc.sentences]
    if len(texts) < config.min_doc_sentences:
        return texts
    graph = build_graph(doc, mentions, terms, model, config)
    scores = pagerank(graph, config)
    ranked = sorted(((i, scores[i]) for i in range(len(scores))),
                    key=lambda pair: (-pair[1], pair[0]))
    chosen = mmr_select(ranked, graph, config)
    return [texts[i] for i in sorted(chosen)]
