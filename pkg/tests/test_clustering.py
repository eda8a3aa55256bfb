"""Tests for descriptive clustering and cluster filtering."""
from __future__ import annotations

import math
import random

import pytest

from hsearch.annotations import EntityMention
from hsearch.clustering import (
    RESIDUAL_CLUSTER_ID,
    ClusterSet,
    UnknownClusterId,
    candidate_labels,
    cluster_id_for,
    filter_by_cluster,
    select_clusters,
)
from hsearch.term_extraction import ScoredTerm

from conftest import make_corpus


def mention(doc_id, phrase, category="Hazard"):
    return EntityMention(doc_id, category, 0, len(phrase), phrase, phrase)


class TestCandidateLabels:
    def test_entity_surface_retained_with_its_doc_set(self):
        corpus = make_corpus([f"report {i} text" for i in range(10)])
        docs = set(corpus.doc_ids())
        mentions = [mention(f"d{i}", "wet floor") for i in range(1, 5)]
        labels = candidate_labels(corpus, docs, mentions, [])
        assert labels == [("wet floor", frozenset({"d1", "d2", "d3", "d4"}))]

    def test_below_min_support_dropped(self):
        corpus = make_corpus(["a b", "c d", "e f"])
        docs = set(corpus.doc_ids())
        mentions = [mention("d1", "scaffold"), mention("d2", "scaffold")]
        assert candidate_labels(corpus, docs, mentions, []) == []
        kept = candidate_labels(corpus, docs, mentions, [], min_support=2)
        assert kept[0][0] == "scaffold"

    def test_term_doc_sets_match_containment_scan(self):
        texts = [
            "the worker slipped on the wet floor",
            "a wet floor sign was missing",
            "wet floor near the loading bay",
            "the scaffold was wet but the floor dry",
            "dry corridor with no issues",
        ]
        corpus = make_corpus(texts)
        docs = set(corpus.doc_ids())
        term = ScoredTerm(("wet", "floor"), cvalue=3.0, doc_frequency=3)
        labels = candidate_labels(corpus, docs, [], [term])
        expected = set()
        for doc_id in docs:
            tokens = [t.normalized for t in corpus.get(doc_id).tokens]
            if any(tokens[i:i + 2] == ["wet", "floor"]
                   for i in range(len(tokens) - 1)):
                expected.add(doc_id)
        assert labels == [("wet floor", frozenset(expected))]
        assert expected == {"d0", "d1", "d2"}

    def test_entity_and_term_with_same_phrase_union(self):
        corpus = make_corpus(["wet floor here", "dry here", "dry too", "dry also"])
        docs = set(corpus.doc_ids())
        mentions = [mention(d, "wet floor") for d in ("d1", "d2", "d3")]
        term = ScoredTerm(("wet", "floor"), cvalue=2.0, doc_frequency=1)
        labels = candidate_labels(corpus, docs, mentions, [term])
        assert labels == [("wet floor", frozenset({"d0", "d1", "d2", "d3"}))]

    def test_only_top_terms_are_scanned(self):
        corpus = make_corpus(["alpha beta"] * 3)
        docs = set(corpus.doc_ids())
        filler = [ScoredTerm((f"zz{i}", "qq"), cvalue=9.0, doc_frequency=1)
                  for i in range(50)]
        real = ScoredTerm(("alpha", "beta"), cvalue=1.0, doc_frequency=3)
        assert candidate_labels(corpus, docs, [], filler + [real]) == []
        labels = candidate_labels(corpus, docs, [], [real] + filler)
        assert labels[0][0] == "alpha beta"

    def test_results_sorted_by_support_then_label(self):
        corpus = make_corpus([f"doc {i}" for i in range(6)])
        docs = set(corpus.doc_ids())
        mentions = (
            [mention(f"d{i}", "ladder") for i in range(1, 5)]
            + [mention(f"d{i}", "acid spill") for i in range(1, 4)]
            + [mention(f"d{i}", "burn") for i in range(2, 5)]
        )
        labels = candidate_labels(corpus, docs, mentions, [])
        assert [l for l, _ in labels] == ["ladder", "acid spill", "burn"]


class TestSelectClusters:
    def test_two_disjoint_covering_labels(self):
        docs = {f"d{i}" for i in range(6)}
        candidates = [
            ("fall", frozenset({"d0", "d1", "d2"})),
            ("spill", frozenset({"d3", "d4", "d5"})),
        ]
        result = select_clusters(candidates, docs, query="q")
        assert [c.label.label for c in result.clusters] == ["fall", "spill"]
        assert result.residual == ()
        assert result.clusters[0].members == ("d0", "d1", "d2")

    def test_empty_candidates_leave_everything_residual(self):
        docs = {"d1", "d2"}
        result = select_clusters([], docs, query="q")
        assert result.clusters == ()
        assert result.residual == ("d1", "d2")
        assert result.members_of(RESIDUAL_CLUSTER_ID) == ("d1", "d2")

    def test_planted_topics_fixture(self):
        ladder = {f"L{i}" for i in range(12)}
        floor = {f"F{i}" for i in range(9)}
        noise = {f"N{i}" for i in range(5)}
        docs = ladder | floor | noise
        candidates = [
            ("fell from ladder", frozenset(ladder)),
            ("wet floor", frozenset(floor)),
            ("minor note", frozenset({"N0", "N1"})),
        ]
        result = select_clusters(candidates, docs, query="falls")
        assert [c.label.label for c in result.clusters] == [
            "fell from ladder", "wet floor"]
        assert set(result.clusters[0].members) == ladder
        assert set(result.clusters[1].members) == floor
        assert len(result.residual) == 5

        # Exhaustive check of the greedy objective at each step.
        theta = max(3, math.ceil(0.02 * len(docs)))
        covered: set = set()
        remaining = dict(candidates)
        for cluster in result.clusters:
            gains = {phrase: len(cand - covered) - 0.5 * len(cand & covered)
                     for phrase, cand in remaining.items()}
            assert gains[cluster.label.label] == max(gains.values())
            assert gains[cluster.label.label] >= theta
            covered |= remaining.pop(cluster.label.label)
        leftover_gains = [len(cand - covered) - 0.5 * len(cand & covered)
                          for cand in remaining.values()]
        assert all(g < theta for g in leftover_gains)

    def test_overlapping_doc_goes_to_earliest_selected(self):
        docs = {"a", "b", "c", "i", "d", "e", "f", "g", "h"}
        candidates = [
            ("big", frozenset({"a", "b", "c", "i", "d"})),
            ("late", frozenset({"d", "e", "f", "g", "h"})),
        ]
        result = select_clusters(candidates, docs, query="q")
        # Equal gain and size at step one, so the label tie-break picks
        # "big"; "late" still clears theta (4 - 0.5 = 3.5) afterwards.
        assert [c.label.label for c in result.clusters] == ["big", "late"]
        assert "d" in result.clusters[0].members
        assert "d" not in result.clusters[1].members
        assert set(result.clusters[1].members) == {"e", "f", "g", "h"}

    def test_threshold_scales_with_result_set_size(self):
        docs = {f"d{i}" for i in range(300)}
        small = ("small topic", frozenset({f"d{i}" for i in range(5)}))
        large = ("large topic", frozenset({f"d{i}" for i in range(5, 15)}))
        result = select_clusters([small, large], docs, query="q")
        # theta = max(3, ceil(0.02 * 300)) = 6: ten docs pass, five do not.
        assert [c.label.label for c in result.clusters] == ["large topic"]

    def test_max_clusters_caps_selection(self):
        docs = {f"d{i}" for i in range(30)}
        candidates = [
            (f"label{i:02d}", frozenset({f"d{3 * i + j}" for j in range(3)}))
            for i in range(10)
        ]
        result = select_clusters(candidates, docs, query="q")
        assert len(result.clusters) == 8
        assert len(result.residual) == 6

    def test_tie_prefers_larger_doc_set_then_label(self):
        docs = {f"d{i}" for i in range(8)}
        candidates = [
            ("zeta", frozenset({"d0", "d1", "d2"})),
            ("alpha", frozenset({"d3", "d4", "d5"})),
        ]
        result = select_clusters(candidates, docs, query="q")
        assert [c.label.label for c in result.clusters] == ["alpha", "zeta"]

    def test_partition_on_randomized_sets(self):
        rng = random.Random(42)
        for trial in range(100):
            n_docs = rng.randint(1, 60)
            docs = {f"d{i}" for i in range(n_docs)}
            candidates = []
            for li in range(rng.randint(0, 12)):
                size = rng.randint(1, n_docs)
                members = frozenset(rng.sample(sorted(docs), size))
                candidates.append((f"label{li}", members))
            result = select_clusters(candidates, docs, query=f"q{trial}")

            seen: set[str] = set()
            for cluster in result.clusters:
                members = set(cluster.members)
                assert not members & seen
                seen |= members
                source = dict(candidates)[cluster.label.label]
                assert members <= source
                assert cluster.size == len(cluster.members)
            assert not seen & set(result.residual)
            assert seen | set(result.residual) == docs

            again = select_clusters(candidates, docs, query=f"q{trial}")
            assert again == result

    def test_cluster_ids_are_stable_and_query_scoped(self):
        assert cluster_id_for("q", "wet floor") == cluster_id_for("q", "wet floor")
        assert cluster_id_for("q", "wet floor") != cluster_id_for("p", "wet floor")
        docs = {"a", "b", "c"}
        result = select_clusters([("lab", frozenset(docs))], docs, query="q")
        assert result.clusters[0].label.cluster_id == cluster_id_for("q", "lab")


class TestFilterByCluster:
    def make_set(self):
        clusters = select_clusters(
            [("fall", frozenset({"d1", "d3", "d5"})),
             ("cut", frozenset({"d2", "d4", "d6"}))],
            {f"d{i}" for i in range(1, 8)}, query="q")
        return clusters

    def test_filter_returns_exactly_the_members(self):
        # Equal support means "cut" sorts before "fall" alphabetically.
        cluster_set = self.make_set()
        ranked = [f"d{i}" for i in range(1, 8)]
        assert [c.label.label for c in cluster_set.clusters] == ["cut", "fall"]
        cid = cluster_set.clusters[0].label.cluster_id
        assert filter_by_cluster(ranked, cluster_set, cid) == ["d2", "d4", "d6"]

    def test_filter_by_residual(self):
        cluster_set = self.make_set()
        ranked = [f"d{i}" for i in range(1, 8)]
        assert filter_by_cluster(ranked, cluster_set, RESIDUAL_CLUSTER_ID) == ["d7"]

    def test_rank_order_preserved_on_larger_fixture(self):
        rng = random.Random(7)
        ranked = [f"d{i}" for i in range(30)]
        rng.shuffle(ranked)
        members = frozenset(rng.sample(ranked, 11))
        cluster_set = select_clusters([("x", members)], set(ranked), query="q")
        cid = cluster_set.clusters[0].label.cluster_id
        filtered = filter_by_cluster(ranked, cluster_set, cid)
        positions = [ranked.index(d) for d in filtered]
        assert positions == sorted(positions)
        assert set(filtered) == set(members)

    def test_unknown_cluster_id_raises(self):
        cluster_set = self.make_set()
        with pytest.raises(UnknownClusterId):
            filter_by_cluster(["d1"], cluster_set, "nope")
