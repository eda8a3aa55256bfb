"""Tests for the retrieval metrics and the report builder.

Each metric is checked against an independent oracle route: permutation
maximum for the nDCG ideal, literal pair counting for kappa, and the sign
formulation for tau-b.
"""
from __future__ import annotations

import itertools
import math
import random

import pytest

from hsearch.evaluation import (
    DegenerateRanking,
    DomainMismatch,
    EmptyIntersection,
    EvalReport,
    Judgment,
    NoRelevantJudgments,
    ParseError,
    RunEntry,
    evaluate,
    fleiss_kappa,
    kendall_tau,
    ndcg,
    p_at_k,
    parse_qrels,
    parse_run,
    report_json,
    report_tsv,
    save_report,
    write_qrels,
    write_run,
)


def make_run(qid, doc_ids):
    return [RunEntry(qid, doc_id, rank, float(len(doc_ids) - rank), "t")
            for rank, doc_id in enumerate(doc_ids, start=1)]


def make_judgments(qid, rels, assessor="a1"):
    return [Judgment(qid, doc_id, rel, assessor) for doc_id, rel in rels.items()]


def dcg_of(rels, k):
    return sum((2 ** rel - 1) / math.log2(i + 1)
               for i, rel in enumerate(rels[:k], start=1))


def oracle_ndcg(run_doc_ids, judged: dict[str, int], k):
    """DCG by direct sum; ideal DCG by brute-force permutation maximum."""
    gains = [judged.get(d, 0) for d in run_doc_ids]
    best = max(dcg_of(list(perm), k)
               for perm in itertools.permutations(judged.values()))
    return dcg_of(gains, k) / best


def oracle_kappa(ratings: list[list[int]]):
    """Agreement counted over literal rater pairs instead of count algebra."""
    n = len(ratings)
    r = len(ratings[0])
    pair_total = r * (r - 1) / 2
    mean_agreement = sum(
        sum(1 for x, y in itertools.combinations(item, 2) if x == y) / pair_total
        for item in ratings
    ) / n
    chance = sum(
        (sum(item.count(c) for item in ratings) / (n * r)) ** 2
        for c in (0, 1, 2)
    )
    return (mean_agreement - chance) / (1.0 - chance)


def oracle_tau_b(ranks_a: dict, ranks_b: dict):
    """Sign formulation: sum sgn*sgn over pairs, normalized by sgn norms."""
    items = sorted(ranks_a)
    sgn = lambda x: (x > 0) - (x < 0)
    num = sum_a = sum_b = 0
    for x, y in itertools.combinations(items, 2):
        da = sgn(ranks_a[x] - ranks_a[y])
        db = sgn(ranks_b[x] - ranks_b[y])
        num += da * db
        sum_a += da * da
        sum_b += db * db
    return num / math.sqrt(sum_a * sum_b)


class TestNdcg:
    def test_perfect_ranking_scores_one(self):
        judged = {"a": 2, "b": 1, "c": 0}
        run = make_run("q", ["a", "b", "c"])
        assert ndcg(run, make_judgments("q", judged)) == pytest.approx(1.0)

    def test_worked_example(self):
        # Ranked relevances [2, 0, 1] against judged pool {2, 1, 0}:
        # DCG = 3 + 0 + 0.5 = 3.5, IDCG = 3 + 1/log2(3).
        judged = {"a": 2, "b": 0, "c": 1}
        run = make_run("q", ["a", "b", "c"])
        expected = 3.5 / (3.0 + 1.0 / math.log2(3))
        value = ndcg(run, make_judgments("q", judged))
        assert value == pytest.approx(expected, abs=1e-12)
        assert value == pytest.approx(0.9640, abs=1e-4)

    def test_unjudged_docs_count_as_zero(self):
        judged = {"a": 2}
        run = make_run("q", ["mystery", "a"])
        expected = (3.0 / math.log2(3)) / 3.0
        assert ndcg(run, make_judgments("q", judged)) == pytest.approx(
            expected, abs=1e-12)

    def test_cutoff_ignores_later_ranks(self):
        judged = {f"d{i}": 0 for i in range(10)}
        judged["relevant"] = 2
        run = make_run("q", [f"d{i}" for i in range(10)] + ["relevant"])
        value = ndcg(run, make_judgments("q", judged), k=10)
        assert value == 0.0

    def test_no_relevant_judgments_raises(self):
        judged = {"a": 0, "b": 0}
        run = make_run("q", ["a", "b"])
        with pytest.raises(NoRelevantJudgments):
            ndcg(run, make_judgments("q", judged))

    def test_randomized_fixtures_match_permutation_oracle(self):
        rng = random.Random(31)
        checked = 0
        while checked < 25:
            pool = [f"j{i}" for i in range(rng.randint(1, 6))]
            judged = {d: rng.choice([0, 1, 2]) for d in pool}
            if not any(judged.values()):
                continue
            extras = [f"x{i}" for i in range(rng.randint(0, 3))]
            docs = pool + extras
            rng.shuffle(docs)
            docs = docs[:rng.randint(1, len(docs))]
            k = rng.randint(1, 10)
            run = make_run("q", docs)
            expected = oracle_ndcg(docs, judged, k)
            assert ndcg(run, make_judgments("q", judged), k) == pytest.approx(
                expected, abs=1e-9)
            checked += 1

    def test_bounds_hold_on_random_cases(self):
        rng = random.Random(5)
        for _ in range(50):
            judged = {f"j{i}": rng.choice([0, 1, 2]) for i in range(5)}
            if not any(judged.values()):
                continue
            docs = sorted(judged, key=lambda d: rng.random())
            value = ndcg(make_run("q", docs), make_judgments("q", judged))
            assert 0.0 <= value <= 1.0 + 1e-12


class TestPAtK:
    def test_worked_example(self):
        judged = {"a": 2, "b": 0, "c": 1, "d": 0, "e": 0}
        run = make_run("q", ["a", "b", "c", "d", "e"])
        assert p_at_k(run, make_judgments("q", judged)) == pytest.approx(0.4)

    def test_empty_run_is_zero(self):
        assert p_at_k([], make_judgments("q", {"a": 2})) == 0.0

    def test_short_run_still_divides_by_k(self):
        judged = {"a": 2, "b": 1}
        run = make_run("q", ["a", "b"])
        assert p_at_k(run, make_judgments("q", judged), k=5) == pytest.approx(0.4)

    def test_permutation_within_top_k_is_invariant(self):
        judged = {"a": 2, "b": 0, "c": 1, "d": 0, "e": 1}
        docs = ["a", "b", "c", "d", "e"]
        values = [
            p_at_k(make_run("q", list(perm)), make_judgments("q", judged))
            for perm in itertools.permutations(docs)
        ]
        # every permutation preserves the relevant/non-relevant multiset
        assert all(v == pytest.approx(0.6) for v in values)

    def test_randomized_fixtures_match_direct_count(self):
        rng = random.Random(77)
        for _ in range(25):
            judged = {f"d{i}": rng.choice([0, 1, 2]) for i in range(8)}
            docs = sorted(judged, key=lambda d: rng.random())
            docs = docs[:rng.randint(0, 8)]
            k = rng.randint(1, 6)
            expected = sum(1 for d in docs[:k] if judged[d] > 0) / k
            run = make_run("q", docs)
            assert p_at_k(run, make_judgments("q", judged), k) == pytest.approx(
                expected, abs=1e-9)


class TestFleissKappa:
    def test_unanimous_agreement_is_one(self):
        matrix = [[3, 0, 0], [0, 0, 3], [0, 3, 0]]
        assert fleiss_kappa(matrix) == pytest.approx(1.0)

    def test_two_rater_disagreement_worked_example(self):
        # Ratings (0,1) and (1,0): mean agreement 0, chance 0.5.
        matrix = [[1, 1], [1, 1]]
        assert fleiss_kappa(matrix) == pytest.approx(-1.0)

    def test_single_category_unanimity_returns_one(self):
        matrix = [[4, 0, 0], [4, 0, 0]]
        assert fleiss_kappa(matrix) == pytest.approx(1.0)

    def test_unequal_row_sums_rejected(self):
        with pytest.raises(ValueError):
            fleiss_kappa([[2, 0, 0], [2, 1, 0]])

    def test_single_rater_rejected(self):
        with pytest.raises(ValueError):
            fleiss_kappa([[1, 0, 0]])

    def test_randomized_fixtures_match_pair_counting_oracle(self):
        rng = random.Random(13)
        checked = 0
        while checked < 25:
            n = rng.randint(2, 12)
            r = rng.randint(2, 5)
            ratings = [[rng.choice([0, 1, 2]) for _ in range(r)]
                       for _ in range(n)]
            used = {c for item in ratings for c in item}
            if len(used) < 2:
                continue
            matrix = [[item.count(c) for c in (0, 1, 2)] for item in ratings]
            assert fleiss_kappa(matrix) == pytest.approx(
                oracle_kappa(ratings), abs=1e-9)
            checked += 1


class TestKendallTau:
    def test_identical_rankings(self):
        assert kendall_tau(["a", "b", "c"], ["a", "b", "c"]) == pytest.approx(1.0)

    def test_reversed_rankings(self):
        assert kendall_tau(["a", "b", "c"], ["c", "b", "a"]) == pytest.approx(-1.0)

    def test_worked_example_one_third(self):
        # Items ranked [1,2,3] vs [1,3,2]: 2 concordant pairs, 1 discordant.
        assert kendall_tau(["a", "b", "c"], ["a", "c", "b"]) == pytest.approx(
            1 / 3)

    def test_symmetry(self):
        a = ["a", "b", "c", "d", "e"]
        b = ["c", "a", "e", "b", "d"]
        assert kendall_tau(a, b) == pytest.approx(kendall_tau(b, a))

    def test_score_maps_with_ties(self):
        a = {"x": 3.0, "y": 3.0, "z": 1.0}
        b = {"x": 5.0, "y": 4.0, "z": 3.0}
        # pair (x,y) tied in a: n0=3, ties_a=1; concordant (x,z),(y,z).
        expected = 2 / math.sqrt(2 * 3)
        assert kendall_tau(a, b) == pytest.approx(expected, abs=1e-12)

    def test_domain_mismatch_raises(self):
        with pytest.raises(DomainMismatch):
            kendall_tau(["a", "b"], ["a", "c"])
        with pytest.raises(DomainMismatch):
            kendall_tau(["a"], ["a"])

    def test_single_tie_group_is_degenerate(self):
        with pytest.raises(DegenerateRanking):
            kendall_tau({"a": 1.0, "b": 1.0}, {"a": 2.0, "b": 1.0})

    def test_randomized_fixtures_match_sign_oracle(self):
        rng = random.Random(99)
        checked = 0
        while checked < 25:
            n = rng.randint(2, 10)
            items = [f"d{i}" for i in range(n)]
            scores_a = {d: float(rng.randint(1, 4)) for d in items}
            scores_b = {d: float(rng.randint(1, 4)) for d in items}
            if len(set(scores_a.values())) < 2 or len(set(scores_b.values())) < 2:
                continue
            value = kendall_tau(scores_a, scores_b)
            from hsearch.evaluation import _to_ranks
            expected = oracle_tau_b(_to_ranks(scores_a), _to_ranks(scores_b))
            assert value == pytest.approx(expected, abs=1e-9)
            assert -1.0 - 1e-12 <= value <= 1.0 + 1e-12
            checked += 1


class TestParsers:
    def test_qrels_round_trip(self, tmp_path):
        judgments = [Judgment("q1", "d1", 2, "a1"), Judgment("q1", "d2", 0, "a1"),
                     Judgment("q2", "d1", 1, "a1")]
        path = tmp_path / "qrels.txt"
        write_qrels(judgments, path)
        parsed = parse_qrels(path, "a1")
        assert parsed == judgments
        again = tmp_path / "again.txt"
        write_qrels(parsed, again)
        assert path.read_bytes() == again.read_bytes()

    def test_run_round_trip(self, tmp_path):
        entries = make_run("q1", ["d3", "d1", "d2"]) + make_run("q2", ["d9"])
        path = tmp_path / "run.txt"
        write_run(entries, path)
        parsed = parse_run(path)
        assert parsed == entries
        again = tmp_path / "again.txt"
        write_run(parsed, again)
        assert path.read_bytes() == again.read_bytes()

    @pytest.mark.parametrize("line,fragment", [
        ("q1 0 d1", "4 columns"),
        ("q1 0 d1 5", "outside 0-2"),
        ("q1 0 d1 x", "not an integer"),
    ])
    def test_qrels_errors_carry_line_numbers(self, tmp_path, line, fragment):
        path = tmp_path / "bad.txt"
        path.write_text(f"q1 0 d0 1\n{line}\n", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            parse_qrels(path)
        assert err.value.line_no == 2
        assert fragment in err.value.reason

    def test_qrels_duplicate_detected(self, tmp_path):
        path = tmp_path / "dup.txt"
        path.write_text("q1 0 d1 1\nq1 0 d1 2\n", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            parse_qrels(path)
        assert err.value.line_no == 2

    @pytest.mark.parametrize("lines,line_no", [
        ("q1 Q0 d1 1 0.9 t\nq1 Q0 d2 3 0.8 t\n", 2),
        ("q1 Q0 d1 1 0.5 t\nq1 Q0 d2 2 0.9 t\n", 2),
        ("q1 Q0 d1 1 abc t\n", 1),
        ("q1 Q0 d1 1 0.9\n", 1),
    ])
    def test_run_errors_carry_line_numbers(self, tmp_path, lines, line_no):
        path = tmp_path / "bad.txt"
        path.write_text(lines, encoding="utf-8")
        with pytest.raises(ParseError) as err:
            parse_run(path)
        assert err.value.line_no == line_no


class TestEvaluate:
    def write_fixture(self, tmp_path):
        runs = {
            "word": make_run("q1", ["d1", "d2", "d3"]) +
                    make_run("q2", ["d4", "d5"]),
            "entity": make_run("q1", ["d2", "d1", "d3"]) +
                      make_run("q2", ["d5", "d4"]),
        }
        qrels = {
            "a1": [Judgment("q1", "d1", 2, "a1"), Judgment("q1", "d2", 1, "a1"),
                   Judgment("q1", "d3", 0, "a1"), Judgment("q2", "d4", 2, "a1"),
                   Judgment("q2", "d5", 0, "a1")],
            "a2": [Judgment("q1", "d1", 1, "a2"), Judgment("q1", "d2", 2, "a2"),
                   Judgment("q1", "d3", 0, "a2"), Judgment("q2", "d4", 2, "a2"),
                   Judgment("q2", "d5", 1, "a2")],
        }
        run_paths = {}
        for system, entries in runs.items():
            path = tmp_path / f"{system}.run"
            write_run(entries, path)
            run_paths[system] = path
        qrel_paths = {}
        for assessor, judgments in qrels.items():
            path = tmp_path / f"{assessor}.qrels"
            write_qrels(judgments, path)
            qrel_paths[assessor] = path
        return run_paths, qrel_paths, runs, qrels

    def test_single_cell_matches_direct_ops(self, tmp_path):
        run = make_run("q1", ["d1", "d2"])
        judgments = [Judgment("q1", "d1", 2, "a1"), Judgment("q1", "d2", 0, "a1")]
        run_path, qrel_path = tmp_path / "r.run", tmp_path / "a.qrels"
        write_run(run, run_path)
        write_qrels(judgments, qrel_path)
        report = evaluate({"sys": run_path}, {"a1": qrel_path})
        assert report.ndcg_values[("sys", "a1")]["q1"] == pytest.approx(
            ndcg(run, judgments))
        assert report.p_values[("sys", "a1")]["q1"] == pytest.approx(
            p_at_k(run, judgments))
        assert report.tau is None

    def test_identical_systems_give_tau_one(self, tmp_path):
        run = make_run("q1", ["d1", "d2", "d3"])
        for name in ("one.run", "two.run"):
            write_run(run, tmp_path / name)
        write_qrels([Judgment("q1", "d1", 1)], tmp_path / "a.qrels")
        report = evaluate({"one": tmp_path / "one.run",
                           "two": tmp_path / "two.run"},
                          {"a1": tmp_path / "a.qrels"})
        assert report.tau == pytest.approx(1.0)
        assert all(v == pytest.approx(1.0)
                   for v in report.tau_per_query.values())

    def test_averages_equal_mean_of_per_query_values(self, tmp_path):
        run_paths, qrel_paths, _, _ = self.write_fixture(tmp_path)
        report = evaluate(run_paths, qrel_paths)
        for key, column in report.ndcg_values.items():
            defined = [v for v in column.values() if v is not None]
            assert report.ndcg_average(*key) == pytest.approx(
                sum(defined) / len(defined))
        for key, column in report.p_values.items():
            values = list(column.values())
            assert report.p_average(*key) == pytest.approx(
                sum(values) / len(values))

    def test_kappa_matches_direct_matrix(self, tmp_path):
        run_paths, qrel_paths, _, qrels = self.write_fixture(tmp_path)
        report = evaluate(run_paths, qrel_paths)
        by_item = {}
        for assessor, judgments in qrels.items():
            for j in judgments:
                by_item.setdefault((j.query_id, j.doc_id), []).append(j.relevance)
        matrix = [[item.count(c) for c in (0, 1, 2)]
                  for _, item in sorted(by_item.items())]
        assert report.kappa == pytest.approx(fleiss_kappa(matrix), abs=1e-12)

    def test_tau_uses_union_domain_with_bottom_ties(self, tmp_path):
        # Run A ranks [x, y]; run B ranks [y, z]. Over the union {x, y, z}
        # the missing doc sits at the shared bottom rank 3, giving
        # C=1, D=2 and tau = -1/3.
        write_run(make_run("q1", ["x", "y"]), tmp_path / "a.run")
        write_run(make_run("q1", ["y", "z"]), tmp_path / "b.run")
        write_qrels([Judgment("q1", "x", 1)], tmp_path / "j.qrels")
        report = evaluate({"a": tmp_path / "a.run", "b": tmp_path / "b.run"},
                          {"a1": tmp_path / "j.qrels"})
        assert report.tau_per_query["q1"] == pytest.approx(-1 / 3, abs=1e-12)

    def test_three_systems_have_no_tau(self, tmp_path):
        run = make_run("q1", ["d1", "d2"])
        for name in ("a", "b", "c"):
            write_run(run, tmp_path / f"{name}.run")
        write_qrels([Judgment("q1", "d1", 1)], tmp_path / "j.qrels")
        report = evaluate({n: tmp_path / f"{n}.run" for n in "abc"},
                          {"a1": tmp_path / "j.qrels"})
        assert report.tau is None

    def test_empty_intersection_raises(self, tmp_path):
        write_run(make_run("q1", ["d1"]), tmp_path / "a.run")
        write_run(make_run("q2", ["d1"]), tmp_path / "b.run")
        write_qrels([Judgment("q1", "d1", 1)], tmp_path / "j.qrels")
        with pytest.raises(EmptyIntersection):
            evaluate({"a": tmp_path / "a.run", "b": tmp_path / "b.run"},
                     {"a1": tmp_path / "j.qrels"})

    def test_report_emission(self, tmp_path):
        run_paths, qrel_paths, _, _ = self.write_fixture(tmp_path)
        report = evaluate(run_paths, qrel_paths)
        tsv = report_tsv(report)
        lines = tsv.strip().split("\n")
        assert lines[0].split("\t") == ["metric", "system", "a1", "a2", "AVG"]
        assert len(lines) == 1 + 2 * 2 + 2
        payload = report_json(report)
        assert payload["ndcg"]["word"]["AVG"] == pytest.approx(
            report.grand_ndcg("word"))
        json_path = tmp_path / "report.json"
        tsv_path = tmp_path / "report.tsv"
        save_report(report, json_path=json_path, tsv_path=tsv_path)
        assert json_path.exists() and tsv_path.read_text("utf-8") == tsv
