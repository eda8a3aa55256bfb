"""TREC-style retrieval evaluation.

Covers graded nDCG, P@k, Fleiss' kappa over assessors, and Kendall's tau-b
between two systems, composed into a per-assessor, per-system report table.
Unjudged documents count as non-relevant throughout.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

RELEVANCE_SCALE = (0, 1, 2)
NDCG_CUTOFF = 10
P_CUTOFF = 5


class EvaluationError(Exception):
    pass


class ParseError(EvaluationError):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason


class NoRelevantJudgments(EvaluationError):
    """nDCG undefined: the assessor judged nothing relevant for the query."""


class DegenerateAgreement(EvaluationError):
    pass


class DegenerateRanking(EvaluationError):
    """tau-b undefined: one ranking is a single tie group."""


class DomainMismatch(EvaluationError):
    pass


class EmptyIntersection(EvaluationError):
    pass


@dataclass(frozen=True)
class Judgment:
    query_id: str
    doc_id: str
    relevance: int
    assessor_id: str = ""

    def __post_init__(self):
        if self.relevance not in RELEVANCE_SCALE:
            raise ValueError(f"relevance {self.relevance} outside 0-2 scale")


@dataclass(frozen=True)
class RunEntry:
    query_id: str
    doc_id: str
    rank: int
    score: float
    tag: str = ""


def _rel_map(judgments) -> dict[str, int]:
    return {j.doc_id: j.relevance for j in judgments}


def _ranked_docs(run) -> list[str]:
    return [e.doc_id for e in sorted(run, key=lambda e: e.rank)]


def ndcg(run, judgments, k: int = NDCG_CUTOFF) -> float:
    """nDCG@k with gain 2^rel - 1 and log2(i+1) discount."""
    rels = _rel_map(judgments)
    if not any(r > 0 for r in rels.values()):
        raise NoRelevantJudgments("no judged-relevant document for this query")
    dcg = 0.0
    for i, doc_id in enumerate(_ranked_docs(run)[:k], start=1):
        dcg += (2 ** rels.get(doc_id, 0) - 1) / math.log2(i + 1)
    ideal = 0.0
    for i, rel in enumerate(sorted(rels.values(), reverse=True)[:k], start=1):
        ideal += (2 ** rel - 1) / math.log2(i + 1)
    return dcg / ideal


def p_at_k(run, judgments, k: int = P_CUTOFF) -> float:
    """Fraction of the top k that is judged relevant; short result lists
    still divide by k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    rels = _rel_map(judgments)
    hits = sum(1 for doc_id in _ranked_docs(run)[:k] if rels.get(doc_id, 0) > 0)
    return hits / k


def fleiss_kappa(matrix) -> float:
    """Fleiss' kappa from an items x categories count matrix; every item
    must carry the same number of ratings r >= 2."""
    if not matrix:
        raise ValueError("empty rating matrix")
    r = sum(matrix[0])
    if r < 2:
        raise ValueError("need at least 2 ratings per item")
    for row in matrix:
        if sum(row) != r:
            raise ValueError("rows carry unequal rating counts")
    n = len(matrix)
    categories = len(matrix[0])
    per_item = [
        (sum(c * c for c in row) - r) / (r * (r - 1))
        for row in matrix
    ]
    mean_agreement = sum(per_item) / n
    marginals = [sum(row[j] for row in matrix) / (n * r)
                 for j in range(categories)]
    chance = sum(p * p for p in marginals)
    if chance == 1.0:
        if mean_agreement == 1.0:
            return 1.0
        raise DegenerateAgreement("chance agreement is 1 without unanimity")
    return (mean_agreement - chance) / (1.0 - chance)


def _to_ranks(ranking) -> dict[str, float]:
    """Doc -> rank position. Lists rank by position; score maps rank by
    descending score with ties sharing a rank."""
    if isinstance(ranking, dict):
        ordered = sorted(ranking.items(), key=lambda kv: (-kv[1], kv[0]))
        ranks: dict[str, float] = {}
        pos = 1
        i = 0
        while i < len(ordered):
            j = i
            while j + 1 < len(ordered) and ordered[j + 1][1] == ordered[i][1]:
                j += 1
            for doc_id, _ in ordered[i:j + 1]:
                ranks[doc_id] = pos
            pos += j - i + 1
            i = j + 1
        return ranks
    return {doc_id: float(i) for i, doc_id in enumerate(ranking, start=1)}


def kendall_tau(ranking_a, ranking_b) -> float:
    """Kendall's tau-b between two rankings over the same item set."""
    ranks_a = _to_ranks(ranking_a)
    ranks_b = _to_ranks(ranking_b)
    if set(ranks_a) != set(ranks_b):
        raise DomainMismatch("rankings cover different item sets")
    if len(ranks_a) < 2:
        raise DomainMismatch("need at least 2 shared items")
    return _rank_tau(ranks_a, ranks_b)


def _rank_tau(ranks_a: dict[str, float], ranks_b: dict[str, float]) -> float:
    items = sorted(ranks_a)
    n = len(items)
    concordant = discordant = ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = ranks_a[items[i]] - ranks_a[items[j]]
            db = ranks_b[items[i]] - ranks_b[items[j]]
            if da == 0:
                ties_a += 1
            if db == 0:
                ties_b += 1
            if da != 0 and db != 0:
                if da * db > 0:
                    concordant += 1
                else:
                    discordant += 1
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - ties_a) * (n0 - ties_b))
    if denom == 0.0:
        raise DegenerateRanking("a ranking consists of a single tie group")
    return (concordant - discordant) / denom


def parse_qrels(path: str | Path, assessor_id: str = "") -> list[Judgment]:
    """Parse "qid 0 docid rel" lines."""
    judgments: list[Judgment] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(path, line_no,
                                 f"expected 4 columns, got {len(parts)}")
            qid, _, doc_id, rel_text = parts
            try:
                rel = int(rel_text)
            except ValueError:
                raise ParseError(path, line_no,
                                 f"relevance {rel_text!r} is not an integer")
            if rel not in RELEVANCE_SCALE:
                raise ParseError(path, line_no,
                                 f"relevance {rel} outside 0-2 scale")
            if (qid, doc_id) in seen:
                raise ParseError(path, line_no,
                                 f"duplicate judgment for ({qid}, {doc_id})")
            seen.add((qid, doc_id))
            judgments.append(Judgment(qid, doc_id, rel, assessor_id))
    return judgments


def parse_run(path: str | Path) -> list[RunEntry]:
    """Parse "qid Q0 docid rank score tag" lines, checking rank contiguity
    and non-increasing scores per query."""
    entries: list[RunEntry] = []
    last_rank: dict[str, int] = {}
    last_score: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ParseError(path, line_no,
                                 f"expected 6 columns, got {len(parts)}")
            qid, _, doc_id, rank_text, score_text, tag = parts
            try:
                rank = int(rank_text)
                score = float(score_text)
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc))
            if rank != last_rank.get(qid, 0) + 1:
                raise ParseError(path, line_no,
                                 f"rank {rank} not contiguous for {qid}")
            if qid in last_score and score > last_score[qid]:
                raise ParseError(path, line_no,
                                 f"score increases at rank {rank} of {qid}")
            last_rank[qid] = rank
            last_score[qid] = score
            entries.append(RunEntry(qid, doc_id, rank, score, tag))
    return entries


def write_qrels(judgments, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for j in judgments:
            fh.write(f"{j.query_id} 0 {j.doc_id} {j.relevance}\n")


def write_run(entries, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(f"{e.query_id} Q0 {e.doc_id} {e.rank} {repr(e.score)} "
                     f"{e.tag}\n")


@dataclass
class EvalReport:
    systems: tuple[str, ...]
    assessors: tuple[str, ...]
    query_ids: tuple[str, ...]
    ndcg_cutoff: int
    p_cutoff: int
    # (system, assessor) -> query_id -> value or None when undefined
    ndcg_values: dict = field(default_factory=dict)
    p_values: dict = field(default_factory=dict)
    kappa: float | None = None
    tau: float | None = None
    tau_per_query: dict = field(default_factory=dict)

    def metric_average(self, values: dict) -> float | None:
        defined = [v for v in values.values() if v is not None]
        return sum(defined) / len(defined) if defined else None

    def ndcg_average(self, system: str, assessor: str) -> float | None:
        return self.metric_average(self.ndcg_values[(system, assessor)])

    def p_average(self, system: str, assessor: str) -> float | None:
        return self.metric_average(self.p_values[(system, assessor)])

    def grand_ndcg(self, system: str) -> float | None:
        cols = [self.ndcg_average(system, a) for a in self.assessors]
        cols = [c for c in cols if c is not None]
        return sum(cols) / len(cols) if cols else None

    def grand_p(self, system: str) -> float | None:
        cols = [self.p_average(system, a) for a in self.assessors]
        cols = [c for c in cols if c is not None]
        return sum(cols) / len(cols) if cols else None


def _complete_items(judgments_by_assessor) -> list[list[int]]:
    """Count matrix over (query, doc) items judged by every assessor."""
    assessors = sorted(judgments_by_assessor)
    per_assessor = [
        {(j.query_id, j.doc_id): j.relevance
         for j in judgments_by_assessor[a]}
        for a in assessors
    ]
    shared = set(per_assessor[0])
    for rated in per_assessor[1:]:
        shared &= set(rated)
    matrix = []
    for item in sorted(shared):
        row = [0, 0, 0]
        for rated in per_assessor:
            row[rated[item]] += 1
        matrix.append(row)
    return matrix


def _run_ranking(entries, domain) -> dict[str, float]:
    """1-based ranks; docs absent from the run share the bottom rank."""
    ranks = {e.doc_id: float(e.rank) for e in entries}
    bottom = float(len(ranks) + 1)
    return {doc_id: ranks.get(doc_id, bottom) for doc_id in domain}


def evaluate(runs: dict[str, str | Path], qrels: dict[str, str | Path],
             ndcg_cutoff: int = NDCG_CUTOFF,
             p_cutoff: int = P_CUTOFF) -> EvalReport:
    """Build the full report from run files and per-assessor qrels files.

    tau is only defined for exactly two systems; undefined per-query values
    (no relevant judgments, degenerate rankings) are excluded from averages.
    """
    run_entries = {system: parse_run(path) for system, path in runs.items()}
    judgments = {assessor: parse_qrels(path, assessor)
                 for assessor, path in qrels.items()}

    run_qids = [set(e.query_id for e in entries)
                for entries in run_entries.values()]
    shared_qids = set.intersection(*run_qids) if run_qids else set()
    if not shared_qids:
        raise EmptyIntersection("no query id common to all runs")

    systems = tuple(sorted(run_entries))
    assessors = tuple(sorted(judgments))
    query_ids = tuple(sorted(shared_qids))

    by_system_query: dict[tuple[str, str], list[RunEntry]] = {}
    for system, entries in run_entries.items():
        for entry in entries:
            by_system_query.setdefault((system, entry.query_id), []).append(entry)
    by_assessor_query: dict[tuple[str, str], list[Judgment]] = {}
    for assessor, rated in judgments.items():
        for judgment in rated:
            by_assessor_query.setdefault(
                (assessor, judgment.query_id), []).append(judgment)

    report = EvalReport(systems=systems, assessors=assessors,
                        query_ids=query_ids, ndcg_cutoff=ndcg_cutoff,
                        p_cutoff=p_cutoff)
    for system in systems:
        for assessor in assessors:
            ndcg_col: dict[str, float | None] = {}
            p_col: dict[str, float | None] = {}
            for qid in query_ids:
                run = by_system_query.get((system, qid), [])
                rated = by_assessor_query.get((assessor, qid), [])
                try:
                    ndcg_col[qid] = ndcg(run, rated, ndcg_cutoff)
                except NoRelevantJudgments:
                    ndcg_col[qid] = None
                p_col[qid] = p_at_k(run, rated, p_cutoff)
            report.ndcg_values[(system, assessor)] = ndcg_col
            report.p_values[(system, assessor)] = p_col

    matrix = _complete_items(judgments) if len(assessors) >= 2 else []
    if matrix:
        report.kappa = fleiss_kappa(matrix)

    if len(systems) == 2:
        first, second = systems
        per_query: dict[str, float] = {}
        for qid in query_ids:
            run_a = by_system_query.get((first, qid), [])
            run_b = by_system_query.get((second, qid), [])
            domain = {e.doc_id for e in run_a} | {e.doc_id for e in run_b}
            if len(domain) < 2:
                continue
            try:
                per_query[qid] = _rank_tau(_run_ranking(run_a, domain),
                                           _run_ranking(run_b, domain))
            except DegenerateRanking:
                continue
        report.tau_per_query = per_query
        if per_query:
            report.tau = sum(per_query.values()) / len(per_query)
    return report


def _fmt(value: float | None) -> str:
    return "NA" if value is None else f"{value:.4f}"


def report_tsv(report: EvalReport) -> str:
    """Table shape: one row per (metric, system), one column per assessor,
    then the AVG column."""
    header = ["metric", "system", *report.assessors, "AVG"]
    lines = ["\t".join(header)]
    for metric, per_assessor, grand in (
        (f"nDCG@{report.ndcg_cutoff}", report.ndcg_average, report.grand_ndcg),
        (f"P@{report.p_cutoff}", report.p_average, report.grand_p),
    ):
        for system in report.systems:
            cells = [_fmt(per_assessor(system, a)) for a in report.assessors]
            lines.append("\t".join(
                [metric, system, *cells, _fmt(grand(system))]))
    lines.append("\t".join(["fleiss_kappa", "-",
                            *[""] * len(report.assessors),
                            _fmt(report.kappa)]))
    lines.append("\t".join(["kendall_tau", "-",
                            *[""] * len(report.assessors),
                            _fmt(report.tau)]))
    return "\n".join(lines) + "\n"


def report_json(report: EvalReport) -> dict:
    payload = {
        "systems": list(report.systems),
        "assessors": list(report.assessors),
        "query_ids": list(report.query_ids),
        "ndcg_cutoff": report.ndcg_cutoff,
        "p_cutoff": report.p_cutoff,
        "ndcg": {},
        "p": {},
        "kappa": report.kappa,
        "tau": report.tau,
        "tau_per_query": dict(sorted(report.tau_per_query.items())),
    }
    for system in report.systems:
        payload["ndcg"][system] = {}
        payload["p"][system] = {}
        for assessor in report.assessors:
            payload["ndcg"][system][assessor] = {
                "per_query": report.ndcg_values[(system, assessor)],
                "average": report.ndcg_average(system, assessor),
            }
            payload["p"][system][assessor] = {
                "per_query": report.p_values[(system, assessor)],
                "average": report.p_average(system, assessor),
            }
        payload["ndcg"][system]["AVG"] = report.grand_ndcg(system)
        payload["p"][system]["AVG"] = report.grand_p(system)
    return payload


def save_report(report: EvalReport, json_path: str | Path | None = None,
                tsv_path: str | Path | None = None) -> None:
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report_json(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if tsv_path is not None:
        Path(tsv_path).write_text(report_tsv(report), encoding="utf-8")
