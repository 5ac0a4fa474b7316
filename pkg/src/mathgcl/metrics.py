"""Retrieval metrics over graded judgments: bpref, DCG/nDCG, harmonic F1.

bpref (grades binarized at >= 3):

    score = (1/R) * sum_r (1 - min(n_above_r, min(R, N)) / min(R, N))

where R and N count judged relevant / judged irrelevant documents for the
query, r runs over judged-relevant documents that appear in the ranking,
and n_above_r counts judged-irrelevant documents ranked above r. Unjudged
documents are invisible to bpref. The counter is clipped at min(R, N),
the standard convention that keeps every term in [0, 1]; with N = 0 every
retrieved relevant document contributes a full point.

nDCG drops unjudged documents from the ranking, computes
DCG = sum_i r_i / log2(i + 1) over the first K survivors with raw grades
as gains, and normalizes by the ideal DCG of the query's judged grades
sorted descending (truncated at K).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import (EmptyIntersection, MalformedRecord, NoPositiveJudgments,
                     NoRelevantJudged, ZeroInput)

RELEVANT_THRESHOLD = 3
GRADES = (0, 1, 2, 3, 4)


@dataclass
class QrelSet:
    """(query id, formula id) -> integer grade in 0..4."""
    judgments: dict[str, dict[str, int]] = field(default_factory=dict)

    def add(self, query_id: str, formula_id: str, grade: int):
        if grade not in GRADES:
            raise ValueError(f"grade must be an integer 0..4, got {grade!r}")
        by_query = self.judgments.setdefault(query_id, {})
        if formula_id in by_query:
            raise ValueError(f"duplicate judgment for ({query_id}, {formula_id})")
        by_query[formula_id] = grade

    def for_query(self, query_id: str) -> dict[str, int]:
        return self.judgments.get(query_id, {})


def bpref(ranked_ids: list[str], qrels: dict[str, int],
          threshold: int = RELEVANT_THRESHOLD) -> float:
    relevant = {d for d, g in qrels.items() if g >= threshold}
    irrelevant = {d for d, g in qrels.items() if g < threshold}
    big_r, big_n = len(relevant), len(irrelevant)
    if big_r == 0:
        raise NoRelevantJudged("query has no judged-relevant documents")
    denom = min(big_r, big_n)
    total = 0.0
    n_above = 0
    for doc in ranked_ids:
        if doc in irrelevant:
            n_above += 1
        elif doc in relevant:
            total += 1.0 if denom == 0 else 1.0 - min(n_above, denom) / denom
    return total / big_r


def dcg(grades: list[int], k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return sum(g / math.log2(i + 1) for i, g in enumerate(grades[:k], start=1))


def ndcg(ranked_ids: list[str], qrels: dict[str, int], k: int = 1000) -> float:
    if all(g == 0 for g in qrels.values()) or not qrels:
        raise NoPositiveJudgments("ideal DCG would be zero")
    judged = [qrels[d] for d in ranked_ids if d in qrels]
    ideal = sorted(qrels.values(), reverse=True)
    return dcg(judged, k) / dcg(ideal, k)


def f1_combine(slt_score: float, opt_score: float) -> float:
    """Harmonic mean of the SLT and OPT scores."""
    if slt_score <= 0.0 or opt_score <= 0.0:
        raise ZeroInput("harmonic mean needs strictly positive inputs")
    return 2.0 * slt_score * opt_score / (slt_score + opt_score)


# --------------------------------------------------------------------------
# Run evaluation
# --------------------------------------------------------------------------

@dataclass
class MetricReport:
    per_query_bpref: list[dict[str, float]]        # one dict per trial
    per_query_ndcg: list[dict[str, float]]
    mean_bpref: float
    mean_ndcg: float
    std_bpref: float                                # sample std across trials
    std_ndcg: float
    trials: int

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "bpref": {"mean": self.mean_bpref, "std": self.std_bpref,
                      "per_query": self.per_query_bpref},
            "ndcg": {"mean": self.mean_ndcg, "std": self.std_ndcg,
                     "per_query": self.per_query_ndcg},
        }


def _mean(values):
    return sum(values) / len(values)


def _sample_std(values):
    if len(values) < 2:
        return 0.0
    m = _mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / (len(values) - 1))


def evaluate_run(runs: list[dict[str, list[str]]], qrels: QrelSet,
                 k: int = 1000) -> MetricReport:
    """Score one or more trials (query -> ranked ids) against judgments.

    Per trial, the mean is over queries judged in qrels; queries without a
    judged-relevant document are skipped for bpref, queries with all-zero
    grades are skipped for nDCG. Across trials the report carries mean and
    sample standard deviation (n - 1).
    """
    if not runs:
        raise EmptyIntersection("no runs given")
    per_bpref: list[dict[str, float]] = []
    per_ndcg: list[dict[str, float]] = []
    trial_bpref_means: list[float] = []
    trial_ndcg_means: list[float] = []
    for run in runs:
        bprefs: dict[str, float] = {}
        ndcgs: dict[str, float] = {}
        for query_id, ranked in run.items():
            judgments = qrels.for_query(query_id)
            if not judgments:
                continue
            try:
                bprefs[query_id] = bpref(ranked, judgments)
            except NoRelevantJudged:
                pass
            try:
                ndcgs[query_id] = ndcg(ranked, judgments, k)
            except NoPositiveJudgments:
                pass
        if not bprefs and not ndcgs:
            raise EmptyIntersection("no run query has usable judgments")
        per_bpref.append(bprefs)
        per_ndcg.append(ndcgs)
        if bprefs:
            trial_bpref_means.append(_mean(list(bprefs.values())))
        if ndcgs:
            trial_ndcg_means.append(_mean(list(ndcgs.values())))
    return MetricReport(
        per_query_bpref=per_bpref,
        per_query_ndcg=per_ndcg,
        mean_bpref=_mean(trial_bpref_means) if trial_bpref_means else float("nan"),
        mean_ndcg=_mean(trial_ndcg_means) if trial_ndcg_means else float("nan"),
        std_bpref=_sample_std(trial_bpref_means),
        std_ndcg=_sample_std(trial_ndcg_means),
        trials=len(runs),
    )


# --------------------------------------------------------------------------
# File formats: whitespace-separated qrels and TREC-style runs
# --------------------------------------------------------------------------

def read_qrels(path) -> QrelSet:
    qrels = QrelSet()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            raw = raw.strip()
            if not raw:
                continue
            parts = raw.split()
            if len(parts) != 3:
                raise MalformedRecord("qrels line needs: query_id formula_id grade",
                                      line=lineno)
            try:
                grade = int(parts[2])
                qrels.add(parts[0], parts[1], grade)
            except ValueError as exc:
                raise MalformedRecord(str(exc), line=lineno) from exc
    return qrels


def write_qrels(path, qrels: QrelSet):
    with open(path, "w", encoding="utf-8") as fh:
        for query_id in sorted(qrels.judgments):
            for formula_id, grade in sorted(qrels.judgments[query_id].items()):
                fh.write(f"{query_id} {formula_id} {grade}\n")


def read_run(path) -> dict[str, list[str]]:
    """Read `query_id formula_id rank score` lines into ranked id lists."""
    rows: dict[str, list[tuple[int, str]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            raw = raw.strip()
            if not raw:
                continue
            parts = raw.split()
            if len(parts) != 4:
                raise MalformedRecord("run line needs: query_id formula_id rank score",
                                      line=lineno)
            try:
                rank = int(parts[2])
                float(parts[3])
            except ValueError as exc:
                raise MalformedRecord(f"bad rank/score: {exc}", line=lineno) from exc
            rows.setdefault(parts[0], []).append((rank, parts[1]))
    return {q: [doc for _, doc in sorted(entries)] for q, entries in rows.items()}


def report_to_json(report: MetricReport, extras: dict | None = None) -> str:
    payload = report.to_dict()
    if extras:
        payload.update(extras)
    return json.dumps(payload, indent=2, sort_keys=True)
