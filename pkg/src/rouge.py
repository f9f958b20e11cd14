from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from nltk.util import ngrams

from .constants import BOOTSTRAP_RESAMPLES
from .errors import EmptyList
from .models import EvaluationReport, MetricSummary, RougeScore

METRICS = ("rouge1", "rouge2", "rougeL")

Pair = Tuple[Sequence[str], Sequence[str]]


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(ngrams(tokens, n))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int = 1) -> RougeScore:
    """Clipped n-gram overlap between a candidate and a reference."""
    if n not in (1, 2):
        raise ValueError(f"ROUGE-N is defined here for n in (1, 2), got {n}")
    cand = _ngram_counts(candidate, n)
    ref = _ngram_counts(reference, n)
    overlap = sum((cand & ref).values())
    return RougeScore.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    return RougeScore.from_counts(lcs_length(candidate, reference), len(candidate), len(reference))


def score_pair(candidate: Sequence[str], reference: Sequence[str]) -> Dict[str, RougeScore]:
    return {
        "rouge1": rouge_n(candidate, reference, 1),
        "rouge2": rouge_n(candidate, reference, 2),
        "rougeL": rouge_l(candidate, reference),
    }


def bootstrap_interval(values: Sequence[float], resamples: int = BOOTSTRAP_RESAMPLES,
                       seed: int = 12345, confidence: float = 0.95) -> Tuple[float, float]:
    """Percentile bootstrap interval of the mean."""
    values = np.asarray(values, dtype=np.float64)
    rng = np.random.default_rng(seed)
    means = values[rng.integers(0, len(values), size=(resamples, len(values)))].mean(axis=1)
    tail = (1.0 - confidence) / 2 * 100
    low, high = np.percentile(means, [tail, 100 - tail])
    return float(low), float(high)


def corpus_rouge(pairs: Sequence[Pair], resamples: int = BOOTSTRAP_RESAMPLES,
                 seed: int = 12345) -> Dict[str, MetricSummary]:
    """Mean per-pair F1 for each metric with a seeded 95% bootstrap interval, on the [0, 1] scale."""
    if not pairs:
        raise EmptyList("cannot aggregate ROUGE over zero pairs")
    scored = [score_pair(cand, ref) for cand, ref in pairs]
    summary = {}
    for metric in METRICS:
        f1 = [s[metric].f1 for s in scored]
        low, high = bootstrap_interval(f1, resamples, seed)
        summary[metric] = MetricSummary(mean_f1=float(np.mean(f1)), ci_low=low, ci_high=high)
    return summary


def _points(summary: Dict[str, MetricSummary]) -> Dict[str, MetricSummary]:
    return {name: MetricSummary(mean_f1=100 * m.mean_f1, ci_low=100 * m.ci_low, ci_high=100 * m.ci_high)
            for name, m in summary.items()}


def evaluation_report(pairs: Sequence[Pair], body_parts: Optional[Sequence[str]] = None,
                      resamples: int = BOOTSTRAP_RESAMPLES, seed: int = 12345) -> EvaluationReport:
    """Corpus ROUGE in points, broken down by body part when one is given per pair."""
    overall = _points(corpus_rouge(pairs, resamples, seed))
    by_part: Dict[str, Dict[str, MetricSummary]] = {}
    if body_parts is not None:
        groups: Dict[str, List[Pair]] = {}
        for pair, part in zip(pairs, body_parts):
            groups.setdefault(part, []).append(pair)
        by_part = {part: _points(corpus_rouge(group, resamples, seed)) for part, group in sorted(groups.items())}
    return EvaluationReport(rouge1=overall["rouge1"], rouge2=overall["rouge2"], rougeL=overall["rougeL"],
                            count=len(pairs), by_body_part=by_part)
