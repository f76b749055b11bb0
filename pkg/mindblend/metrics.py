"""
mindblend.metrics — AUC, MRR and nDCG@k per impression and averaged.

Relevance is binary (clicked = 1). Per impression:
    AUC       P(random clicked candidate outscores random non-clicked one), ties 1/2
    RR        1 / position of the first clicked candidate
    nDCG@k    DCG@k / IDCG@k with DCG@k = sum_{p<=k} label_p / log2(p + 1)

Impressions where a metric is undefined (AUC without both label classes,
RR/nDCG without a click) are excluded from that metric's mean; the
denominators are reported.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional, Sequence, Union

import numpy as np
from sklearn.metrics import roc_auc_score

from exceptions import AlignmentError, UndefinedMetricError, UsageError
from logger import get_logger
from mindblend.dataset import BehaviorSet, Impression
from mindblend.ensemble import RankedList, rank_order
from mindblend.learners import ScoreTable

logger = get_logger(__name__)


class Metric(str, Enum):
    AUC = "auc"
    MRR = "mrr"
    NDCG5 = "ndcg5"
    NDCG10 = "ndcg10"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def k(self) -> Optional[int]:
        return {Metric.NDCG5: 5, Metric.NDCG10: 10}.get(self)

    @classmethod
    def parse(cls, text: str) -> "Metric":
        """Accept auc, MRR, ndcg5, nDCG@10, ...

        Raises:
            UsageError: unknown metric or unsupported nDCG cutoff.
        """
        key = text.strip().lower().replace("@", "")
        for metric in cls:
            if key == metric.value:
                return metric
        if key.startswith("ndcg"):
            raise UsageError(
                f"Unsupported nDCG cutoff in {text!r}", context={"supported": "5, 10"}
            )
        raise UsageError(
            f"Unknown metric {text!r}", context={"allowed": ", ".join(m.value for m in cls)}
        )


_LABELS = {
    Metric.AUC: "AUC",
    Metric.MRR: "MRR",
    Metric.NDCG5: "nDCG@5",
    Metric.NDCG10: "nDCG@10",
}


# ─── TYPES ────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LabeledRanking:
    """Labels best-first; scores (optional) in the same order."""
    labels: tuple[int, ...]
    scores: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("LabeledRanking needs at least one item")
        if any(label not in (0, 1) for label in self.labels):
            raise ValueError("labels must be binary")
        if self.scores is not None and len(self.scores) != len(self.labels):
            raise ValueError("scores and labels differ in length")

    @property
    def has_relevant(self) -> bool:
        return any(self.labels)


@dataclass(frozen=True)
class ImpressionMetrics:
    impression_id: str
    auc: Optional[float]
    mrr: Optional[float]
    ndcg5: Optional[float]
    ndcg10: Optional[float]

    def get(self, metric: Metric) -> Optional[float]:
        return getattr(self, metric.value)  # type: ignore[no-any-return]


@dataclass
class MetricReport:
    """Metric means over eligible impressions plus per-impression detail.

    All metrics are computed; `reported` only limits what the text and YAML
    forms show.
    """
    means: dict[Metric, Optional[float]]
    counts: dict[Metric, int]
    total: int
    details: list[ImpressionMetrics] = field(default_factory=list)
    reported: tuple[Metric, ...] = tuple(Metric)

    def mean(self, metric: Metric) -> Optional[float]:
        return self.means.get(metric)

    def select(self, metrics: Sequence[Metric]) -> "MetricReport":
        """Same values, reporting only metrics, in the given order."""
        return replace(self, reported=tuple(dict.fromkeys(metrics)))

    def to_text(self, title: str = "") -> str:
        lines = []
        if title:
            lines.append(title)
        lines.append(f"{'Metric':<8} {'Value':>8} {'N':>8}")
        for metric in self.reported:
            value = self.means[metric]
            shown = f"{value:.4f}" if value is not None else "n/a"
            lines.append(f"{metric.label:<8} {shown:>8} {self.counts[metric]:>8}")
        lines.append(f"{'total':<8} {'':>8} {self.total:>8}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict[str, Any]:
        return {
            "impressions": self.total,
            "metrics": {
                m.label: {"value": self.means[m], "eligible": self.counts[m]}
                for m in self.reported
            },
        }


# ─── PER-IMPRESSION METRICS ───────────────────────────────────────────────────


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve; Mann-Whitney with ties counted 1/2.

    Raises:
        UndefinedMetricError: labels lack a positive or a negative.
    """
    y = np.asarray(labels, dtype=np.int64)
    if y.size == 0 or y.min() == y.max():
        raise UndefinedMetricError(
            "AUC needs at least one positive and one negative label",
            context={"positives": int(y.sum()), "n": int(y.size)},
        )
    return float(roc_auc_score(y, np.asarray(scores, dtype=np.float64)))


def reciprocal_rank(ranking: LabeledRanking) -> float:
    if not ranking.has_relevant:
        raise UndefinedMetricError("Reciprocal rank needs a relevant item")
    return 1.0 / (ranking.labels.index(1) + 1)


def mrr(rankings: Sequence[LabeledRanking]) -> float:
    """Mean reciprocal rank over rankings that contain a relevant item.

    Raises:
        UndefinedMetricError: no ranking contains a relevant item.
    """
    eligible = [reciprocal_rank(r) for r in rankings if r.has_relevant]
    excluded = len(rankings) - len(eligible)
    if excluded:
        logger.debug("MRR excluded %d ranking(s) without a relevant item", excluded)
    if not eligible:
        raise UndefinedMetricError("MRR undefined: no ranking has a relevant item",
                                   context={"excluded": excluded})
    return math.fsum(eligible) / len(eligible)


def _dcg(labels: np.ndarray, k: int) -> float:
    top = labels[:k]
    discounts = np.log2(np.arange(2, top.size + 2, dtype=np.float64))
    return float(np.sum(top / discounts))


def ndcg_at_k(ranking: LabeledRanking, k: int) -> float:
    """
    Raises:
        UndefinedMetricError: no relevant item.
    """
    if k < 1:
        raise UsageError(f"nDCG cutoff must be positive, got {k}")
    if not ranking.has_relevant:
        raise UndefinedMetricError("nDCG needs a relevant item")
    labels = np.asarray(ranking.labels, dtype=np.float64)
    ideal = np.sort(labels)[::-1]
    return _dcg(labels, k) / _dcg(ideal, k)


# ─── EVALUATION ───────────────────────────────────────────────────────────────


def _ranked_from_table(table: ScoreTable, imp: Impression) -> RankedList:
    scores = table.scores_for(imp)
    return rank_order(imp.impression_id, dict(zip(imp.candidate_ids, scores.tolist())))


def impression_metrics(ranked: RankedList, impression: Impression) -> ImpressionMetrics:
    """All metrics for one impression; undefined values are None."""
    label_of = dict(zip(impression.candidate_ids, impression.labels))
    labels = tuple(label_of[a] for a in ranked.articles)
    ranking = LabeledRanking(labels=labels, scores=ranked.scores)

    auc_value: Optional[float] = None
    if 0 < sum(labels) < len(labels):
        auc_value = auc(ranked.scores, labels)
    if not ranking.has_relevant:
        return ImpressionMetrics(impression.impression_id, auc_value, None, None, None)
    return ImpressionMetrics(
        impression_id=impression.impression_id,
        auc=auc_value,
        mrr=reciprocal_rank(ranking),
        ndcg5=ndcg_at_k(ranking, 5),
        ndcg10=ndcg_at_k(ranking, 10),
    )


def check_alignment(ranked: Sequence[RankedList], behaviors: BehaviorSet) -> None:
    """Raise AlignmentError at the first impression id or candidate-set mismatch."""
    for position, imp in enumerate(behaviors, start=1):
        if position > len(ranked):
            raise AlignmentError(position, imp.impression_id, None)
        got = ranked[position - 1]
        if got.impression_id != imp.impression_id:
            raise AlignmentError(position, imp.impression_id, got.impression_id)
        if sorted(got.articles) != sorted(imp.candidate_ids):
            raise AlignmentError(
                position, imp.impression_id, f"{got.impression_id} (candidate set differs)"
            )
    if len(ranked) > len(behaviors):
        raise AlignmentError(len(behaviors) + 1, None, ranked[len(behaviors)].impression_id)


def evaluate(
    predictions: Union[Sequence[RankedList], ScoreTable],
    behaviors: BehaviorSet,
    workers: int = 1,
) -> MetricReport:
    """Per-impression metrics and their means, reduced in behaviors-file order.

    Raises:
        CoverageError: score table misses a candidate pair.
        AlignmentError: ranked lists out of step with behaviors.
    """
    if isinstance(predictions, ScoreTable):
        predictions.check_coverage(behaviors)
        ranked = [_ranked_from_table(predictions, imp) for imp in behaviors]
    else:
        ranked = list(predictions)
        check_alignment(ranked, behaviors)

    pairs = list(zip(ranked, behaviors))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            details = list(pool.map(lambda p: impression_metrics(*p), pairs))
    else:
        details = [impression_metrics(r, imp) for r, imp in pairs]

    means: dict[Metric, Optional[float]] = {}
    counts: dict[Metric, int] = {}
    for metric in Metric:
        values = [v for d in details if (v := d.get(metric)) is not None]
        counts[metric] = len(values)
        means[metric] = math.fsum(values) / len(values) if values else None

    skipped = len(details) - counts[Metric.AUC]
    if skipped:
        logger.info("%d impression(s) excluded from AUC (single label class)", skipped)
    return MetricReport(means=means, counts=counts, total=len(details), details=details)
