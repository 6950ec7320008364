"""Outcome metrics, subgroup breakdowns, and distribution-comparison statistics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass
class OutcomeReport:
    """The seven per-run outcome metrics; a metric is None when its denominator is empty.

    High rating means a predicted rating of at least 4; low rating means under
    3 (so a rating of exactly 3 is in neither bucket). The matching rate is
    matched seekers over matched plus abandoned.
    """

    n_matched: int
    n_abandoned: int
    pct_high_rating: float | None
    pct_low_rating: float | None
    avg_rating: float | None
    pct_blocked_pairs: float | None
    avg_wait_matched_min: float | None
    avg_wait_unmatched_min: float | None
    matching_rate: float | None

    def to_dict(self) -> dict:
        return {
            "n_matched": self.n_matched,
            "n_abandoned": self.n_abandoned,
            "pct_high_rating": self.pct_high_rating,
            "pct_low_rating": self.pct_low_rating,
            "avg_rating": self.avg_rating,
            "pct_blocked_pairs": self.pct_blocked_pairs,
            "avg_wait_matched_min": self.avg_wait_matched_min,
            "avg_wait_unmatched_min": self.avg_wait_unmatched_min,
            "matching_rate": self.matching_rate,
        }


METRIC_KEYS = (
    "pct_high_rating",
    "pct_low_rating",
    "avg_rating",
    "pct_blocked_pairs",
    "avg_wait_matched_min",
    "avg_wait_unmatched_min",
    "matching_rate",
)

# whether a larger value is better, per metric (drives best/worst ranking)
METRIC_HIGHER_IS_BETTER = {
    "pct_high_rating": True,
    "pct_low_rating": False,
    "avg_rating": True,
    "pct_blocked_pairs": False,
    "avg_wait_matched_min": False,
    "avg_wait_unmatched_min": False,
    "matching_rate": True,
}


def compute_outcomes(match_records: Sequence, abandon_records: Sequence) -> OutcomeReport:
    """Aggregate predicted-outcome and waiting-time metrics from run records."""
    n_m, n_a = len(match_records), len(abandon_records)
    if n_m:
        ratings = np.array([r.rating_pred for r in match_records], dtype=float)
        blocks = np.array([r.block_pred for r in match_records], dtype=float)
        waits_m = np.array([r.wait_min for r in match_records], dtype=float)
        pct_high = float((ratings >= 4).mean())
        pct_low = float((ratings < 3).mean())
        avg_rating = float(ratings.mean())
        pct_blocked = float(blocks.mean())
        avg_wait_m = float(waits_m.mean())
    else:
        pct_high = pct_low = avg_rating = pct_blocked = avg_wait_m = None
    avg_wait_u = (
        float(np.mean([r.wait_min for r in abandon_records])) if n_a else None
    )
    rate = n_m / (n_m + n_a) if (n_m + n_a) else None
    return OutcomeReport(
        n_matched=n_m,
        n_abandoned=n_a,
        pct_high_rating=pct_high,
        pct_low_rating=pct_low,
        avg_rating=avg_rating,
        pct_blocked_pairs=pct_blocked,
        avg_wait_matched_min=avg_wait_m,
        avg_wait_unmatched_min=avg_wait_u,
        matching_rate=rate,
    )


SUBGROUP_KEYS = ("teen", "non_teen", "minority", "non_minority")


@dataclass
class SubgroupReport:
    """Outcome reports restricted to seeker subgroups."""

    groups: dict[str, OutcomeReport]

    def to_dict(self) -> dict:
        return {k: v.to_dict() for k, v in self.groups.items()}


def subgroup_breakdown(match_records: Sequence, abandon_records: Sequence) -> SubgroupReport:
    """compute_outcomes restricted to teen/non-teen and minority/non-minority seekers."""
    preds = {
        "teen": lambda r: r.seeker_teen,
        "non_teen": lambda r: not r.seeker_teen,
        "minority": lambda r: r.seeker_minority,
        "non_minority": lambda r: not r.seeker_minority,
    }
    groups = {}
    for key, pred in preds.items():
        groups[key] = compute_outcomes(
            [r for r in match_records if pred(r)],
            [r for r in abandon_records if pred(r)],
        )
    return SubgroupReport(groups)


def pearson(x: Iterable[float], y: Iterable[float]) -> float:
    """Product-moment correlation; rejects degenerate inputs loudly."""
    x = np.asarray(list(x), dtype=float)
    y = np.asarray(list(y), dtype=float)
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance in input series")
    return float((dx * dy).sum() / (sx * sy))


@dataclass
class HistogramComparison:
    proportions: list[float]
    reference: list[float]
    max_abs_deviation: float
    correlation: float | None

    def to_dict(self) -> dict:
        return {
            "proportions": self.proportions,
            "reference": self.reference,
            "max_abs_deviation": self.max_abs_deviation,
            "correlation": self.correlation,
        }


def histogram_compare(
    sample: Iterable[float], bucket_values: Sequence[float], reference: Sequence[float]
) -> HistogramComparison:
    """Compare a sample's bucket proportions against reference proportions.

    Buckets are exact values (e.g. rating classes 1..5); sample entries must
    all fall on a bucket value.
    """
    sample = np.asarray(list(sample))
    reference = [float(r) for r in reference]
    if len(bucket_values) != len(reference):
        raise ValueError("bucket_values and reference must align")
    props = []
    seen = 0
    for v in bucket_values:
        c = int((sample == v).sum())
        seen += c
        props.append(c / len(sample) if len(sample) else 0.0)
    if len(sample) and seen != len(sample):
        raise ValueError("sample contains values outside the given buckets")
    dev = max(abs(p - r) for p, r in zip(props, reference))
    try:
        corr = float(pearson(props, reference)) if len(props) >= 2 else 1.0
    except ValueError:  # degenerate proportions have no defined correlation
        corr = None
    return HistogramComparison(props, reference, float(dev), corr)


def mean_ci95(values: Sequence[float]) -> dict:
    """Mean with a normal-approximation 95% interval across runs."""
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if len(arr) == 0:
        return {"mean": None, "ci95": None, "n": 0}
    mean = float(arr.mean())
    if len(arr) == 1:
        return {"mean": mean, "ci95": None, "n": 1}
    half = 1.96 * float(arr.std(ddof=1)) / np.sqrt(len(arr))
    return {"mean": mean, "ci95": [mean - half, mean + half], "n": int(len(arr))}
