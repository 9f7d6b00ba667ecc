"""Failure-risk analysis: three failure metrics, dense ranking, combined scores.

Per condition (dataset task x annotator group x annotator count), each
method gets a rank per applicable metric; a method's combined risk score is
the plain sum of its ranks across metrics (and across classification tasks
when task-summed).  Lower scores mean lower risk.  The three metrics:

* cov - rare-class coverage failures: a method (or annotator) captured less
  than half the reference proportion of the rarest class.
* mod - model performance failures: a score fell strictly below 0.9 times
  the best score in the same configuration.
* dis - label distribution instability: mean pairwise Hellinger distance
  between annotators' histograms.

Two-annotator conditions never include mod (no pairwise fine-tuning runs
exist there), which the condition constructor enforces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import (
    EmptyInputError,
    IncompleteRankTableError,
    NoRareClassError,
    SchemeMismatchError,
)
from .labelstats import LabelHistogram, mean_pairwise_hellinger

COV = "cov"
MOD = "mod"
DIS = "dis"
ALL_METRICS = (COV, MOD, DIS)

PERFORMANCE_FAILURE_FACTOR = 0.9
RARE_THRESHOLD = 0.10


@dataclass(frozen=True)
class RiskCondition:
    """One analysis condition and the metric set that applies to it."""

    task: str
    annotator_group: str            # "expert" | "non_expert" | "all"
    n_annotators: int
    metrics: tuple[str, ...] = ALL_METRICS

    def __post_init__(self) -> None:
        if self.annotator_group not in ("expert", "non_expert", "all"):
            raise ValueError(f"bad annotator_group {self.annotator_group!r}")
        unknown = set(self.metrics) - set(ALL_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}")
        if self.n_annotators < 1:
            raise ValueError("n_annotators must be >= 1")
        if self.n_annotators == 2 and MOD in self.metrics:
            object.__setattr__(
                self, "metrics", tuple(m for m in self.metrics if m != MOD)
            )


def detect_performance_failure(
    perf_by_method: Mapping[str, Sequence[float]],
) -> dict[str, int]:
    """Count, per method, the scores strictly below 0.9x the configuration best.

    The reference is the single best value across every method in the
    input; values exactly at the threshold are not failures.
    """
    values = [v for vs in perf_by_method.values() for v in vs]
    if not values:
        raise EmptyInputError("no performance values")
    threshold = PERFORMANCE_FAILURE_FACTOR * max(values)
    return {
        method: sum(1 for v in vs if v < threshold)
        for method, vs in perf_by_method.items()
    }


def detect_rare_class_failure(
    h: LabelHistogram,
    reference: LabelHistogram,
    rare_threshold: float = RARE_THRESHOLD,
) -> tuple[tuple[str, ...], bool]:
    """Rare classes of the reference, and whether ``h`` fails to cover them.

    Multi-class tasks: rare classes are those under ``rare_threshold`` in
    the reference.  Binary tasks: the single lowest-proportion class.
    Failure iff the measured proportion of the rarest class is strictly
    below half its reference proportion.
    """
    if h.scheme != reference.scheme:
        raise SchemeMismatchError(
            f"{h.scheme.track_name!r} vs {reference.scheme.track_name!r}"
        )
    ids = reference.scheme.class_ids
    props = reference.proportions
    if len(ids) == 2:
        rare = (ids[int(props.argmin())],)
    else:
        rare = tuple(cid for cid, p in zip(ids, props) if p < rare_threshold)
        if not rare:
            raise NoRareClassError(
                f"no class below {rare_threshold:.0%} in the reference distribution"
            )
    rarest = min(rare, key=reference.proportion)
    failure = h.proportion(rarest) < reference.proportion(rarest) / 2.0
    return rare, failure


def instability(
    hists_by_method: Mapping[str, Sequence[LabelHistogram]],
) -> dict[str, float]:
    """Mean pairwise Hellinger distance of annotator histograms, per method."""
    return {m: mean_pairwise_hellinger(hs) for m, hs in hists_by_method.items()}


def dense_rank(values: Mapping[str, float], lower_is_better: bool = True) -> dict[str, int]:
    """Rank 1 for the best value; exact ties share; ranks step by one."""
    if not values:
        raise EmptyInputError("no values to rank")
    distinct = sorted(set(values.values()), reverse=not lower_is_better)
    position = {v: r for r, v in enumerate(distinct, start=1)}
    return {method: position[v] for method, v in values.items()}


def combined_risk_score(
    rank_tables: Mapping[object, Mapping[str, float]],
) -> tuple[dict[str, float], str]:
    """Sum ranks across tables; returns (scores, rendered ordering string)."""
    if not rank_tables:
        raise IncompleteRankTableError("no rank tables")
    tables = list(rank_tables.values())
    methods = set(tables[0])
    for table in tables[1:]:
        if set(table) != methods:
            raise IncompleteRankTableError(
                f"method sets differ: {sorted(methods)} vs {sorted(table)}"
            )
    scores = {m: float(sum(table[m] for table in tables)) for m in methods}
    return scores, format_ranking(scores)


def format_ranking(scores: Mapping[str, float]) -> str:
    """Render ascending by score with '=' between ties, e.g. "A (1.0) > B (2.0)"."""
    ordered = sorted(scores.items(), key=lambda kv: (kv[1], kv[0]))
    parts: list[str] = []
    previous: float | None = None
    for method, score in ordered:
        if previous is None:
            sep = ""
        elif score == previous:
            sep = " = "
        else:
            sep = " > "
        parts.append(f"{sep}{method} ({score:.1f})")
        previous = score
    return "".join(parts)


@dataclass(frozen=True)
class RiskReport:
    """Ranked methods for one condition, with the raw values behind the ranks."""

    condition: RiskCondition
    raw_values: Mapping[object, Mapping[str, float]]   # (task, metric) -> method -> value
    ranks: Mapping[object, Mapping[str, int]]
    scores: Mapping[str, float]
    ordering: str
    metadata: Mapping[str, object] = field(default_factory=dict)


def build_risk_report(
    condition: RiskCondition,
    values: Mapping[str, Mapping[str, Mapping[str, float]]],
    metadata: Mapping[str, object] | None = None,
) -> RiskReport:
    """Dense-rank raw metric values and sum them into a combined score.

    ``values`` maps classification task -> metric -> method -> raw value
    (lower is better for all three metrics).  Metrics outside the
    condition's metric set are ignored, so callers can pass full tables to
    two-annotator conditions.
    """
    raw: dict[object, dict[str, float]] = {}
    ranks: dict[object, dict[str, int]] = {}
    for task in sorted(values):
        for metric in sorted(values[task]):
            if metric not in condition.metrics:
                continue
            table = dict(values[task][metric])
            raw[(task, metric)] = table
            ranks[(task, metric)] = dense_rank(table, lower_is_better=True)
    scores, ordering = combined_risk_score(ranks)
    return RiskReport(
        condition=condition,
        raw_values=raw,
        ranks=ranks,
        scores=scores,
        ordering=ordering,
        metadata=metadata or {},
    )
