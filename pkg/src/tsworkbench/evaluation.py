"""Downstream evaluation: k-NN classifier, UAR scoring, learning curves.

The k-NN classifier is a deliberately simple, fully deterministic stand-in
for heavier downstream models: the point of the learning curves is to
compare sampling strategies under a fixed classifier, not to chase absolute
accuracy.  Scores are unweighted average recall (UAR), which is robust to
the class imbalance these datasets exhibit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import ERRONEOUS, Dataset
from .errors import (
    CheckpointExceedsLabelsError,
    EmptyTestSetError,
    EmptyTrainingSetError,
    MissingGroundTruthError,
    UnknownClassError,
)
from .labelstats import merge_majority
from .sampling import METRICS, COSINE, pairwise_distances
from .session import AnnotationSession

HELD_OUT = "held_out_unannotated"

STANDARD_CHECKPOINT_STEP = 50
STANDARD_CHECKPOINT_MAX = 300


def standard_checkpoints(budget: int) -> tuple[int, ...]:
    """50, 100, ..., 300 (capped at the budget), plus the budget itself."""
    points = [
        n
        for n in range(STANDARD_CHECKPOINT_STEP, STANDARD_CHECKPOINT_MAX + 1, STANDARD_CHECKPOINT_STEP)
        if n < budget
    ]
    points.append(budget)
    return tuple(points)


@dataclass(frozen=True)
class EvalProtocol:
    checkpoints: tuple[int, ...]
    n_repeats: int = 10
    k: int = 5
    metric: str = COSINE
    test_sample_ids: tuple[str, ...] | None = None   # None: held-out unannotated

    def __post_init__(self) -> None:
        if list(self.checkpoints) != sorted(set(self.checkpoints)):
            raise ValueError("checkpoints must be strictly increasing")
        if not self.checkpoints:
            raise ValueError("need at least one checkpoint")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")

    @classmethod
    def for_budget(cls, budget: int, **kwargs) -> "EvalProtocol":
        return cls(checkpoints=standard_checkpoints(budget), **kwargs)


@dataclass(frozen=True)
class Labeling:
    """One annotator's ordered labeling outcome (what a session exports)."""

    sequence: tuple[int, ...]            # first-labeling order of global indices
    labels: Mapping[int, str]            # index -> class_id or ERRONEOUS

    def first(self, n: int) -> dict[int, str]:
        if n > len(self.sequence):
            raise CheckpointExceedsLabelsError(f"{n} > {len(self.sequence)} labels")
        return {idx: self.labels[idx] for idx in self.sequence[:n]}


def labeling_from_session(session: AnnotationSession) -> Labeling:
    return Labeling(sequence=tuple(session.label_sequence), labels=dict(session.labels))


def knn_classify(
    train_features: np.ndarray,
    train_labels: Sequence[str],
    test_features: np.ndarray,
    k: int,
    metric: str,
    class_order: Sequence[str],
) -> list[str]:
    """Majority class among the k nearest training rows, per test row.

    Deterministic tie handling: neighbor ties at the k-th distance break
    toward the lower training-row index, class-count ties toward the
    earlier class in ``class_order``.  k is clamped to the training size.
    """
    train_features = np.asarray(train_features, dtype=np.float64)
    test_features = np.asarray(test_features, dtype=np.float64)
    n_train = train_features.shape[0]
    if n_train == 0:
        raise EmptyTrainingSetError("no training samples")
    if k < 1:
        raise ValueError("k must be >= 1")
    unknown = set(train_labels) - set(class_order)
    if unknown:
        raise UnknownClassError(f"labels outside class order: {sorted(unknown)}")
    k_eff = min(k, n_train)
    rank = {cid: i for i, cid in enumerate(class_order)}
    distances = pairwise_distances(test_features, train_features, metric)
    # stable sort: equal distances keep ascending train-index order
    neighbor_idx = np.argsort(distances, axis=1, kind="stable")[:, :k_eff]
    predictions: list[str] = []
    for row in neighbor_idx:
        counts: dict[str, int] = {}
        for j in row:
            counts[train_labels[j]] = counts.get(train_labels[j], 0) + 1
        top = max(counts.values())
        predictions.append(min((c for c, n in counts.items() if n == top), key=rank.__getitem__))
    return predictions


def uar(predictions: Sequence[str], truth: Sequence[str], classes: Sequence[str]) -> float:
    """Unweighted average recall over the classes present in ``truth``."""
    if len(predictions) != len(truth):
        raise ValueError(f"{len(predictions)} predictions vs {len(truth)} truths")
    if not truth:
        raise EmptyTestSetError("no test samples")
    present = [c for c in classes if c in set(truth)]
    if not present:
        raise UnknownClassError("truth uses classes outside the scheme")
    recalls = []
    for c in present:
        hits = sum(1 for p, t in zip(predictions, truth) if t == c and p == c)
        total = sum(1 for t in truth if t == c)
        recalls.append(hits / total)
    return float(np.mean(recalls))


@dataclass(frozen=True)
class CurvePoint:
    n_labels: int
    mean_score: float
    scores: tuple[float, ...]


@dataclass(frozen=True)
class LearningCurve:
    points: tuple[CurvePoint, ...]

    def mean_at(self, n_labels: int) -> float:
        for p in self.points:
            if p.n_labels == n_labels:
                return p.mean_score
        raise KeyError(n_labels)


def _resolve_test_set(
    dataset: Dataset,
    track: str,
    labelings: Sequence[Labeling],
    protocol: EvalProtocol,
) -> tuple[list[int], list[str]]:
    truth = dataset.ground_truth.get(track)
    if not truth:
        raise MissingGroundTruthError(track)
    if protocol.test_sample_ids is not None:
        ids = protocol.test_sample_ids
        missing = [s for s in ids if s not in truth]
        if missing:
            raise MissingGroundTruthError(f"no ground truth for {missing[:3]}...")
        idx = [dataset.sample_by_id(s).global_index for s in ids]
        return idx, [truth[s] for s in ids]
    annotated = set()
    for labeling in labelings:
        annotated.update(labeling.labels)
    idx = [
        s.global_index
        for s in dataset.samples
        if s.sample_id in truth and s.global_index not in annotated
    ]
    if not idx:
        raise EmptyTestSetError("every ground-truth sample was annotated")
    return idx, [truth[dataset.samples[i].sample_id] for i in idx]


def learning_curve(
    labelings: Sequence[Labeling],
    dataset: Dataset,
    track: str,
    protocol: EvalProtocol,
    seed: int = 0,
) -> LearningCurve:
    """Score against annotation-count checkpoints.

    At checkpoint n the training set is the majority merge of each
    annotator's first n labels (erroneous removed); repeats vary only the
    seeded merge tie-breaks.  The held-out test set never overlaps the
    training ids, which is re-checked on every evaluation.
    """
    if not labelings:
        raise EmptyTrainingSetError("no labelings")
    scheme = dataset.scheme(track)
    test_idx, test_truth = _resolve_test_set(dataset, track, labelings, protocol)
    test_features = dataset.features.values[test_idx]
    test_set = set(test_idx)
    points = []
    for n in protocol.checkpoints:
        prefixes = [labeling.first(n) for labeling in labelings]
        scores = []
        for repeat in range(protocol.n_repeats):
            merge_seed = int(np.random.SeedSequence([seed, n, repeat]).generate_state(1)[0])
            merged = merge_majority(prefixes, seed=merge_seed)
            train_idx = sorted(merged)
            if not train_idx:
                raise EmptyTrainingSetError(f"checkpoint {n}: all labels erroneous")
            if protocol.test_sample_ids is None:
                # held-out protocol invariant, re-checked on every evaluation
                overlap = test_set.intersection(train_idx)
                if overlap:
                    raise RuntimeError(f"test-set hygiene violated: {sorted(overlap)[:5]}")
            predictions = knn_classify(
                dataset.features.values[train_idx],
                [merged[i] for i in train_idx],
                test_features,
                protocol.k,
                protocol.metric,
                scheme.class_ids,
            )
            scores.append(uar(predictions, test_truth, scheme.class_ids))
        points.append(
            CurvePoint(n_labels=n, mean_score=float(np.mean(scores)), scores=tuple(scores))
        )
    return LearningCurve(points=tuple(points))
