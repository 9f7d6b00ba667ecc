"""Label-distribution analysis: histograms, group stats, Hellinger, majority merge.

Histograms exclude erroneous entries.  Cross-annotator spread uses the
sample standard deviation (n-1 denominator), treating the annotators as a
sample of possible annotators.  The Hellinger distance between two
proportion vectors p, q is

    H(p, q) = (1 / sqrt(2)) * || sqrt(p) - sqrt(q) ||_2

which is a metric bounded in [0, 1].
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .dataset import ERRONEOUS, ClassScheme
from .errors import (
    EmptyLabelSetError,
    SchemeMismatchError,
    TooFewHistogramsError,
    UnmappedClassError,
)


@dataclass(frozen=True, eq=False)
class LabelHistogram:
    """Normalized class proportions over a scheme, in scheme class order."""

    scheme: ClassScheme
    proportions: np.ndarray
    support: int

    def __post_init__(self) -> None:
        props = np.asarray(self.proportions, dtype=np.float64)
        if props.shape != (len(self.scheme.classes),):
            raise SchemeMismatchError(
                f"expected {len(self.scheme.classes)} proportions, got {props.shape}"
            )
        if self.support > 0 and abs(props.sum() - 1.0) > 1e-12:
            raise ValueError("proportions must sum to 1")
        if (props < 0).any():
            raise ValueError("proportions must be nonnegative")
        object.__setattr__(self, "proportions", props)

    def proportion(self, class_id: str) -> float:
        return float(self.proportions[self.scheme.class_ids.index(class_id)])


@dataclass(frozen=True)
class ClassRemap:
    """Total mapping from one scheme's classes onto another's."""

    source: ClassScheme
    target: ClassScheme
    mapping: Mapping[str, str]

    def __post_init__(self) -> None:
        missing = set(self.source.class_ids) - set(self.mapping)
        if missing:
            raise UnmappedClassError(f"unmapped source classes: {sorted(missing)}")
        image = set(self.mapping.values())
        if image != set(self.target.class_ids):
            raise ValueError(
                f"mapping image {sorted(image)} must equal target classes "
                f"{sorted(self.target.class_ids)}"
            )


def remap_labels(labels: Mapping[Any, str], remap: ClassRemap) -> dict[Any, str]:
    """Apply the remap pointwise; erroneous entries pass through unchanged."""
    out = {}
    for sample, class_id in labels.items():
        if class_id == ERRONEOUS:
            out[sample] = class_id
            continue
        if class_id not in remap.mapping:
            raise UnmappedClassError(class_id)
        out[sample] = remap.mapping[class_id]
    return out


def label_histogram(labels: Mapping[Any, str], scheme: ClassScheme) -> LabelHistogram:
    """Class proportions of a label map; erroneous entries are skipped."""
    counts = np.zeros(len(scheme.classes))
    index = {cid: i for i, cid in enumerate(scheme.class_ids)}
    support = 0
    for class_id in labels.values():
        if class_id == ERRONEOUS:
            continue
        if class_id not in index:
            raise SchemeMismatchError(f"{class_id!r} not in scheme {scheme.track_name!r}")
        counts[index[class_id]] += 1
        support += 1
    if support == 0:
        raise EmptyLabelSetError("no valid labels")
    return LabelHistogram(scheme=scheme, proportions=counts / support, support=support)


def _check_same_scheme(hists: Sequence[LabelHistogram]) -> ClassScheme:
    scheme = hists[0].scheme
    for h in hists[1:]:
        if h.scheme != scheme:
            raise SchemeMismatchError(
                f"{h.scheme.track_name!r} vs {scheme.track_name!r}"
            )
    return scheme


@dataclass(frozen=True, eq=False)
class GroupStats:
    scheme: ClassScheme
    mean: np.ndarray
    sd: np.ndarray


def histogram_group_stats(hists: Sequence[LabelHistogram]) -> GroupStats:
    """Per-class mean and sample SD (n-1) of proportions across annotators."""
    if len(hists) < 2:
        raise TooFewHistogramsError("need at least 2 histograms")
    scheme = _check_same_scheme(hists)
    stack = np.stack([h.proportions for h in hists])
    return GroupStats(scheme=scheme, mean=stack.mean(axis=0), sd=stack.std(axis=0, ddof=1))


def hellinger(p: LabelHistogram, q: LabelHistogram) -> float:
    if p.scheme != q.scheme:
        raise SchemeMismatchError(f"{p.scheme.track_name!r} vs {q.scheme.track_name!r}")
    return float(np.linalg.norm(np.sqrt(p.proportions) - np.sqrt(q.proportions)) / np.sqrt(2.0))


def mean_pairwise_hellinger(hists: Sequence[LabelHistogram]) -> float:
    """Mean of H over all unordered pairs."""
    if len(hists) < 2:
        raise TooFewHistogramsError("need at least 2 histograms")
    _check_same_scheme(hists)
    total = 0.0
    pairs = 0
    for i in range(len(hists)):
        for j in range(i + 1, len(hists)):
            total += hellinger(hists[i], hists[j])
            pairs += 1
    return total / pairs


def _tie_break_rng(seed: int, sample: Any) -> np.random.Generator:
    # per-sample stream: stable under label-set permutation and iteration order
    return np.random.default_rng([seed, zlib.crc32(str(sample).encode("utf-8"))])


def merge_majority(label_sets: Sequence[Mapping[Any, str]], seed: int) -> dict[Any, str]:
    """Merge annotators' labels: strict majority, seeded uniform tie-break.

    Erroneous votes are dropped before counting; a sample whose votes are
    all erroneous is excluded from the result.  Single-vote samples keep
    their label.  Deterministic given the seed and invariant to the order
    of the label sets.
    """
    if not label_sets:
        raise ValueError("need at least one label set")
    keys: set = set()
    for labels in label_sets:
        keys.update(labels)
    merged: dict[Any, str] = {}
    for sample in keys:
        votes = [m[sample] for m in label_sets if sample in m and m[sample] != ERRONEOUS]
        if not votes:
            continue
        counts: dict[str, int] = {}
        for v in votes:
            counts[v] = counts.get(v, 0) + 1
        top = max(counts.values())
        candidates = sorted(c for c, n in counts.items() if n == top)
        if len(candidates) == 1:
            merged[sample] = candidates[0]
        else:
            rng = _tie_break_rng(seed, sample)
            merged[sample] = candidates[int(rng.integers(len(candidates)))]
    return merged
