"""Simulated annotators and synthetic datasets for end-to-end pipeline runs.

A simulated annotator follows its method's selection rule and labels each
selected sample with the ground truth, flipping to a different class with
probability ``noise_rate``.  Free-form (2DV) annotators can be biased
toward a region of a 2D projection, imitating annotators who concentrate
on one part of the embedding: selection then proceeds from the region
center outward instead of uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dataset import (
    ClassDef,
    ClassScheme,
    Dataset,
    FeatureMatrix,
    Sample,
)
from .errors import MissingGroundTruthError
from .projection import Projection2D
from .sampling import COSINE, TWO_DV
from .session import AnnotationSession, SessionConfig, create_session


@dataclass(frozen=True)
class RegionBias:
    """Focus free-form selection around a point of a projection."""

    projection: Projection2D
    center: tuple[float, float]
    radius: float


def simulate_annotation(
    dataset: Dataset,
    track: str,
    method: str,
    budget: int,
    seed: int,
    noise_rate: float = 0.0,
    region_bias: RegionBias | None = None,
    annotator_id: str = "sim",
    annotator_group: str = "expert",
    metric: str = COSINE,
    clock: Callable[[], float] | None = None,
) -> AnnotationSession:
    """Run one simulated annotator to completion and return its session."""
    truth = dataset.ground_truth.get(track)
    if not truth:
        raise MissingGroundTruthError(track)
    if not 0.0 <= noise_rate <= 1.0:
        raise ValueError("noise_rate must lie in [0, 1]")
    scheme = dataset.scheme(track)
    cfg = SessionConfig(
        dataset_name=dataset.name,
        track=track,
        method=method,
        budget=budget,
        seed=seed,
        annotator_id=annotator_id,
        annotator_group=annotator_group,
    )
    session = create_session(dataset, cfg, metric=metric, clock=clock)
    class_ids = scheme.class_ids

    def pick_label(idx: int) -> str:
        true = truth[dataset.samples[idx].sample_id]
        if noise_rate > 0.0 and session.rng.random() < noise_rate:
            others = [c for c in class_ids if c != true]
            return others[int(session.rng.integers(len(others)))]
        return true

    if method == TWO_DV:
        selection = _free_form_selection(session, dataset, budget, region_bias)
        for idx in selection:
            session.navigate("select", idx)
            session.assign_label(idx, pick_label(idx))
    else:
        for _ in range(budget):
            idx = session.current_index
            session.assign_label(idx, pick_label(idx))
    return session


def _free_form_selection(
    session: AnnotationSession,
    dataset: Dataset,
    budget: int,
    region_bias: RegionBias | None,
) -> list[int]:
    n = dataset.n_samples
    if region_bias is not None:
        coords = region_bias.projection.coords
        center = np.asarray(region_bias.center, dtype=np.float64)
        dist = np.linalg.norm(coords - center, axis=1)
        # nearest-to-center first: region points come before everything else
        return [int(i) for i in np.argsort(dist, kind="stable")[:budget]]
    pool = np.arange(n)
    picks = []
    for t in range(budget):
        j = t + int(session.rng.integers(n - t))
        pool[t], pool[j] = pool[j], pool[t]
        picks.append(int(pool[t]))
    return picks


_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def make_clustered_dataset(
    n_samples: int = 3000,
    n_classes: int = 3,
    n_dims: int = 8,
    seed: int = 0,
    spread: float = 0.5,
    separation: float = 10.0,
    proportions: Sequence[float] | None = None,
    track: str = "cluster",
    name: str = "synthetic-clusters",
) -> Dataset:
    """Gaussian class clusters with ground truth, for pipeline tests.

    Cluster centers sit on scaled coordinate axes, so the classes are
    separated under both euclidean and cosine distance.
    """
    if n_classes < 2 or n_classes > min(n_dims, len(_PALETTE)):
        raise ValueError("n_classes must be in [2, min(n_dims, palette size)]")
    gen = np.random.default_rng(seed)
    if proportions is None:
        proportions = [1.0 / n_classes] * n_classes
    proportions = np.asarray(proportions, dtype=np.float64)
    proportions = proportions / proportions.sum()
    assignments = gen.choice(n_classes, size=n_samples, p=proportions)
    centers = np.zeros((n_classes, n_dims))
    for c in range(n_classes):
        centers[c, c] = separation
    features = centers[assignments] + gen.normal(scale=spread, size=(n_samples, n_dims))
    class_ids = [f"class_{c}" for c in range(n_classes)]
    scheme = ClassScheme(
        track_name=track,
        classes=tuple(
            ClassDef(
                class_id=class_ids[c],
                display_name=class_ids[c].replace("_", " "),
                color=_PALETTE[c],
                shortcut_key=str((c + 1) % 10),
            )
            for c in range(n_classes)
        ),
        allows_erroneous=True,
    )
    samples = [
        Sample(sample_id=f"s{i:05d}", global_index=i, media_refs=(), duration_s=2.3)
        for i in range(n_samples)
    ]
    ground_truth = {
        track: {samples[i].sample_id: class_ids[assignments[i]] for i in range(n_samples)}
    }
    return Dataset(
        name=name,
        samples=samples,
        features=FeatureMatrix(features),
        schemes=[scheme],
        ground_truth=ground_truth,
    )
