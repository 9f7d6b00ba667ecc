"""Algorithmic sample selection: seeded random orders and farthest-first traversal.

Farthest-first traversal (the greedy k-center heuristic) grows a selected
set by repeatedly taking the point whose distance to the set

    d(x, A) = min_{y in A} d(x, y)

is largest.  The incremental implementation keeps a nearest-selected-distance
array and refreshes it with one distance evaluation per (new point, candidate)
pair, so a budget-B run costs O(B * N) distance evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix
from .errors import BudgetExceedsPopulationError, LengthMismatchError

RND = "RND"
FAFT = "FAFT"
TWO_DV = "2DV"
METHODS = (RND, FAFT, TWO_DV)

COSINE = "cosine"
EUCLIDEAN = "euclidean"
METRICS = (COSINE, EUCLIDEAN)


@dataclass(frozen=True)
class SampleOrder:
    """A deterministic annotation order over global indices."""

    method: str
    order: tuple[int, ...]
    seed: int
    metric: str | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.metric is not None and self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if len(set(self.order)) != len(self.order):
            raise ValueError("order contains duplicate indices")


def _as_array(features: FeatureMatrix | np.ndarray) -> np.ndarray:
    values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features)
    return np.asarray(values, dtype=np.float64)


def _unit_rows(rows: np.ndarray) -> np.ndarray:
    """Rows scaled to unit length; all-zero rows stay zero.

    Peak-scales each row before taking its norm so that vectors whose
    squared components would under- or overflow still normalize correctly
    (cosine similarity is scale-invariant).
    """
    peak = np.max(np.abs(rows), axis=1, keepdims=True)
    scaled = np.divide(rows, peak, out=np.zeros_like(rows), where=peak > 0)
    norms = np.linalg.norm(scaled, axis=1, keepdims=True)
    return np.divide(scaled, norms, out=np.zeros_like(rows), where=norms > 0)


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), clamped to [0, 2].

    If either vector is all-zero the angle is undefined; by convention the
    distance is then 1, the value for orthogonal vectors.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise LengthMismatchError(f"{u.shape} vs {v.shape}")
    uu = _unit_rows(u[None, :])[0]
    vv = _unit_rows(v[None, :])[0]
    if not uu.any() or not vv.any():
        return 1.0
    return float(np.clip(1.0 - float(uu @ vv), 0.0, 2.0))


def distances_to_point(features: np.ndarray, idx: int, metric: str) -> np.ndarray:
    """Distances from every row of ``features`` to row ``idx``."""
    x = features[idx]
    if metric == EUCLIDEAN:
        diff = features - x
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if metric != COSINE:
        raise ValueError(f"unknown metric {metric!r}")
    unit = _unit_rows(features)
    out = np.full(features.shape[0], 1.0)
    if not unit[idx].any():
        return out
    nonzero = unit.any(axis=1)
    out[nonzero] = np.clip(1.0 - unit[nonzero] @ unit[idx], 0.0, 2.0)
    return out


def pairwise_distances(a: np.ndarray, b: np.ndarray, metric: str) -> np.ndarray:
    """Full |a| x |b| distance matrix under ``metric`` (zero-vector rule applies)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[1]:
        raise LengthMismatchError(f"{a.shape[1]} vs {b.shape[1]} dims")
    if metric == EUCLIDEAN:
        sq = (
            np.sum(a * a, axis=1)[:, None]
            + np.sum(b * b, axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        return np.sqrt(np.maximum(sq, 0.0))
    if metric != COSINE:
        raise ValueError(f"unknown metric {metric!r}")
    ua = _unit_rows(a)
    ub = _unit_rows(b)
    out = np.full((a.shape[0], b.shape[0]), 1.0)
    rows = ua.any(axis=1)
    cols = ub.any(axis=1)
    if rows.any() and cols.any():
        sub = 1.0 - ua[rows] @ ub[cols].T
        out[np.ix_(rows, cols)] = np.clip(sub, 0.0, 2.0)
    return out


def sample_random(n_total: int, budget: int, seed: int) -> SampleOrder:
    """A seeded uniform sample without replacement, drawn sequentially.

    Sequential draws give the prefix property: the first k elements of a
    budget-B order equal the full order of a budget-k run with the same
    seed, so learning-curve checkpoints slice valid uniform subsamples.
    """
    if not 0 < budget <= n_total:
        raise BudgetExceedsPopulationError(f"budget {budget} of population {n_total}")
    gen = np.random.default_rng(seed)
    pool = np.arange(n_total)
    for t in range(budget):
        j = t + int(gen.integers(n_total - t))
        pool[t], pool[j] = pool[j], pool[t]
    return SampleOrder(method=RND, order=tuple(int(i) for i in pool[:budget]), seed=seed)


def sample_faft(
    features: FeatureMatrix | np.ndarray,
    budget: int,
    seed: int,
    metric: str = COSINE,
) -> SampleOrder:
    """Farthest-first traversal over the feature rows.

    The first pick consumes exactly one draw from the seeded generator (the
    same draw sample_random would make), so per-annotator seeds stay
    comparable across methods.  Ties in the argmax break toward the lowest
    global index.
    """
    values = _as_array(features)
    n = values.shape[0]
    if not 0 < budget <= n:
        raise BudgetExceedsPopulationError(f"budget {budget} of population {n}")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    gen = np.random.default_rng(seed)
    first = int(gen.integers(n))
    order = [first]
    if budget > 1:
        nearest = distances_to_point(values, first, metric)
        nearest[first] = -np.inf
        for _ in range(budget - 1):
            nxt = int(np.argmax(nearest))  # first occurrence: lowest index wins ties
            order.append(nxt)
            nearest = np.minimum(nearest, distances_to_point(values, nxt, metric))
            nearest[nxt] = -np.inf
    return SampleOrder(method=FAFT, order=tuple(order), seed=seed, metric=metric)
