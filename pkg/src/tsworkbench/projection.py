"""Named 2D embeddings of the feature matrix: PCA, exact t-SNE, and imports.

PCA projects mean-centered data onto the top-2 eigenvectors of the sample
covariance, with a deterministic sign convention (the largest-magnitude
loading of each component is made positive).

t-SNE is the exact O(N^2) algorithm: per-point Gaussian kernels whose
bandwidths are calibrated by binary search so each conditional distribution
has perplexity 2^H equal to the target, symmetrized affinities
p_ij = (p_{j|i} + p_{i|j}) / (2N), a Student-t (1 d.o.f.) low-dimensional
kernel, and gradient descent with momentum and early exaggeration.  It is
meant for desk-scale inputs (N up to roughly 20k); larger embeddings should
be computed offline and imported.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import matrixio
from .dataset import FeatureMatrix
from .errors import (
    CalibrationFailureError,
    DegenerateInputError,
    DuplicateNameError,
    JobCancelledError,
    NonFiniteCoordinateError,
    ShapeMismatchError,
    UnknownProjectionError,
)

PCA_NAME = "pca"
TSNE_NAME = "tsne"

#: Iterations during which early exaggeration is applied and after which
#: momentum switches from its initial value to the late value.
EXAGGERATION_ITERATIONS = 250
LATE_MOMENTUM = 0.8

ProgressFn = Callable[[float], None]
CancelFn = Callable[[], bool]


@dataclass(frozen=True, eq=False)
class Projection2D:
    """A named N x 2 embedding; row i corresponds to global_index i."""

    name: str
    coords: np.ndarray
    provenance: str                       # "computed_pca" | "computed_tsne" | "imported"
    detail: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ShapeMismatchError(f"projection must be Nx2, got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            r, c = np.argwhere(~np.isfinite(coords))[0]
            raise NonFiniteCoordinateError(f"non-finite coordinate at ({r}, {c})")
        object.__setattr__(self, "coords", coords)

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    n_iterations: int = 1000
    early_exaggeration_factor: float = 12.0
    learning_rate: float = 200.0
    momentum: float = 0.5           # switches to LATE_MOMENTUM after EXAGGERATION_ITERATIONS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.perplexity <= 0:
            raise ValueError("perplexity must be positive")
        if self.n_iterations <= 0:
            raise ValueError("n_iterations must be positive")
        if self.early_exaggeration_factor <= 0:
            raise ValueError("early_exaggeration_factor must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


def compute_pca(m: FeatureMatrix | np.ndarray, name: str = PCA_NAME) -> Projection2D:
    """Project onto the top-2 eigenvectors of the sample covariance."""
    values = m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=np.float64)
    n, d = values.shape
    if n < 2 or d < 2:
        raise DegenerateInputError(f"need at least 2 samples and 2 dims, got {n}x{d}")
    centered = values - values.mean(axis=0)
    cov = (centered.T @ centered) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)       # ascending eigenvalues
    components = eigvecs[:, [-1, -2]]
    for j in range(2):
        peak = np.argmax(np.abs(components[:, j]))
        if components[peak, j] < 0:
            components[:, j] = -components[:, j]
    coords = centered @ components
    return Projection2D(
        name=name,
        coords=coords,
        provenance="computed_pca",
        detail={"explained_variance": [float(eigvals[-1]), float(eigvals[-2])]},
    )


def _squared_euclidean(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def gaussian_conditionals(
    features: np.ndarray,
    perplexity: float,
    tol: float = 1e-5,
    max_steps: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Calibrate per-point Gaussian bandwidths by binary search.

    Returns (P, sigmas) where P[i, j] = p_{j|i} with zero diagonal and each
    row's perplexity 2^H within ``tol`` of the target.  The search runs on
    the precision beta = 1 / (2 sigma^2) with expanding brackets.
    """
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    d2 = _squared_euclidean(x)
    p = np.zeros((n, n))
    sigmas = np.zeros(n)
    others = ~np.eye(n, dtype=bool)
    for i in range(n):
        di = d2[i, others[i]]
        beta, lo, hi = 1.0, 0.0, np.inf
        row = None
        for _ in range(max_steps):
            expo = -beta * (di - di.min())        # shift for numerical stability
            row = np.exp(expo)
            row /= row.sum()
            entropy = -np.sum(row * np.log2(row, where=row > 0, out=np.zeros_like(row)))
            perp = 2.0 ** entropy
            if abs(perp - perplexity) <= tol:
                break
            if perp > perplexity:                 # too flat: raise precision
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = (lo + beta) / 2.0
        else:
            raise CalibrationFailureError(
                f"bandwidth search for point {i} did not converge in {max_steps} steps"
            )
        p[i, others[i]] = row
        sigmas[i] = np.sqrt(1.0 / (2.0 * beta))
    return p, sigmas


def joint_affinities(features: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized affinities p_ij = (p_{j|i} + p_{i|j}) / (2N); sums to 1."""
    cond, _ = gaussian_conditionals(features, perplexity)
    return (cond + cond.T) / (2.0 * cond.shape[0])


def _student_t_weights(y: np.ndarray) -> np.ndarray:
    w = 1.0 / (1.0 + _squared_euclidean(y))
    np.fill_diagonal(w, 0.0)
    return w


def kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    """KL(P || Q) of the embedding ``y`` under Student-t pairwise kernels."""
    w = _student_t_weights(y)
    q = w / w.sum()
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def kl_gradient(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Analytic gradient of :func:`kl_divergence` with respect to ``y``."""
    w = _student_t_weights(y)
    q = w / w.sum()
    pq_w = (p - q) * w
    # 4 * sum_j (p_ij - q_ij) w_ij (y_i - y_j)
    return 4.0 * (np.diag(pq_w.sum(axis=1)) - pq_w) @ y


def minimize_kl(
    p: np.ndarray,
    y0: np.ndarray,
    n_iterations: int,
    learning_rate: float,
    momentum: float = 0.5,
    final_momentum: float = LATE_MOMENTUM,
    momentum_switch: int = EXAGGERATION_ITERATIONS,
    exaggeration: float | None = None,
    exaggeration_until: int = EXAGGERATION_ITERATIONS,
    line_search: bool = False,
    progress: ProgressFn | None = None,
    should_cancel: CancelFn | None = None,
) -> np.ndarray:
    """Gradient descent on the KL objective.

    Uses the standard per-coordinate adaptive gains (grow 0.2 on a sign
    flip, shrink x0.8 otherwise, floor 0.01) alongside momentum; without
    them the fixed learning rate oscillates during the exaggeration phase.

    With ``line_search`` (a test-harness mode meant for momentum=0) gains
    are disabled and each step halves the learning rate until the true KL
    does not increase, making the per-iteration objective non-increasing.
    """
    y = np.array(y0, dtype=np.float64)
    velocity = np.zeros_like(y)
    gains = np.ones_like(y)
    for it in range(n_iterations):
        if should_cancel is not None and should_cancel():
            raise JobCancelledError("embedding computation cancelled")
        p_eff = p * exaggeration if exaggeration is not None and it < exaggeration_until else p
        grad = kl_gradient(p_eff, y)
        mom = momentum if it < momentum_switch else final_momentum
        if line_search:
            base = kl_divergence(p_eff, y)
            step = learning_rate
            for _ in range(50):
                candidate = y + mom * velocity - step * grad
                if kl_divergence(p_eff, candidate) <= base:
                    break
                step /= 2.0
            velocity = mom * velocity - step * grad
        else:
            same_sign = np.sign(grad) == np.sign(velocity)
            gains = np.where(same_sign, gains * 0.8, gains + 0.2)
            np.clip(gains, 0.01, None, out=gains)
            velocity = mom * velocity - learning_rate * (gains * grad)
        y = y + velocity
        if progress is not None:
            progress((it + 1) / n_iterations)
    return y


def compute_tsne(
    m: FeatureMatrix | np.ndarray,
    cfg: TsneConfig | None = None,
    name: str = TSNE_NAME,
    progress: ProgressFn | None = None,
    should_cancel: CancelFn | None = None,
) -> Projection2D:
    """Exact t-SNE embedding, deterministic given the config seed."""
    cfg = cfg or TsneConfig()
    values = m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=np.float64)
    n = values.shape[0]
    if n < 4:
        raise DegenerateInputError(f"t-SNE needs at least 4 points, got {n}")
    if cfg.perplexity >= n / 3:
        raise DegenerateInputError(
            f"perplexity {cfg.perplexity} must be < N/3 = {n / 3:.2f} for a solvable calibration"
        )
    # calibration counts as the first 10% of reported progress
    if progress is not None:
        progress(0.0)
    p = joint_affinities(values, cfg.perplexity)
    if progress is not None:
        progress(0.1)
    gen = np.random.default_rng(cfg.seed)
    y0 = gen.normal(scale=1e-4, size=(n, 2))
    descent_progress = None
    if progress is not None:
        descent_progress = lambda frac: progress(0.1 + 0.9 * frac)
    coords = minimize_kl(
        p,
        y0,
        n_iterations=cfg.n_iterations,
        learning_rate=cfg.learning_rate,
        momentum=cfg.momentum,
        exaggeration=cfg.early_exaggeration_factor,
        progress=descent_progress,
        should_cancel=should_cancel,
    )
    return Projection2D(
        name=name,
        coords=coords,
        provenance="computed_tsne",
        detail={
            "perplexity": cfg.perplexity,
            "n_iterations": cfg.n_iterations,
            "early_exaggeration_factor": cfg.early_exaggeration_factor,
            "learning_rate": cfg.learning_rate,
            "momentum": cfg.momentum,
            "seed": cfg.seed,
        },
    )


class ProjectionRegistry:
    """Named projections for one dataset; writes are serialized."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._projections: dict[str, Projection2D] = {}

    def register(self, projection: Projection2D) -> None:
        with self._lock:
            if projection.name in self._projections:
                raise DuplicateNameError(projection.name)
            self._projections[projection.name] = projection

    def get(self, name: str) -> Projection2D:
        try:
            return self._projections[name]
        except KeyError:
            raise UnknownProjectionError(name) from None

    def names(self) -> list[str]:
        return sorted(self._projections)

    def __contains__(self, name: str) -> bool:
        return name in self._projections

    def import_file(self, name: str, coords_path: str | Path, n_expected: int) -> Projection2D:
        """Register an externally computed embedding from a binary matrix file."""
        coords = matrixio.read_matrix(coords_path)
        if coords.shape != (n_expected, 2):
            raise ShapeMismatchError(
                f"{coords_path}: expected {n_expected}x2, got {coords.shape[0]}x{coords.shape[1]}"
            )
        projection = Projection2D(
            name=name,
            coords=coords,
            provenance="imported",
            detail={"source": str(coords_path)},
        )
        self.register(projection)
        return projection
