"""Exception hierarchy shared by all workbench modules.

Every failure that callers are expected to handle is a subclass of
:class:`WorkbenchError`.  The HTTP layer maps each subclass to a stable
machine-readable ``kind`` string (the class name without the ``Error``
suffix), so new error types should follow the same naming pattern.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for workbench failures."""

    @property
    def kind(self) -> str:
        name = type(self).__name__
        return name[:-5] if name.endswith("Error") else name


# dataset ingestion
class MissingFileError(WorkbenchError):
    """A file referenced by a manifest (or given on the CLI) does not exist."""


class InvalidManifestError(WorkbenchError):
    """The manifest is structurally broken (bad JSON, missing keys, bad indices)."""


class DimensionMismatchError(WorkbenchError):
    """Feature-matrix row count disagrees with the sample table."""


class DuplicateSampleIdError(WorkbenchError):
    """Two samples in the manifest share a sample_id."""


class UnknownClassInGroundTruthError(WorkbenchError):
    """A ground-truth label names a class missing from its track's scheme."""


class NonFiniteFeatureError(WorkbenchError):
    """The feature matrix contains NaN or Inf entries."""


# projections
class DegenerateInputError(WorkbenchError):
    """Input too small or ill-posed for the requested projection."""


class CalibrationFailureError(WorkbenchError):
    """Bandwidth binary search did not converge for some point."""


class ShapeMismatchError(WorkbenchError):
    """A binary matrix file does not have the expected shape."""


class NonFiniteCoordinateError(WorkbenchError):
    """Imported coordinates contain NaN or Inf."""


class DuplicateNameError(WorkbenchError):
    """A projection with this name is already registered."""


class UnknownProjectionError(WorkbenchError):
    """No projection registered under this name."""


# sampling
class LengthMismatchError(WorkbenchError):
    """Vectors of different lengths passed to a distance function."""


class BudgetExceedsPopulationError(WorkbenchError):
    """Requested more samples than the dataset holds."""


class UnknownSampleError(WorkbenchError):
    """No sample with this sample_id in the dataset."""


# annotation sessions
class UnknownTrackError(WorkbenchError):
    """The dataset has no class scheme for this track name."""


class UnknownClassError(WorkbenchError):
    """Label value is not a class of the session's scheme."""


class OutOfOrderLabelError(WorkbenchError):
    """Ordered sessions may only label the current or a previously visited sample."""


class SessionCompleteError(WorkbenchError):
    """The annotation budget is spent; no new samples can be labeled."""


class EmptyQueueError(WorkbenchError):
    """Nothing left to advance to."""


class InvalidActionError(WorkbenchError):
    """Navigation action not available for this session's method."""


class CorruptSnapshotError(WorkbenchError):
    """Session snapshot failed its integrity checks."""


class UnknownSessionError(WorkbenchError):
    """No session stored under this id."""


# label analysis
class UnmappedClassError(WorkbenchError):
    """A label's class has no entry in the remap table."""


class EmptyLabelSetError(WorkbenchError):
    """No valid (non-erroneous) labels to aggregate."""


class SchemeMismatchError(WorkbenchError):
    """Histograms over different class schemes cannot be combined."""


class TooFewHistogramsError(WorkbenchError):
    """The operation needs at least two histograms."""


# risk analysis
class EmptyInputError(WorkbenchError):
    """No values supplied."""


class NoRareClassError(WorkbenchError):
    """Reference distribution has no class under the rare threshold."""


class IncompleteRankTableError(WorkbenchError):
    """Rank tables do not cover the same method set."""


# downstream evaluation
class EmptyTrainingSetError(WorkbenchError):
    """No training samples left after filtering."""


class EmptyTestSetError(WorkbenchError):
    """No test samples to score."""


class CheckpointExceedsLabelsError(WorkbenchError):
    """A learning-curve checkpoint asks for more labels than exist."""


class MissingGroundTruthError(WorkbenchError):
    """Simulation requires ground truth for the chosen track."""


# service
class UnknownJobError(WorkbenchError):
    """No background job with this id."""


class JobCancelledError(WorkbenchError):
    """Raised inside a background computation when cancellation was requested."""
