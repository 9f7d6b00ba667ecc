"""Dataset model and manifest ingestion.

A dataset lives in a directory with a ``manifest.json`` at its root naming
the feature file (binary matrix format, see :mod:`tsworkbench.matrixio`),
the sample table (CSV: sample_id, global_index, duration_s, media) and the
class schemes, plus an optional ground-truth CSV (sample_id, track,
class_id).  Media files are referenced by relative path and are only
checked for existence when served.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import matrixio
from .errors import (
    DimensionMismatchError,
    DuplicateSampleIdError,
    InvalidManifestError,
    MissingFileError,
    NonFiniteFeatureError,
    UnknownClassInGroundTruthError,
    UnknownSampleError,
    UnknownTrackError,
)

logger = logging.getLogger(__name__)

#: Reserved label value marking a sample no class applies to.
ERRONEOUS = "ERRONEOUS"

MEDIA_KINDS = ("video", "audio", "signal")

_SAMPLE_HEADER = ["sample_id", "global_index", "duration_s", "media"]
_GROUND_TRUTH_HEADER = ["sample_id", "track", "class_id"]


@dataclass(frozen=True)
class ClassDef:
    class_id: str
    display_name: str
    color: str
    shortcut_key: str


@dataclass(frozen=True)
class ClassScheme:
    """One annotation track: its ordered classes, colors and shortcuts."""

    track_name: str
    classes: tuple[ClassDef, ...]
    allows_erroneous: bool = True

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise InvalidManifestError(
                f"scheme {self.track_name!r} needs at least 2 classes"
            )
        ids = [c.class_id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise InvalidManifestError(f"scheme {self.track_name!r} has duplicate class ids")
        if ERRONEOUS in ids:
            raise InvalidManifestError(f"{ERRONEOUS!r} is reserved and cannot be a class id")
        keys = [c.shortcut_key for c in self.classes]
        if any(len(k) != 1 for k in keys):
            raise InvalidManifestError("shortcut keys must be single characters")
        if len(set(keys)) != len(keys):
            raise InvalidManifestError(f"scheme {self.track_name!r} has duplicate shortcuts")

    @property
    def class_ids(self) -> tuple[str, ...]:
        return tuple(c.class_id for c in self.classes)

    def __contains__(self, class_id: str) -> bool:
        return class_id in self.class_ids


@dataclass(frozen=True)
class MediaRef:
    kind: str
    uri: str
    channels: str = ""

    def __post_init__(self) -> None:
        if self.kind not in MEDIA_KINDS:
            raise InvalidManifestError(f"unknown media kind {self.kind!r}")


@dataclass(frozen=True)
class Sample:
    sample_id: str
    global_index: int
    media_refs: tuple[MediaRef, ...] = ()
    duration_s: float = 0.0


@dataclass
class FeatureMatrix:
    """Per-sample feature vectors; row i corresponds to global_index i."""

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionMismatchError(f"features must be 2D, got shape {self.values.shape}")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ValidationIssue:
    row: int
    column: int | None
    defect: str      # "nan" | "inf" | "zero_row"
    severity: str    # "error" | "warning"


@dataclass
class Dataset:
    name: str
    samples: list[Sample]
    features: FeatureMatrix
    schemes: list[ClassScheme]
    ground_truth: dict[str, dict[str, str]] = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def scheme(self, track: str) -> ClassScheme:
        for s in self.schemes:
            if s.track_name == track:
                return s
        raise UnknownTrackError(track)

    def sample_by_id(self, sample_id: str) -> Sample:
        if not hasattr(self, "_by_id"):
            self._by_id = {s.sample_id: s for s in self.samples}
        try:
            return self._by_id[sample_id]
        except KeyError:
            raise UnknownSampleError(sample_id) from None


def validate_features(m: FeatureMatrix) -> list[ValidationIssue]:
    """Report NaN/Inf entries (errors) and all-zero rows (warnings).

    All-zero rows are flagged rather than rejected: cosine distance is
    undefined on them, so downstream code treats their distance to anything
    as the maximum value 1.
    """
    issues: list[ValidationIssue] = []
    values = m.values
    nan_rows, nan_cols = np.nonzero(np.isnan(values))
    for r, c in zip(nan_rows.tolist(), nan_cols.tolist()):
        issues.append(ValidationIssue(r, c, "nan", "error"))
    inf_rows, inf_cols = np.nonzero(np.isinf(values))
    for r, c in zip(inf_rows.tolist(), inf_cols.tolist()):
        issues.append(ValidationIssue(r, c, "inf", "error"))
    finite = not (nan_rows.size or inf_rows.size)
    zero_rows = np.nonzero(~values.any(axis=1))[0] if finite else np.array([], dtype=int)
    for r in zero_rows.tolist():
        issues.append(ValidationIssue(r, None, "zero_row", "warning"))
    return issues


def _parse_media(cell: str) -> tuple[MediaRef, ...]:
    refs = []
    for part in filter(None, (p.strip() for p in cell.split(";"))):
        bits = part.split(":", 2)
        if len(bits) < 2:
            raise InvalidManifestError(f"media ref {part!r} must look like kind:uri[:channels]")
        kind, uri = bits[0], bits[1]
        channels = bits[2] if len(bits) == 3 else ""
        refs.append(MediaRef(kind=kind, uri=uri, channels=channels))
    return tuple(refs)


def _format_media(refs: tuple[MediaRef, ...]) -> str:
    parts = []
    for r in refs:
        parts.append(f"{r.kind}:{r.uri}:{r.channels}" if r.channels else f"{r.kind}:{r.uri}")
    return ";".join(parts)


def _read_samples(path: Path) -> list[Sample]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _SAMPLE_HEADER:
            raise InvalidManifestError(
                f"{path}: sample table header must be {','.join(_SAMPLE_HEADER)}"
            )
        samples = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(_SAMPLE_HEADER):
                raise InvalidManifestError(f"{path}:{line_no}: expected {len(_SAMPLE_HEADER)} columns")
            sample_id, idx_s, dur_s, media = row
            try:
                idx = int(idx_s)
                dur = float(dur_s)
            except ValueError as exc:
                raise InvalidManifestError(f"{path}:{line_no}: {exc}") from exc
            if dur < 0:
                raise InvalidManifestError(f"{path}:{line_no}: negative duration")
            samples.append(Sample(sample_id, idx, _parse_media(media), dur))
    return samples


def _read_ground_truth(path: Path) -> dict[str, dict[str, str]]:
    truth: dict[str, dict[str, str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _GROUND_TRUTH_HEADER:
            raise InvalidManifestError(
                f"{path}: ground-truth header must be {','.join(_GROUND_TRUTH_HEADER)}"
            )
        for row in reader:
            if not row:
                continue
            sample_id, track, class_id = row
            truth.setdefault(track, {})[sample_id] = class_id
    return truth


def _scheme_from_json(obj: dict) -> ClassScheme:
    try:
        classes = tuple(
            ClassDef(
                class_id=c["class_id"],
                display_name=c.get("display_name", c["class_id"]),
                color=c.get("color", "#000000"),
                shortcut_key=c["shortcut_key"],
            )
            for c in obj["classes"]
        )
        return ClassScheme(
            track_name=obj["track_name"],
            classes=classes,
            allows_erroneous=bool(obj.get("allows_erroneous", True)),
        )
    except KeyError as exc:
        raise InvalidManifestError(f"scheme missing key {exc}") from exc


def ingest_dataset(manifest_path: str | Path) -> Dataset:
    """Load and validate a dataset from a manifest directory or file.

    Raises MissingFileError, InvalidManifestError, DimensionMismatchError,
    DuplicateSampleIdError, NonFiniteFeatureError or
    UnknownClassInGroundTruthError.  All-zero feature rows are logged as
    warnings but do not fail ingestion.
    """
    path = Path(manifest_path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.is_file():
        raise MissingFileError(str(path))
    root = path.parent
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidManifestError(f"{path}: {exc}") from exc
    for key in ("name", "features", "samples", "schemes"):
        if key not in manifest:
            raise InvalidManifestError(f"{path}: missing key {key!r}")

    samples_path = root / manifest["samples"]
    if not samples_path.is_file():
        raise MissingFileError(str(samples_path))
    samples = _read_samples(samples_path)

    ids = [s.sample_id for s in samples]
    dupes = {i for i in ids if ids.count(i) > 1} if len(set(ids)) != len(ids) else set()
    if dupes:
        raise DuplicateSampleIdError(", ".join(sorted(dupes)))
    indices = sorted(s.global_index for s in samples)
    if indices != list(range(len(samples))):
        raise InvalidManifestError("global_index values must form a permutation of 0..N-1")
    samples.sort(key=lambda s: s.global_index)

    features = FeatureMatrix(matrixio.read_matrix(root / manifest["features"]))
    if features.n_samples != len(samples):
        raise DimensionMismatchError(
            f"feature file has {features.n_samples} rows but sample table lists {len(samples)}"
        )
    issues = validate_features(features)
    errors = [i for i in issues if i.severity == "error"]
    if errors:
        first = errors[0]
        raise NonFiniteFeatureError(
            f"{len(errors)} non-finite entries, first {first.defect} at ({first.row}, {first.column})"
        )
    for issue in issues:
        logger.warning("all-zero feature row %d: cosine distance degenerates to 1", issue.row)

    schemes = [_scheme_from_json(s) for s in manifest["schemes"]]
    names = [s.track_name for s in schemes]
    if len(set(names)) != len(names):
        raise InvalidManifestError("duplicate track names in schemes")

    ground_truth: dict[str, dict[str, str]] = {}
    if manifest.get("ground_truth"):
        gt_path = root / manifest["ground_truth"]
        if not gt_path.is_file():
            raise MissingFileError(str(gt_path))
        ground_truth = _read_ground_truth(gt_path)
        known_ids = set(ids)
        for track, labels in ground_truth.items():
            if track not in names:
                raise UnknownTrackError(f"ground truth references unknown track {track!r}")
            scheme = next(s for s in schemes if s.track_name == track)
            for sample_id, class_id in labels.items():
                if sample_id not in known_ids:
                    raise InvalidManifestError(
                        f"ground truth references unknown sample {sample_id!r}"
                    )
                if class_id not in scheme:
                    raise UnknownClassInGroundTruthError(
                        f"{class_id!r} is not a class of track {track!r}"
                    )

    return Dataset(
        name=manifest["name"],
        samples=samples,
        features=features,
        schemes=schemes,
        ground_truth=ground_truth,
    )


def write_manifest(dataset: Dataset, out_dir: str | Path) -> Path:
    """Write ``dataset`` as a manifest directory; returns the manifest path.

    Media files themselves are not written, only their references.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrixio.write_matrix(out / "features.bin", dataset.features.values)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_SAMPLE_HEADER)
    for s in dataset.samples:
        writer.writerow([s.sample_id, s.global_index, repr(s.duration_s), _format_media(s.media_refs)])
    (out / "samples.csv").write_text(buf.getvalue(), encoding="utf-8")

    manifest: dict = {
        "name": dataset.name,
        "features": "features.bin",
        "samples": "samples.csv",
        "schemes": [
            {
                "track_name": s.track_name,
                "allows_erroneous": s.allows_erroneous,
                "classes": [
                    {
                        "class_id": c.class_id,
                        "display_name": c.display_name,
                        "color": c.color,
                        "shortcut_key": c.shortcut_key,
                    }
                    for c in s.classes
                ],
            }
            for s in dataset.schemes
        ],
    }
    if dataset.ground_truth:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_GROUND_TRUTH_HEADER)
        for track in sorted(dataset.ground_truth):
            for sample_id, class_id in dataset.ground_truth[track].items():
                writer.writerow([sample_id, track, class_id])
        (out / "ground_truth.csv").write_text(buf.getvalue(), encoding="utf-8")
        manifest["ground_truth"] = "ground_truth.csv"

    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path
