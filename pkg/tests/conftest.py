from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from tsworkbench import matrixio
from tsworkbench.dataset import ClassDef, ClassScheme, Dataset, FeatureMatrix, Sample


def write_raw_manifest(
    root: Path,
    features: np.ndarray,
    sample_rows: list[list],
    schemes: list[dict],
    ground_truth_rows: list[list] | None = None,
    name: str = "toy",
) -> Path:
    """Write manifest files by hand so tests pin the on-disk format."""
    root.mkdir(parents=True, exist_ok=True)
    matrixio.write_matrix(root / "features.bin", np.asarray(features))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", "global_index", "duration_s", "media"])
    writer.writerows(sample_rows)
    (root / "samples.csv").write_text(buf.getvalue())
    manifest = {
        "name": name,
        "features": "features.bin",
        "samples": "samples.csv",
        "schemes": schemes,
    }
    if ground_truth_rows is not None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sample_id", "track", "class_id"])
        writer.writerows(ground_truth_rows)
        (root / "ground_truth.csv").write_text(buf.getvalue())
        manifest["ground_truth"] = "ground_truth.csv"
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def binary_scheme(track: str = "kind", a: str = "a", b: str = "b") -> dict:
    return {
        "track_name": track,
        "allows_erroneous": True,
        "classes": [
            {"class_id": a, "display_name": a.upper(), "color": "#1f77b4", "shortcut_key": "1"},
            {"class_id": b, "display_name": b.upper(), "color": "#ff7f0e", "shortcut_key": "2"},
        ],
    }


def make_scheme(track: str, class_ids: list[str], allows_erroneous: bool = True) -> ClassScheme:
    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"]
    return ClassScheme(
        track_name=track,
        classes=tuple(
            ClassDef(cid, cid, palette[i % len(palette)], str((i + 1) % 10))
            for i, cid in enumerate(class_ids)
        ),
        allows_erroneous=allows_erroneous,
    )


def make_dataset(
    features: np.ndarray,
    class_ids: list[str] | None = None,
    track: str = "kind",
    ground_truth: dict[str, str] | None = None,
    name: str = "mem",
) -> Dataset:
    features = np.asarray(features, dtype=float)
    n = features.shape[0]
    samples = [Sample(f"s{i:04d}", i, (), 1.0) for i in range(n)]
    scheme = make_scheme(track, class_ids or ["a", "b"])
    truth = {track: ground_truth} if ground_truth else {}
    return Dataset(
        name=name,
        samples=samples,
        features=FeatureMatrix(features),
        schemes=[scheme],
        ground_truth=truth,
    )


@pytest.fixture
def toy_manifest(tmp_path: Path) -> Path:
    features = np.arange(12, dtype=float).reshape(4, 3)
    rows = [
        ["s0", 0, 2.3, "video:media/s0.mp4"],
        ["s1", 1, 2.3, "audio:media/s1.wav"],
        ["s2", 2, 2.3, ""],
        ["s3", 3, 2.3, "signal:media/s3.bin:acc-xyz"],
    ]
    truth = [["s0", "kind", "a"], ["s1", "kind", "b"], ["s2", "kind", "a"], ["s3", "kind", "b"]]
    return write_raw_manifest(tmp_path / "toy", features, rows, [binary_scheme()], truth)
