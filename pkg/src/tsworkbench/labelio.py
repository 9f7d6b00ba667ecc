"""Read exported annotation CSVs back into analysis-ready structures."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .dataset import ERRONEOUS, Dataset
from .errors import InvalidManifestError, MissingFileError
from .evaluation import Labeling
from .session import CSV_HEADER


@dataclass(frozen=True)
class LabelRow:
    sample_id: str
    track: str
    method: str
    annotator_id: str
    annotator_group: str
    value: str                  # class_id or ERRONEOUS
    annotation_order: int


def read_label_csv(path: str | Path) -> list[LabelRow]:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(str(path))
    rows: list[LabelRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER.split(","):
            raise InvalidManifestError(f"{path}: unexpected annotation CSV header")
        for record in reader:
            if not record:
                continue
            sample_id, track, method, annotator, group, label, erroneous, order, _ts = record
            rows.append(
                LabelRow(
                    sample_id=sample_id,
                    track=track,
                    method=method,
                    annotator_id=annotator,
                    annotator_group=group,
                    value=ERRONEOUS if erroneous == "true" else label,
                    annotation_order=int(order),
                )
            )
    return rows


def group_rows(rows: list[LabelRow]) -> dict[str, dict[str, list[LabelRow]]]:
    """method -> annotator_id -> rows sorted by annotation order."""
    grouped: dict[str, dict[str, list[LabelRow]]] = {}
    for row in rows:
        grouped.setdefault(row.method, {}).setdefault(row.annotator_id, []).append(row)
    for annotators in grouped.values():
        for records in annotators.values():
            records.sort(key=lambda r: r.annotation_order)
    return grouped


def labeling_from_rows(dataset: Dataset, rows: list[LabelRow]) -> Labeling:
    """Turn one annotator's sorted rows into an ordered Labeling."""
    sequence = []
    labels = {}
    for row in sorted(rows, key=lambda r: r.annotation_order):
        idx = dataset.sample_by_id(row.sample_id).global_index
        sequence.append(idx)
        labels[idx] = row.value
    return Labeling(sequence=tuple(sequence), labels=labels)
