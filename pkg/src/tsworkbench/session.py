"""Annotation session state machine: one annotator x method x track.

Ordered sessions (RND/FAFT) walk a precomputed order; free-form sessions
(2DV) let the annotator select any sample and keep a FIFO review queue.
Labels may be revised at any time; first-time labels consume budget and
samples flagged erroneous consume budget too (they are only dropped later,
in analysis).  Sessions snapshot to a versioned, checksummed binary
container and export a fixed CSV schema.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import struct
import time
import zlib
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Iterable

import numpy as np

from .dataset import ERRONEOUS, Dataset
from .errors import (
    BudgetExceedsPopulationError,
    CorruptSnapshotError,
    EmptyQueueError,
    InvalidActionError,
    OutOfOrderLabelError,
    SessionCompleteError,
    UnknownClassError,
)
from .sampling import COSINE, FAFT, RND, TWO_DV, SampleOrder, sample_faft, sample_random

ACTIVE = "active"
COMPLETE = "complete"

GROUPS = ("expert", "non_expert")

CSV_HEADER = (
    "sample_id,track,method,annotator_id,annotator_group,"
    "label,is_erroneous,annotation_order,timestamp_utc"
)

_SNAPSHOT_MAGIC = b"TSWS"
_SNAPSHOT_VERSION = 1
_SNAPSHOT_HEADER = struct.Struct("<4sHII")  # magic, version, payload length, crc32


@dataclass(frozen=True)
class SessionConfig:
    dataset_name: str
    track: str
    method: str
    budget: int
    seed: int
    annotator_id: str
    annotator_group: str

    def __post_init__(self) -> None:
        if self.method not in (RND, FAFT, TWO_DV):
            raise ValueError(f"unknown method {self.method!r}")
        if self.annotator_group not in GROUPS:
            raise ValueError(f"annotator_group must be one of {GROUPS}")
        if self.budget <= 0:
            raise ValueError("budget must be positive")


class AnnotationSession:
    """Mutable session state; all mutations go through the methods below.

    Instances are single-writer: the API layer serializes mutations per
    session.  Construct via :func:`create_session` or :func:`load_session`.
    """

    def __init__(
        self,
        config: SessionConfig,
        order: SampleOrder,
        sample_ids: tuple[str, ...],
        class_ids: tuple[str, ...],
        allows_erroneous: bool,
        clock: Callable[[], float] | None = None,
    ) -> None:
        self.config = config
        self.order = order
        self.sample_ids = sample_ids
        self.class_ids = class_ids
        self.allows_erroneous = allows_erroneous
        self.visited: list[int] = []
        self.cursor: int | None = None
        self.queue: list[int] = []
        self.labels: dict[int, str] = {}
        self.label_sequence: list[int] = []
        self.timestamps: dict[int, float] = {}
        self.events: list[dict] = []
        self.status = ACTIVE
        self.rng = np.random.default_rng([config.seed, 0x5E55])
        self.clock = clock or time.time
        if config.method in (RND, FAFT):
            self.visited.append(order.order[0])
            self.cursor = 0

    # ------------------------------------------------------------------ views

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def current_index(self) -> int | None:
        if self.cursor is None:
            return None
        return self.visited[self.cursor]

    @property
    def labeled_count(self) -> int:
        return len(self.label_sequence)

    @property
    def is_ordered(self) -> bool:
        return self.config.method in (RND, FAFT)

    # -------------------------------------------------------------- mutations

    def assign_label(self, idx: int, value: str) -> int:
        """Record ``value`` for sample ``idx``; returns the labeled count.

        First-time labels consume budget, advance ordered sessions, and
        flip status to complete when the budget is reached.  Revisions only
        refresh the stored value and timestamp; they stay possible after
        completion so mistakes can be fixed before export.
        """
        self._check_index(idx)
        if value != ERRONEOUS and value not in self.class_ids:
            raise UnknownClassError(value)
        if value == ERRONEOUS and not self.allows_erroneous:
            raise UnknownClassError("this track does not allow erroneous labels")
        first_time = idx not in self.labels
        if first_time and self.status == COMPLETE:
            raise SessionCompleteError("budget already spent")
        if self.is_ordered and idx != self.current_index and idx not in self.visited:
            raise OutOfOrderLabelError(
                f"sample {idx} is neither the current sample nor previously visited"
            )
        if not self.is_ordered and idx not in self.visited:
            # labeling an unvisited sample implies visiting it (current unchanged)
            self.visited.append(idx)
            self._record_click(idx)
        self.labels[idx] = value
        self.timestamps[idx] = self.clock()
        self.events.append({"op": "label", "index": idx, "value": value})
        if first_time:
            self.label_sequence.append(idx)
            if self.labeled_count >= self.config.budget:
                self.status = COMPLETE
            elif self.is_ordered:
                self._advance()
        return self.labeled_count

    def navigate(self, action: str, idx: int | None = None) -> int | None:
        """Apply a navigation action; returns the new current index.

        select/enqueue are 2DV-only.  ``next`` first replays forward through
        visit history, then pops the queue head (2DV) or the next pending
        order element (RND/FAFT).  ``previous`` steps back through history
        and is a no-op at the start.
        """
        if action == "select":
            self._require_free_form(action)
            if idx is None:
                raise InvalidActionError("select requires an index")
            self._check_index(idx)
            self.visited.append(idx)
            self.cursor = len(self.visited) - 1
            self._record_click(idx)
        elif action == "enqueue":
            self._require_free_form(action)
            if idx is None:
                raise InvalidActionError("enqueue requires an index")
            self._check_index(idx)
            if idx not in self.queue:
                self.queue.append(idx)
        elif action == "next":
            self._step_forward()
        elif action == "previous":
            if self.cursor is not None and self.cursor > 0:
                self.cursor -= 1
        else:
            raise InvalidActionError(action)
        self.events.append({"op": "navigate", "action": action, "index": idx})
        return self.current_index

    # ---------------------------------------------------------------- helpers

    def _check_index(self, idx: int) -> None:
        if not 0 <= idx < self.n_samples:
            raise OutOfOrderLabelError(f"index {idx} outside [0, {self.n_samples})")

    def _require_free_form(self, action: str) -> None:
        if self.is_ordered:
            raise InvalidActionError(f"{action} is only available for 2DV sessions")

    def _record_click(self, idx: int) -> None:
        # 2DV orders record the first-selection sequence of human clicks
        if idx not in self.order.order:
            self.order = dataclasses.replace(self.order, order=self.order.order + (idx,))

    def _advance(self) -> None:
        if self.cursor is not None and self.cursor < len(self.visited) - 1:
            self.cursor += 1
            return
        pending = len(self.visited)
        if pending < len(self.order.order):
            self.visited.append(self.order.order[pending])
            self.cursor = len(self.visited) - 1

    def _step_forward(self) -> None:
        if self.cursor is not None and self.cursor < len(self.visited) - 1:
            self.cursor += 1
            return
        if self.is_ordered:
            pending = len(self.visited)
            if pending >= len(self.order.order):
                raise EmptyQueueError("order exhausted")
            self.visited.append(self.order.order[pending])
            self.cursor = len(self.visited) - 1
            return
        if not self.queue:
            raise EmptyQueueError("queue empty and no history remainder")
        idx = self.queue.pop(0)
        self.visited.append(idx)
        self.cursor = len(self.visited) - 1
        self._record_click(idx)

    # ---------------------------------------------------------- serialization

    def state_dict(self) -> dict:
        return {
            "config": {
                "dataset_name": self.config.dataset_name,
                "track": self.config.track,
                "method": self.config.method,
                "budget": self.config.budget,
                "seed": self.config.seed,
                "annotator_id": self.config.annotator_id,
                "annotator_group": self.config.annotator_group,
            },
            "order": {
                "method": self.order.method,
                "order": list(self.order.order),
                "seed": self.order.seed,
                "metric": self.order.metric,
            },
            "sample_ids": list(self.sample_ids),
            "class_ids": list(self.class_ids),
            "allows_erroneous": self.allows_erroneous,
            "visited": list(self.visited),
            "cursor": self.cursor,
            "queue": list(self.queue),
            "labels": {str(k): v for k, v in self.labels.items()},
            "label_sequence": list(self.label_sequence),
            "timestamps": {str(k): v for k, v in self.timestamps.items()},
            "events": list(self.events),
            "status": self.status,
            "rng_state": _jsonable_rng_state(self.rng),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AnnotationSession):
            return NotImplemented
        return self.state_dict() == other.state_dict()


def _jsonable_rng_state(rng: np.random.Generator) -> dict:
    state = rng.bit_generator.state
    return json.loads(json.dumps(state))


def create_session(
    dataset: Dataset,
    cfg: SessionConfig,
    metric: str = COSINE,
    clock: Callable[[], float] | None = None,
) -> AnnotationSession:
    """Build a fresh session; RND/FAFT orders are generated here."""
    scheme = dataset.scheme(cfg.track)
    n = dataset.n_samples
    if cfg.budget > n:
        raise BudgetExceedsPopulationError(f"budget {cfg.budget} of population {n}")
    if cfg.method == RND:
        order = sample_random(n, cfg.budget, cfg.seed)
    elif cfg.method == FAFT:
        order = sample_faft(dataset.features, cfg.budget, cfg.seed, metric)
    else:
        order = SampleOrder(method=TWO_DV, order=(), seed=cfg.seed)
    return AnnotationSession(
        config=cfg,
        order=order,
        sample_ids=tuple(s.sample_id for s in dataset.samples),
        class_ids=scheme.class_ids,
        allows_erroneous=scheme.allows_erroneous,
        clock=clock,
    )


def save_session(session: AnnotationSession) -> bytes:
    """Serialize to the versioned, checksummed snapshot container."""
    payload = json.dumps(session.state_dict(), sort_keys=True, separators=(",", ":")).encode()
    header = _SNAPSHOT_HEADER.pack(
        _SNAPSHOT_MAGIC, _SNAPSHOT_VERSION, len(payload), zlib.crc32(payload)
    )
    return header + payload


def load_session(blob: bytes, clock: Callable[[], float] | None = None) -> AnnotationSession:
    """Inverse of :func:`save_session`; load(save(s)) == s structurally."""
    if len(blob) < _SNAPSHOT_HEADER.size:
        raise CorruptSnapshotError("snapshot shorter than its header")
    magic, version, length, crc = _SNAPSHOT_HEADER.unpack_from(blob)
    if magic != _SNAPSHOT_MAGIC:
        raise CorruptSnapshotError("bad magic")
    if version != _SNAPSHOT_VERSION:
        raise CorruptSnapshotError(f"unsupported snapshot version {version}")
    payload = blob[_SNAPSHOT_HEADER.size:]
    if len(payload) != length or zlib.crc32(payload) != crc:
        raise CorruptSnapshotError("length or checksum mismatch")
    state = json.loads(payload.decode())

    cfg = SessionConfig(**state["config"])
    order = SampleOrder(
        method=state["order"]["method"],
        order=tuple(state["order"]["order"]),
        seed=state["order"]["seed"],
        metric=state["order"]["metric"],
    )
    session = AnnotationSession.__new__(AnnotationSession)
    session.config = cfg
    session.order = order
    session.sample_ids = tuple(state["sample_ids"])
    session.class_ids = tuple(state["class_ids"])
    session.allows_erroneous = state["allows_erroneous"]
    session.visited = list(state["visited"])
    session.cursor = state["cursor"]
    session.queue = list(state["queue"])
    session.labels = {int(k): v for k, v in state["labels"].items()}
    session.label_sequence = list(state["label_sequence"])
    session.timestamps = {int(k): v for k, v in state["timestamps"].items()}
    session.events = list(state["events"])
    session.status = state["status"]
    session.rng = np.random.default_rng()
    session.rng.bit_generator.state = state["rng_state"]
    session.clock = clock or time.time
    return session


def _format_timestamp(ts: float) -> str:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def export_csv(session: AnnotationSession) -> bytes:
    """Labels as CSV, one row per labeled sample in first-labeling order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    cfg = session.config
    for position, idx in enumerate(session.label_sequence, start=1):
        value = session.labels[idx]
        erroneous = value == ERRONEOUS
        writer.writerow(
            [
                session.sample_ids[idx],
                cfg.track,
                cfg.method,
                cfg.annotator_id,
                cfg.annotator_group,
                "" if erroneous else value,
                "true" if erroneous else "false",
                position,
                _format_timestamp(session.timestamps[idx]),
            ]
        )
    return buf.getvalue().encode("utf-8")


def export_event_log(session: AnnotationSession) -> bytes:
    """Mutation history as line-delimited JSON, for replay tests."""
    lines = [json.dumps(e, sort_keys=True) for e in session.events]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def replay_events(
    dataset: Dataset,
    cfg: SessionConfig,
    events: Iterable[dict],
    metric: str = COSINE,
    clock: Callable[[], float] | None = None,
) -> AnnotationSession:
    """Re-apply an event sequence to a fresh session."""
    session = create_session(dataset, cfg, metric=metric, clock=clock)
    for event in events:
        if event["op"] == "label":
            session.assign_label(event["index"], event["value"])
        elif event["op"] == "navigate":
            session.navigate(event["action"], event.get("index"))
        else:
            raise ValueError(f"unknown event op {event['op']!r}")
    return session


def parse_event_log(blob: bytes) -> list[dict]:
    return [json.loads(line) for line in blob.decode("utf-8").splitlines() if line.strip()]
