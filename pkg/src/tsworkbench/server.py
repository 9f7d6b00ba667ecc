"""HTTP API exposing datasets, projections, sessions, media and analysis.

Reads are freely concurrent; each session has a lock so its mutations
serialize (single-writer), and every mutation response carries the updated
labeled count so clients never need a second round trip for their counters.
Projection coordinates travel as the compact binary matrix format rather
than JSON, since datasets can reach ~10^5 points.
"""

from __future__ import annotations

import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import matrixio
from .dataset import Dataset, ingest_dataset
from .errors import (
    DuplicateNameError,
    JobCancelledError,
    MissingFileError,
    NoRareClassError,
    UnknownJobError,
    UnknownSessionError,
    WorkbenchError,
)
from .evaluation import EvalProtocol, labeling_from_session, learning_curve
from .labelstats import label_histogram, histogram_group_stats, mean_pairwise_hellinger
from .projection import ProjectionRegistry, TsneConfig, compute_pca, compute_tsne
from .risk import (
    ALL_METRICS,
    MOD,
    RiskCondition,
    build_risk_report,
    detect_performance_failure,
    detect_rare_class_failure,
)
from .sampling import COSINE
from .session import (
    AnnotationSession,
    SessionConfig,
    create_session,
    export_csv,
    load_session,
    save_session,
)


class IngestFailureError(WorkbenchError):
    """Dataset could not be ingested at service startup."""

_STATUS_BY_KIND = {
    "UnknownSession": 404,
    "UnknownProjection": 404,
    "UnknownJob": 404,
    "UnknownSample": 404,
    "MissingFile": 404,
    "UnknownTrack": 404,
    "DuplicateName": 409,
    "SessionComplete": 409,
}


class SessionStore:
    """Sessions with per-id write locks and snapshot persistence."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, AnnotationSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        for snap in sorted(self.root.glob("*.snap")):
            self._sessions[snap.stem] = load_session(snap.read_bytes())
            self._locks[snap.stem] = threading.Lock()

    def add(self, session: AnnotationSession) -> str:
        session_id = uuid.uuid4().hex[:12]
        with self._registry_lock:
            self._sessions[session_id] = session
            self._locks[session_id] = threading.Lock()
        self.persist(session_id)
        return session_id

    def get(self, session_id: str) -> AnnotationSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSessionError(session_id) from None

    def lock(self, session_id: str) -> threading.Lock:
        if session_id not in self._locks:
            raise UnknownSessionError(session_id)
        return self._locks[session_id]

    def ids(self) -> list[str]:
        return sorted(self._sessions)

    def persist(self, session_id: str) -> None:
        (self.root / f"{session_id}.snap").write_bytes(save_session(self.get(session_id)))

    def flush_all(self) -> None:
        for session_id in self.ids():
            self.persist(session_id)


@dataclass
class Job:
    id: str
    kind: str
    state: str = "queued"           # queued|running|done|failed|cancelled
    progress: float = 0.0
    error: str | None = None
    result: str | None = None
    cancel_event: threading.Event = field(default_factory=threading.Event)


class JobManager:
    def __init__(self) -> None:
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, kind: str, target) -> Job:
        job = Job(id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[job.id] = job

        def run() -> None:
            job.state = "running"
            try:
                job.result = target(job)
                job.state = "done"
                job.progress = 1.0
            except JobCancelledError:
                job.state = "cancelled"
            except Exception as exc:
                job.state = "failed"
                job.error = f"{type(exc).__name__}: {exc}"

        threading.Thread(target=run, daemon=True).start()
        return job

    def get(self, job_id: str) -> Job:
        try:
            return self._jobs[job_id]
        except KeyError:
            raise UnknownJobError(job_id) from None

    def cancel(self, job_id: str) -> Job:
        job = self.get(job_id)
        job.cancel_event.set()
        return job


def _session_view(session_id: str, session: AnnotationSession) -> dict:
    current = session.current_index
    return {
        "session_id": session_id,
        "config": {
            "dataset_name": session.config.dataset_name,
            "track": session.config.track,
            "method": session.config.method,
            "budget": session.config.budget,
            "seed": session.config.seed,
            "annotator_id": session.config.annotator_id,
            "annotator_group": session.config.annotator_group,
        },
        "status": session.status,
        "labeled_count": session.labeled_count,
        "total_count": session.n_samples,
        "current": None
        if current is None
        else {"index": current, "sample_id": session.sample_ids[current]},
        "queue": list(session.queue),
        "order_length": len(session.order.order),
        "labels": {str(i): v for i, v in session.labels.items()},
    }


def _parse_range(header: str, size: int) -> tuple[int, int] | None:
    if not header.startswith("bytes="):
        return None
    spec = header[len("bytes="):].split(",")[0].strip()
    start_s, _, end_s = spec.partition("-")
    if start_s:
        start = int(start_s)
        end = int(end_s) if end_s else size - 1
    else:
        if not end_s:
            return None
        start = max(size - int(end_s), 0)
        end = size - 1
    if start > end or start >= size:
        return None
    return start, min(end, size - 1)


class SessionCreateBody(BaseModel):
    track: str
    method: str
    budget: int
    seed: int = 0
    dataset_name: str | None = None
    annotator_id: str = "anonymous"
    annotator_group: str = "non_expert"
    metric: str = COSINE


class LabelBody(BaseModel):
    sample_id: str
    value: str


class QueueBody(BaseModel):
    sample_id: str


class NavigateBody(BaseModel):
    action: str
    sample_id: str | None = None


class TsneBody(BaseModel):
    name: str = "tsne"
    perplexity: float = 30.0
    n_iterations: int = 1000
    early_exaggeration_factor: float = 12.0
    learning_rate: float = 200.0
    momentum: float = 0.5
    seed: int = 0


def create_app(
    dataset_root: str | Path,
    store_path: str | Path,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    dataset_root = Path(dataset_root)
    try:
        dataset: Dataset = ingest_dataset(dataset_root)
    except WorkbenchError as exc:
        raise IngestFailureError(f"{dataset_root}: {exc}") from exc

    registry = ProjectionRegistry()
    proj_dir = dataset_root / "projections"
    if proj_dir.is_dir():
        for path in sorted(proj_dir.glob("*.bin")):
            registry.import_file(path.stem, path, n_expected=dataset.n_samples)
    if "pca" not in registry and dataset.n_samples >= 2 and dataset.features.n_dims >= 2:
        registry.register(compute_pca(dataset.features))

    store = SessionStore(Path(store_path))
    jobs = JobManager()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        store.flush_all()

    app = FastAPI(title="tsworkbench", lifespan=lifespan)

    @app.exception_handler(WorkbenchError)
    async def workbench_error_handler(_req: Request, exc: WorkbenchError):
        status = _STATUS_BY_KIND.get(exc.kind, 422)
        return JSONResponse(
            status_code=status,
            content={"error": {"kind": exc.kind, "message": str(exc)}},
        )

    @app.exception_handler(Exception)
    async def internal_error_handler(_req: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"error": {"kind": "Internal", "message": str(exc)}},
        )

    # ------------------------------------------------------------- dataset

    @app.get("/api/dataset")
    def dataset_info() -> dict:
        return {
            "name": dataset.name,
            "n_samples": dataset.n_samples,
            "n_dims": dataset.features.n_dims,
            "tracks": [
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
                    "has_ground_truth": s.track_name in dataset.ground_truth,
                }
                for s in dataset.schemes
            ],
            "samples": [
                {
                    "sample_id": s.sample_id,
                    "global_index": s.global_index,
                    "duration_s": s.duration_s,
                    "media": [{"kind": m.kind, "channels": m.channels} for m in s.media_refs],
                }
                for s in dataset.samples
            ],
        }

    # ---------------------------------------------------------- projections

    @app.get("/api/projections")
    def list_projections() -> list[dict]:
        return [
            {
                "name": name,
                "provenance": registry.get(name).provenance,
                "n_points": registry.get(name).n_points,
            }
            for name in registry.names()
        ]

    @app.get("/api/projections/{name}/coords")
    def projection_coords(name: str) -> Response:
        projection = registry.get(name)
        return Response(
            content=matrixio.matrix_bytes(projection.coords),
            media_type="application/octet-stream",
        )

    @app.post("/api/projections/tsne", status_code=202)
    def start_tsne(body: TsneBody) -> dict:
        name = body.name
        if name in registry:
            raise DuplicateNameError(name)
        cfg = TsneConfig(
            perplexity=body.perplexity,
            n_iterations=body.n_iterations,
            early_exaggeration_factor=body.early_exaggeration_factor,
            learning_rate=body.learning_rate,
            momentum=body.momentum,
            seed=body.seed,
        )

        def work(job: Job) -> str:
            projection = compute_tsne(
                dataset.features,
                cfg,
                name=name,
                progress=lambda f: setattr(job, "progress", f),
                should_cancel=job.cancel_event.is_set,
            )
            registry.register(projection)
            return name

        job = jobs.submit("tsne", work)
        return {"job_id": job.id, "state": job.state}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str) -> dict:
        job = jobs.get(job_id)
        return {
            "job_id": job.id,
            "kind": job.kind,
            "state": job.state,
            "progress": job.progress,
            "error": job.error,
            "projection": job.result,
        }

    @app.delete("/api/jobs/{job_id}")
    def job_cancel(job_id: str) -> dict:
        job = jobs.cancel(job_id)
        return {"job_id": job.id, "state": job.state}

    # ------------------------------------------------------------- sessions

    @app.post("/api/sessions", status_code=201)
    def new_session(body: SessionCreateBody) -> dict:
        cfg = SessionConfig(
            dataset_name=body.dataset_name or dataset.name,
            track=body.track,
            method=body.method,
            budget=body.budget,
            seed=body.seed,
            annotator_id=body.annotator_id,
            annotator_group=body.annotator_group,
        )
        session = create_session(dataset, cfg, metric=body.metric)
        session_id = store.add(session)
        return _session_view(session_id, session)

    @app.get("/api/sessions")
    def list_sessions() -> list[dict]:
        return [_session_view(sid, store.get(sid)) for sid in store.ids()]

    @app.get("/api/sessions/{session_id}")
    def session_view(session_id: str) -> dict:
        return _session_view(session_id, store.get(session_id))

    @app.post("/api/sessions/{session_id}/labels")
    def post_label(session_id: str, body: LabelBody) -> dict:
        session = store.get(session_id)
        idx = dataset.sample_by_id(body.sample_id).global_index
        with store.lock(session_id):
            labeled = session.assign_label(idx, body.value)
            store.persist(session_id)
        return {"labeled_count": labeled, "status": session.status}

    @app.post("/api/sessions/{session_id}/queue")
    def post_queue(session_id: str, body: QueueBody) -> dict:
        session = store.get(session_id)
        idx = dataset.sample_by_id(body.sample_id).global_index
        with store.lock(session_id):
            session.navigate("enqueue", idx)
            store.persist(session_id)
        return {
            "queue": list(session.queue),
            "labeled_count": session.labeled_count,
        }

    @app.post("/api/sessions/{session_id}/navigate")
    def post_navigate(session_id: str, body: NavigateBody) -> dict:
        session = store.get(session_id)
        idx = None
        if body.sample_id is not None:
            idx = dataset.sample_by_id(body.sample_id).global_index
        with store.lock(session_id):
            current = session.navigate(body.action, idx)
            store.persist(session_id)
        return {
            "current": None
            if current is None
            else {"index": current, "sample_id": session.sample_ids[current]},
            "labeled_count": session.labeled_count,
            "queue": list(session.queue),
        }

    @app.get("/api/sessions/{session_id}/export.csv")
    def session_export(session_id: str) -> Response:
        payload = export_csv(store.get(session_id))
        return Response(content=payload, media_type="text/csv; charset=utf-8")

    # ---------------------------------------------------------------- media

    @app.get("/media/{sample_id}/{kind}")
    def media(sample_id: str, kind: str, request: Request) -> Response:
        sample = dataset.sample_by_id(sample_id)
        ref = next((m for m in sample.media_refs if m.kind == kind), None)
        if ref is None:
            raise MissingFileError(f"sample {sample_id} has no {kind} media")
        path = dataset_root / ref.uri
        if not path.is_file():
            raise MissingFileError(str(path))
        blob = path.read_bytes()
        headers = {"Accept-Ranges": "bytes"}
        range_header = request.headers.get("range")
        if range_header:
            parsed = _parse_range(range_header, len(blob))
            if parsed is not None:
                start, end = parsed
                headers["Content-Range"] = f"bytes {start}-{end}/{len(blob)}"
                return Response(
                    content=blob[start : end + 1], status_code=206, headers=headers
                )
        return Response(content=blob, headers=headers)

    # ------------------------------------------------------------- analysis

    def _sessions_for(track: str, group: str | None) -> dict[str, list[AnnotationSession]]:
        by_method: dict[str, list[AnnotationSession]] = {}
        for sid in store.ids():
            session = store.get(sid)
            if session.config.track != track:
                continue
            if group and group != "all" and session.config.annotator_group != group:
                continue
            by_method.setdefault(session.config.method, []).append(session)
        return by_method

    @app.get("/api/analysis/histograms")
    def analysis_histograms(track: str, group: str | None = None) -> dict:
        scheme = dataset.scheme(track)
        by_method = _sessions_for(track, group)
        out: dict = {"track": track, "classes": list(scheme.class_ids), "methods": {}}
        if track in dataset.ground_truth:
            reference = label_histogram(dataset.ground_truth[track], scheme)
            out["reference"] = list(reference.proportions)
        for method, sessions in sorted(by_method.items()):
            hists = []
            per_annotator = {}
            for s in sessions:
                if not s.labels:
                    continue
                hist = label_histogram(s.labels, scheme)
                hists.append(hist)
                per_annotator[s.config.annotator_id] = list(hist.proportions)
            entry: dict = {"annotators": per_annotator}
            if len(hists) >= 2:
                stats = histogram_group_stats(hists)
                entry["mean"] = list(stats.mean)
                entry["sd"] = list(stats.sd)
                entry["instability"] = mean_pairwise_hellinger(hists)
            elif hists:
                entry["mean"] = list(hists[0].proportions)
            out["methods"][method] = entry
        return out

    @app.get("/api/analysis/risk")
    def analysis_risk(
        track: str, group: str = "all", k: int = 5, metric: str = COSINE
    ) -> dict:
        scheme = dataset.scheme(track)
        truth = dataset.ground_truth.get(track)
        by_method = _sessions_for(track, group)
        if not by_method:
            raise UnknownSessionError(f"no sessions for track {track!r}")
        n_annotators = min(len(s) for s in by_method.values())
        reference = label_histogram(truth, scheme) if truth else None

        values: dict[str, dict[str, dict[str, float]]] = {track: {}}
        if reference is not None:
            try:
                cov: dict[str, float] = {}
                for method, sessions in by_method.items():
                    if n_annotators == 1:
                        failures = 0
                        for s in sessions:
                            _, failed = detect_rare_class_failure(
                                label_histogram(s.labels, scheme), reference
                            )
                            failures += int(failed)
                        cov[method] = float(failures)
                    else:
                        combined: dict = {}
                        for pos, s in enumerate(sessions):
                            combined.update({(pos, i): v for i, v in s.labels.items()})
                        _, failed = detect_rare_class_failure(
                            label_histogram(combined, scheme), reference
                        )
                        cov[method] = float(failed)
                values[track]["cov"] = cov
            except NoRareClassError:
                pass  # balanced reference: coverage failures do not apply
        if n_annotators >= 2:
            values[track]["dis"] = {
                method: mean_pairwise_hellinger(
                    [label_histogram(s.labels, scheme) for s in sessions]
                )
                for method, sessions in by_method.items()
            }
        if truth and n_annotators != 2:
            perf: dict[str, list[float]] = {}
            for method, sessions in by_method.items():
                perf[method] = []
                for s in sessions:
                    labeling = labeling_from_session(s)
                    protocol = EvalProtocol(
                        checkpoints=(len(labeling.sequence),),
                        n_repeats=1,
                        k=k,
                        metric=metric,
                    )
                    curve = learning_curve([labeling], dataset, track, protocol)
                    perf[method].append(curve.points[0].mean_score)
            values[track][MOD] = {
                m: float(v) for m, v in detect_performance_failure(perf).items()
            }

        condition = RiskCondition(
            task=dataset.name,
            annotator_group=group,
            n_annotators=n_annotators,
            metrics=tuple(m for m in ALL_METRICS if m in values[track]),
        )
        report = build_risk_report(condition, values)
        return {
            "task": report.condition.task,
            "annotator_group": report.condition.annotator_group,
            "n_annotators": report.condition.n_annotators,
            "metrics": list(report.condition.metrics),
            "scores": dict(report.scores),
            "ordering": report.ordering,
            "raw_values": {f"{t}/{m}": v for (t, m), v in report.raw_values.items()},
        }

    @app.get("/api/analysis/curve")
    def analysis_curve(
        sessions: str,
        track: str,
        checkpoints: str | None = None,
        k: int = 5,
        repeats: int = 10,
        metric: str = COSINE,
        seed: int = 0,
    ) -> dict:
        ids = [s for s in sessions.split(",") if s]
        labelings = [labeling_from_session(store.get(sid)) for sid in ids]
        budget = min(len(l.sequence) for l in labelings)
        marks = (
            tuple(int(c) for c in checkpoints.split(","))
            if checkpoints
            else tuple(n for n in range(50, 301, 50) if n < budget) + (budget,)
        )
        protocol = EvalProtocol(checkpoints=marks, n_repeats=repeats, k=k, metric=metric)
        curve = learning_curve(labelings, dataset, track, protocol, seed=seed)
        return {
            "track": track,
            "sessions": ids,
            "points": [
                {"n_labels": p.n_labels, "mean_score": p.mean_score, "scores": list(p.scores)}
                for p in curve.points
            ],
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
