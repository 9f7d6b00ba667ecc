"""Batch entry points: ingest, project, sample, simulate, analyze, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Seeds are always explicit flags so every output is reproducible; nothing is
derived from the wall clock except label timestamps inside sessions.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import matrixio
from .dataset import Dataset, ingest_dataset, validate_features
from .errors import MissingFileError, WorkbenchError
from .evaluation import (
    CurvePoint,
    EvalProtocol,
    LearningCurve,
    knn_classify,
    learning_curve,
    standard_checkpoints,
    uar,
)
from .labelio import group_rows, labeling_from_rows, read_label_csv
from .labelstats import label_histogram
from .projection import ProjectionRegistry, TsneConfig, compute_pca, compute_tsne
from .risk import RiskCondition, build_risk_report
from .sampling import COSINE, EUCLIDEAN, sample_faft, sample_random
from .session import export_csv, save_session
from .simulate import RegionBias, simulate_annotation

METHOD_FLAGS = {"rnd": "RND", "faft": "FAFT", "2dv": "2DV"}


def projections_dir(dataset_dir: Path) -> Path:
    return Path(dataset_dir) / "projections"


@click.group()
def cli() -> None:
    """Annotation workbench batch commands."""


@cli.command("ingest-check")
@click.argument("dataset_dir", type=click.Path(exists=True, path_type=Path))
def ingest_check(dataset_dir: Path) -> None:
    """Validate a dataset manifest and print a summary."""
    ds = ingest_dataset(dataset_dir)
    issues = validate_features(ds.features)
    click.echo(f"name: {ds.name}")
    click.echo(f"samples: {ds.n_samples}")
    click.echo(f"feature dims: {ds.features.n_dims}")
    for scheme in ds.schemes:
        truth = len(ds.ground_truth.get(scheme.track_name, {}))
        click.echo(
            f"track {scheme.track_name}: {len(scheme.classes)} classes, "
            f"{truth} ground-truth labels"
        )
    warnings = [i for i in issues if i.severity == "warning"]
    if warnings:
        click.echo(f"warnings: {len(warnings)} all-zero feature rows", err=True)
    click.echo("ok")


@cli.group()
def project() -> None:
    """Compute or import a named 2D projection."""


def _write_projection(dataset_dir: Path, name: str, coords: np.ndarray, out: Path | None) -> Path:
    target = out or projections_dir(dataset_dir) / f"{name}.bin"
    target.parent.mkdir(parents=True, exist_ok=True)
    matrixio.write_matrix(target, coords)
    click.echo(f"wrote {target}")
    return target


@project.command("pca")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--name", default="pca", show_default=True)
@click.option("--out", type=click.Path(path_type=Path))
def project_pca(dataset_dir: Path, name: str, out: Path | None) -> None:
    ds = ingest_dataset(dataset_dir)
    proj = compute_pca(ds.features, name=name)
    _write_projection(dataset_dir, name, proj.coords, out)


@project.command("tsne")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--name", default="tsne", show_default=True)
@click.option("--perplexity", default=30.0, show_default=True)
@click.option("--iterations", default=1000, show_default=True)
@click.option("--learning-rate", default=200.0, show_default=True)
@click.option("--exaggeration", default=12.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path))
def project_tsne(
    dataset_dir: Path,
    name: str,
    perplexity: float,
    iterations: int,
    learning_rate: float,
    exaggeration: float,
    seed: int,
    out: Path | None,
) -> None:
    ds = ingest_dataset(dataset_dir)
    cfg = TsneConfig(
        perplexity=perplexity,
        n_iterations=iterations,
        learning_rate=learning_rate,
        early_exaggeration_factor=exaggeration,
        seed=seed,
    )
    proj = compute_tsne(ds.features, cfg, name=name)
    _write_projection(dataset_dir, name, proj.coords, out)


@project.command("import")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--name", required=True)
@click.option("--coords", "coords_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path))
def project_import(dataset_dir: Path, name: str, coords_path: Path, out: Path | None) -> None:
    ds = ingest_dataset(dataset_dir)
    registry = ProjectionRegistry()
    proj = registry.import_file(name, coords_path, n_expected=ds.n_samples)
    _write_projection(dataset_dir, name, proj.coords, out)


@cli.command("sample")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--method", type=click.Choice(["rnd", "faft"]), required=True)
@click.option("--budget", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--metric", type=click.Choice([COSINE, EUCLIDEAN]), default=COSINE, show_default=True)
@click.option("--out", type=click.Path(path_type=Path))
def sample_cmd(
    dataset_dir: Path, method: str, budget: int, seed: int, metric: str, out: Path | None
) -> None:
    """Emit a deterministic annotation order, one global index per line."""
    ds = ingest_dataset(dataset_dir)
    if method == "rnd":
        order = sample_random(ds.n_samples, budget, seed)
    else:
        order = sample_faft(ds.features, budget, seed, metric)
    text = "\n".join(str(i) for i in order.order) + "\n"
    if out:
        out.write_text(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


def _load_projection_coords(dataset_dir: Path, ds: Dataset, name: str) -> np.ndarray:
    path = projections_dir(dataset_dir) / f"{name}.bin"
    if path.is_file():
        coords = matrixio.read_matrix(path)
        if coords.shape != (ds.n_samples, 2):
            raise MissingFileError(f"{path}: wrong shape for this dataset")
        return coords
    if name == "pca":
        return compute_pca(ds.features).coords
    raise MissingFileError(f"no projection file {path}; run 'project' first")


@cli.command("simulate")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--track", required=True)
@click.option("--method", type=click.Choice(list(METHOD_FLAGS)), required=True)
@click.option("--budget", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--noise-rate", default=0.0, show_default=True)
@click.option("--annotator-id", default="sim", show_default=True)
@click.option("--annotator-group", type=click.Choice(["expert", "non_expert"]), default="expert", show_default=True)
@click.option("--metric", type=click.Choice([COSINE, EUCLIDEAN]), default=COSINE, show_default=True)
@click.option("--bias-projection", help="projection name for a region-biased 2DV annotator")
@click.option("--bias-center", help="x,y center of the biased region")
@click.option("--bias-radius", type=float, default=1.0, show_default=True)
@click.option("--snapshot", type=click.Path(path_type=Path), help="write the session snapshot here")
@click.option("--csv", "csv_out", type=click.Path(path_type=Path), help="write the label CSV here")
def simulate_cmd(
    dataset_dir: Path,
    track: str,
    method: str,
    budget: int,
    seed: int,
    noise_rate: float,
    annotator_id: str,
    annotator_group: str,
    metric: str,
    bias_projection: str | None,
    bias_center: str | None,
    bias_radius: float,
    snapshot: Path | None,
    csv_out: Path | None,
) -> None:
    """Run a simulated annotator against the dataset's ground truth."""
    ds = ingest_dataset(dataset_dir)
    bias = None
    if bias_projection:
        if not bias_center:
            raise click.UsageError("--bias-center is required with --bias-projection")
        coords = _load_projection_coords(dataset_dir, ds, bias_projection)
        from .projection import Projection2D

        x, y = (float(v) for v in bias_center.split(","))
        bias = RegionBias(
            projection=Projection2D(bias_projection, coords, "imported"),
            center=(x, y),
            radius=bias_radius,
        )
    session = simulate_annotation(
        ds,
        track,
        METHOD_FLAGS[method],
        budget,
        seed,
        noise_rate=noise_rate,
        region_bias=bias,
        annotator_id=annotator_id,
        annotator_group=annotator_group,
        metric=metric,
    )
    if snapshot:
        snapshot.parent.mkdir(parents=True, exist_ok=True)
        snapshot.write_bytes(save_session(session))
        click.echo(f"wrote {snapshot}")
    payload = export_csv(session)
    if csv_out:
        csv_out.parent.mkdir(parents=True, exist_ok=True)
        csv_out.write_bytes(payload)
        click.echo(f"wrote {csv_out}")
    elif not snapshot:
        click.echo(payload.decode("utf-8"), nl=False)


@cli.command("histograms")
@click.argument("label_csvs", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--track", required=True)
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
def histograms_cmd(label_csvs, dataset_dir: Path, track: str, out_dir: Path) -> None:
    """Per-method label histograms with cross-annotator SD, as CSV + SVG."""
    from .reports import write_histogram_report

    ds = ingest_dataset(dataset_dir)
    scheme = ds.scheme(track)
    rows = [r for path in label_csvs for r in read_label_csv(path) if r.track == track]
    if not rows:
        raise MissingFileError(f"no rows for track {track!r} in the given CSVs")
    grouped = group_rows(rows)
    per_method = {
        method: [
            (annotator, label_histogram({r.sample_id: r.value for r in records}, scheme))
            for annotator, records in sorted(annotators.items())
        ]
        for method, annotators in grouped.items()
    }
    reference = None
    if track in ds.ground_truth:
        reference = label_histogram(ds.ground_truth[track], scheme)
    csv_path, svg_path = write_histogram_report(out_dir, scheme, per_method, reference)
    click.echo(f"wrote {csv_path}")
    click.echo(f"wrote {svg_path}")


@cli.command("risk-report")
@click.option("--values", "values_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out-dir", type=click.Path(path_type=Path))
def risk_report_cmd(values_path: Path, out_dir: Path | None) -> None:
    """Rank methods per condition from a raw metric-value JSON file."""
    from .reports import render_risk_table, write_risk_report

    payload = json.loads(values_path.read_text(encoding="utf-8"))
    reports = []
    for entry in payload["conditions"]:
        condition = RiskCondition(
            task=entry["task"],
            annotator_group=entry["annotator_group"],
            n_annotators=entry["n_annotators"],
        )
        reports.append(build_risk_report(condition, entry["values"]))
    click.echo(render_risk_table(reports), nl=False)
    if out_dir:
        csv_path, txt_path = write_risk_report(out_dir, reports)
        click.echo(f"wrote {csv_path}")
        click.echo(f"wrote {txt_path}")


@cli.command("eval-curve")
@click.argument("label_csvs", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--track", required=True)
@click.option("--merge", is_flag=True, help="merge annotators per method (majority vote)")
@click.option("--checkpoints", help="comma-separated label counts; default 50,100,...,budget")
@click.option("--k", default=5, show_default=True)
@click.option("--repeats", default=10, show_default=True)
@click.option("--metric", type=click.Choice([COSINE, EUCLIDEAN]), default=COSINE, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
def eval_curve_cmd(
    label_csvs,
    dataset_dir: Path,
    track: str,
    merge: bool,
    checkpoints: str | None,
    k: int,
    repeats: int,
    metric: str,
    seed: int,
    out_dir: Path,
) -> None:
    """Learning curves per method from exported label CSVs, as CSV + SVG.

    The test set is every ground-truth sample not annotated by anyone in
    the input; the reference line trains on the annotated samples' ground
    truth labels.
    """
    from .reports import write_curve_report

    ds = ingest_dataset(dataset_dir)
    scheme = ds.scheme(track)
    truth = ds.ground_truth.get(track)
    if not truth:
        raise MissingFileError(f"dataset has no ground truth for track {track!r}")
    rows = [r for path in label_csvs for r in read_label_csv(path) if r.track == track]
    if not rows:
        raise MissingFileError(f"no rows for track {track!r} in the given CSVs")
    grouped = group_rows(rows)

    annotated = {ds.sample_by_id(r.sample_id).global_index for r in rows}
    test_ids = tuple(
        s.sample_id
        for s in ds.samples
        if s.sample_id in truth and s.global_index not in annotated
    )
    if not test_ids:
        raise MissingFileError("no held-out ground-truth samples remain for testing")

    curves: dict[str, LearningCurve] = {}
    for method, annotators in sorted(grouped.items()):
        labelings = [
            labeling_from_rows(ds, records) for _, records in sorted(annotators.items())
        ]
        budget = min(len(l.sequence) for l in labelings)
        marks = (
            tuple(int(c) for c in checkpoints.split(","))
            if checkpoints
            else standard_checkpoints(budget)
        )
        protocol = EvalProtocol(
            checkpoints=marks, n_repeats=repeats, k=k, metric=metric, test_sample_ids=test_ids
        )
        if merge or len(labelings) == 1:
            curves[method] = learning_curve(labelings, ds, track, protocol, seed=seed)
        else:
            singles = [
                learning_curve([labeling], ds, track, protocol, seed=seed)
                for labeling in labelings
            ]
            points = []
            for i, n in enumerate(marks):
                means = [c.points[i].mean_score for c in singles]
                points.append(
                    CurvePoint(
                        n_labels=n,
                        mean_score=float(np.mean(means)),
                        scores=tuple(means),
                    )
                )
            curves[method] = LearningCurve(points=tuple(points))

    # reference level: ground-truth labels of everything anyone annotated
    train_idx = sorted(i for i in annotated if ds.samples[i].sample_id in truth)
    test_idx = [ds.sample_by_id(s).global_index for s in test_ids]
    reference_level = None
    if train_idx:
        predictions = knn_classify(
            ds.features.values[train_idx],
            [truth[ds.samples[i].sample_id] for i in train_idx],
            ds.features.values[test_idx],
            k,
            metric,
            scheme.class_ids,
        )
        reference_level = uar(predictions, [truth[s] for s in test_ids], scheme.class_ids)

    csv_path, svg_path = write_curve_report(
        out_dir, curves, reference_level, title=f"learning curve: {track}"
    )
    click.echo(f"wrote {csv_path}")
    click.echo(f"wrote {svg_path}")


@cli.command("serve")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--store", type=click.Path(path_type=Path), help="session snapshot directory")
@click.option("--ui", "ui_dir", type=click.Path(path_type=Path), help="built browser UI directory to mount at /")
def serve_cmd(
    dataset_dir: Path, host: str, port: int, store: Path | None, ui_dir: Path | None
) -> None:
    """Serve the HTTP API and, when built, the browser UI."""
    import uvicorn

    from .server import create_app

    app = create_app(dataset_dir, store or dataset_dir / "sessions", ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except WorkbenchError as exc:
        click.echo(f"error [{exc.kind}]: {exc}", err=True)
        return 2
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc!r}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
