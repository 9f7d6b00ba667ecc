"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines on the terminal.  Tolerances and time budgets are pinned here and are
not meant to be loosened.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest

from tsworkbench.cli import main
from tsworkbench.labelstats import (
    LabelHistogram,
    hellinger,
    histogram_group_stats,
    label_histogram,
    merge_majority,
)
from tsworkbench.errors import EmptyQueueError, SessionCompleteError
from tsworkbench.evaluation import EvalProtocol, labeling_from_session, learning_curve
from tsworkbench.projection import (
    TsneConfig,
    compute_pca,
    compute_tsne,
    joint_affinities,
    kl_divergence,
    kl_gradient,
)
from tsworkbench.risk import (
    RiskCondition,
    build_risk_report,
    detect_performance_failure,
    detect_rare_class_failure,
    instability,
)
from tsworkbench.sampling import COSINE, EUCLIDEAN, sample_faft
from tsworkbench.session import (
    SessionConfig,
    create_session,
    export_csv,
    export_event_log,
    load_session,
    parse_event_log,
    replay_events,
    save_session,
)
from tsworkbench.simulate import RegionBias, make_clustered_dataset, simulate_annotation

from conftest import make_dataset, make_scheme
from test_sampling import faft_bruteforce, scalar_distance
from test_session import apply_random_mutations, ticking_clock


@contextmanager
def criterion(name: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_s, f"{name} took {elapsed:.1f}s, budget {budget_s}s"
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.1f}s)")


def covering_radius(features: np.ndarray, subset, metric: str) -> float:
    return max(
        min(scalar_distance(features[x], features[y], metric) for y in subset)
        for x in range(features.shape[0])
    )


def test_faft_oracle_equivalence_and_monotonicity():
    # exact order equality with a from-scratch argmax re-evaluation at every
    # step, plus the non-increasing min-distance sequence, on 200 instances
    with criterion("FAFT oracle equivalence + monotonicity", 10.0):
        gen = np.random.default_rng(20240)
        for trial in range(200):
            n = int(gen.integers(4, 31))
            d = int(gen.integers(1, 9))
            budget = int(gen.integers(1, min(10, n) + 1))
            metric = COSINE if trial % 2 == 0 else EUCLIDEAN
            features = gen.normal(size=(n, d))
            result = sample_faft(features, budget, seed=trial, metric=metric)
            expected = faft_bruteforce(features, budget, result.order[0], metric)
            assert list(result.order) == expected, f"instance {trial} diverged"
            radii = [
                min(scalar_distance(features[result.order[t]], features[result.order[u]], metric)
                    for u in range(t))
                for t in range(1, budget)
            ]
            assert all(b <= a + 1e-12 for a, b in zip(radii, radii[1:]))


def test_faft_two_approximation():
    with criterion("FAFT 2-approximation for k-center", 30.0):
        gen = np.random.default_rng(31337)
        for trial in range(50):
            n = int(gen.integers(4, 13))
            k = int(gen.integers(1, 5))
            metric = COSINE if trial % 2 == 0 else EUCLIDEAN
            features = gen.normal(size=(n, 3))
            picked = sample_faft(features, k, seed=trial, metric=metric).order
            faft_radius = covering_radius(features, picked, metric)
            optimal = min(
                covering_radius(features, subset, metric)
                for subset in itertools.combinations(range(n), k)
            )
            assert faft_radius <= 2.0 * optimal + 1e-12, (
                f"instance {trial}: {faft_radius} > 2x{optimal}"
            )


def test_hellinger_value_and_metric_properties():
    with criterion("Hellinger reference value + metric suite", 5.0):
        scheme = make_scheme("t", ["a", "b"])
        p = LabelHistogram(scheme, np.array([1.0, 0.0]), 10)
        q = LabelHistogram(scheme, np.array([0.5, 0.5]), 10)
        assert hellinger(p, q) == pytest.approx(0.541196, abs=1e-6)

        wide = make_scheme("w", ["a", "b", "c", "d"])
        gen = np.random.default_rng(99)
        for _ in range(1000):
            hists = [
                LabelHistogram(wide, gen.dirichlet(np.ones(4)), 10) for _ in range(3)
            ]
            ab, ba = hellinger(hists[0], hists[1]), hellinger(hists[1], hists[0])
            assert ab == ba  # symmetry holds exactly
            assert hellinger(hists[0], hists[2]) <= ab + hellinger(hists[1], hists[2]) + 1e-12
        same = LabelHistogram(wide, np.array([0.1, 0.2, 0.3, 0.4]), 10)
        assert hellinger(same, same) == 0.0


def test_risk_pipeline_fixture_renders_reference_row(capsys):
    with criterion("risk pipeline fixture rendering", 1.0):
        values = {
            "posture": {
                "cov": {"FAFT": 0, "RND": 0, "2DV": 1},
                "mod": {"FAFT": 0, "RND": 0, "2DV": 2},
                "dis": {"FAFT": 0.10, "RND": 0.10, "2DV": 0.30},
            },
            "movement": {
                "cov": {"FAFT": 0, "RND": 0, "2DV": 1},
                "mod": {"FAFT": 0, "RND": 1, "2DV": 2},
                "dis": {"FAFT": 0.20, "RND": 0.15, "2DV": 0.20},
            },
        }
        condition = RiskCondition(task="IMA", annotator_group="expert", n_annotators=1)
        report = build_risk_report(condition, values)
        assert report.ordering == "FAFT (7.0) = RND (7.0) > 2DV (13.0)"

        two = RiskCondition(task="IMA", annotator_group="expert", n_annotators=2)
        assert "mod" not in two.metrics
        two_report = build_risk_report(two, values)
        assert all(metric != "mod" for _, metric in two_report.ranks)

        # same rendering also reachable through the CLI
        from pathlib import Path

        fixture = Path(__file__).parent / "fixtures" / "risk_values.json"
        assert main(["risk-report", "--values", str(fixture)]) == 0
        out = capsys.readouterr().out
        assert "FAFT (7.0) = RND (7.0) > 2DV (13.0)" in out


def test_rare_class_boundary_rule():
    with criterion("rare-class strict boundary", 5.0):
        scheme = make_scheme("m", ["common", "mid", "low", "rarest"])
        reference = LabelHistogram(scheme, np.array([0.60, 0.30, 0.08, 0.02]), 100)
        failing = LabelHistogram(scheme, np.array([0.70, 0.20, 0.092, 0.008]), 100)
        passing = LabelHistogram(scheme, np.array([0.70, 0.20, 0.09, 0.01]), 100)
        _, failed = detect_rare_class_failure(failing, reference)
        assert failed
        _, failed = detect_rare_class_failure(passing, reference)
        assert not failed


def test_performance_failure_rule():
    with criterion("performance-failure threshold", 5.0):
        failures = detect_performance_failure(
            {"RND": [0.80], "FAFT": [0.75], "2DV": [0.70]}
        )
        assert sum(failures.values()) == 1
        assert failures["2DV"] == 1


def test_tsne_numerics():
    with criterion("t-SNE gradient, affinities, determinism", 60.0):
        gen = np.random.default_rng(424242)
        x = gen.normal(size=(40, 6))
        p = joint_affinities(x, perplexity=10.0)

        assert np.array_equal(p, p.T)
        assert (p >= 0).all()
        assert abs(p.sum() - 1.0) < 1e-10

        eps = 1e-6
        for _ in range(5):
            y = gen.normal(scale=2.0, size=(40, 2))
            analytic = kl_gradient(p, y)
            numeric = np.zeros_like(y)
            for i in range(40):
                for j in range(2):
                    up, down = y.copy(), y.copy()
                    up[i, j] += eps
                    down[i, j] -= eps
                    numeric[i, j] = (kl_divergence(p, up) - kl_divergence(p, down)) / (2 * eps)
            rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
            assert rel <= 1e-4, f"gradient relative error {rel}"

        cfg = TsneConfig(perplexity=10.0, n_iterations=1000, seed=7)
        first = compute_tsne(x, cfg)
        second = compute_tsne(x, cfg)
        assert first.coords.tobytes() == second.coords.tobytes()


def test_pca_orthonormality_and_explained_variance():
    with criterion("PCA orthonormality + explained variance", 10.0):
        gen = np.random.default_rng(1234)
        for _ in range(20):
            x = gen.normal(size=(100, 10)) * gen.uniform(0.5, 2.0, size=10)
            proj = compute_pca(x)
            centered = x - x.mean(axis=0)
            loadings, *_ = np.linalg.lstsq(centered, proj.coords, rcond=None)
            gram = loadings.T @ loadings
            assert np.abs(gram - np.eye(2)).max() <= 1e-8
            eigvals = np.sort(np.linalg.eigvalsh(np.cov(centered.T)))[::-1]
            captured = proj.coords.var(axis=0, ddof=1)
            assert abs(captured[0] - eigvals[0]) <= 1e-8
            assert abs(captured[1] - eigvals[1]) <= 1e-8


def test_session_laws():
    with criterion("session snapshot/export/replay laws", 20.0):
        features = np.random.default_rng(5).normal(size=(20, 4))
        dataset = make_dataset(features, class_ids=["a", "b", "c"])
        methods = ["RND", "FAFT", "2DV"]
        for run in range(100):
            method = methods[run % 3]
            cfg = SessionConfig(
                dataset_name="mem",
                track="kind",
                method=method,
                budget=8,
                seed=run,
                annotator_id=f"ann{run}",
                annotator_group="expert" if run % 2 else "non_expert",
            )
            session = create_session(dataset, cfg, clock=ticking_clock())
            apply_random_mutations(session, np.random.default_rng(run), steps=40)

            restored = load_session(save_session(session))
            assert restored == session

            assert export_csv(session) == export_csv(session)
            assert export_csv(restored) == export_csv(session)

            events = parse_event_log(export_event_log(session))
            replayed = replay_events(dataset, cfg, events, clock=ticking_clock())
            assert replayed.labels == session.labels
            assert replayed.label_sequence == session.label_sequence


def test_majority_merge_rules():
    with criterion("majority merge + seeded ties", 5.0):
        for seed in range(100):
            assert merge_majority([{"s": "A"}, {"s": "A"}, {"s": "B"}], seed=seed) == {"s": "A"}
        tie = [{"s": "A"}, {"s": "B"}]
        first = merge_majority(tie, seed=4711)
        for _ in range(100):
            assert merge_majority(tie, seed=4711) == first


def test_end_to_end_pipeline():
    # sample -> simulate (3 annotators x 3 methods) -> merge -> histograms
    # -> risk report -> learning curves, on a synthetic 3-class dataset with
    # oracle annotators; small-budget FAFT beats a region-biased free-form run
    with criterion("end-to-end simulated pipeline", 300.0):
        dataset = make_clustered_dataset(
            n_samples=3000,
            n_classes=3,
            n_dims=8,
            seed=9,
            proportions=[0.5, 0.42, 0.08],
        )
        track = "cluster"
        scheme = dataset.scheme(track)
        truth = dataset.ground_truth[track]
        budget = 360
        checkpoints = (50, 100, 150, 200, 250, 300)

        projection = compute_pca(dataset.features)
        majority_idx = [
            s.global_index for s in dataset.samples if truth[s.sample_id] == "class_0"
        ]
        center = projection.coords[majority_idx].mean(axis=0)

        sessions: dict[str, list] = {"RND": [], "FAFT": [], "2DV": []}
        for i, seed in enumerate((101, 102, 103)):
            sessions["RND"].append(
                simulate_annotation(dataset, track, "RND", budget, seed,
                                    annotator_id=f"r{i}")
            )
        for i, seed in enumerate((201, 202, 203)):
            sessions["FAFT"].append(
                simulate_annotation(dataset, track, "FAFT", budget, seed,
                                    annotator_id=f"f{i}", metric=COSINE)
            )
        for i, seed in enumerate((301, 302, 303)):
            bias = RegionBias(projection, (center[0] + 0.1 * i, center[1]), radius=3.0)
            sessions["2DV"].append(
                simulate_annotation(dataset, track, "2DV", budget, seed,
                                    region_bias=bias, annotator_id=f"v{i}")
            )

        # histograms with cross-annotator SD per method
        reference = label_histogram(truth, scheme)
        hists_by_method = {
            m: [label_histogram(s.labels, scheme) for s in ss]
            for m, ss in sessions.items()
        }
        for m, hists in hists_by_method.items():
            stats = histogram_group_stats(hists)
            assert np.isfinite(stats.mean).all() and np.isfinite(stats.sd).all()
        assert hellinger(hists_by_method["2DV"][0], reference) > hellinger(
            hists_by_method["FAFT"][0], reference
        )

        # risk report over the three failure metrics at full labels
        cov = {}
        for m, hists in hists_by_method.items():
            combined = {}
            for pos, s in enumerate(sessions[m]):
                combined.update({(pos, i): v for i, v in s.labels.items()})
            _, failed = detect_rare_class_failure(
                label_histogram(combined, scheme), reference
            )
            cov[m] = float(failed)
        dis = instability(hists_by_method)

        protocol = EvalProtocol(checkpoints=checkpoints, n_repeats=10, k=5, metric=COSINE)
        curves = {}
        perf = {}
        for m, ss in sessions.items():
            labelings = [labeling_from_session(s) for s in ss]
            curves[m] = learning_curve(labelings, dataset, track, protocol, seed=1)
            perf[m] = [curves[m].points[-1].mean_score]
        mod = {m: float(v) for m, v in detect_performance_failure(perf).items()}

        condition = RiskCondition(task=dataset.name, annotator_group="all", n_annotators=3)
        report = build_risk_report(
            condition, {track: {"cov": cov, "mod": mod, "dis": dis}}
        )
        assert report.ordering
        assert cov["2DV"] == 1.0 and cov["FAFT"] == 0.0  # bias starves the rare class

        gap = curves["FAFT"].mean_at(50) - curves["2DV"].mean_at(50)
        assert gap >= 0.05, f"FAFT@50 - biased2DV@50 = {gap:.3f} < 0.05"
