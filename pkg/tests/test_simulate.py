import numpy as np
import pytest

from tsworkbench.errors import MissingGroundTruthError
from tsworkbench.labelstats import hellinger, label_histogram
from tsworkbench.projection import compute_pca
from tsworkbench.simulate import RegionBias, make_clustered_dataset, simulate_annotation

from conftest import make_dataset


@pytest.fixture(scope="module")
def clustered():
    return make_clustered_dataset(n_samples=600, n_classes=3, n_dims=6, seed=0)


class TestMakeClusteredDataset:
    def test_shapes_and_truth(self, clustered):
        assert clustered.n_samples == 600
        assert clustered.features.n_dims == 6
        truth = clustered.ground_truth["cluster"]
        assert len(truth) == 600
        assert set(truth.values()) == {"class_0", "class_1", "class_2"}

    def test_deterministic(self):
        a = make_clustered_dataset(n_samples=50, seed=5)
        b = make_clustered_dataset(n_samples=50, seed=5)
        np.testing.assert_array_equal(a.features.values, b.features.values)
        assert a.ground_truth == b.ground_truth

    def test_proportions_respected(self):
        ds = make_clustered_dataset(n_samples=2000, proportions=[0.8, 0.15, 0.05], seed=1)
        truth = ds.ground_truth["cluster"]
        rare = sum(1 for v in truth.values() if v == "class_2") / 2000
        assert rare == pytest.approx(0.05, abs=0.02)


class TestSimulateAnnotation:
    @pytest.mark.parametrize("method", ["RND", "FAFT", "2DV"])
    def test_oracle_annotator_matches_truth(self, clustered, method):
        session = simulate_annotation(clustered, "cluster", method, budget=40, seed=3)
        truth = clustered.ground_truth["cluster"]
        assert session.labeled_count == 40
        assert session.status == "complete"
        for idx, value in session.labels.items():
            assert value == truth[clustered.samples[idx].sample_id]

    def test_full_noise_binary_flips_everything(self):
        features = np.random.default_rng(1).normal(size=(30, 3))
        truth = {f"s{i:04d}": ("a" if i % 2 else "b") for i in range(30)}
        ds = make_dataset(features, class_ids=["a", "b"], ground_truth=truth)
        session = simulate_annotation(ds, "kind", "RND", budget=30, seed=2, noise_rate=1.0)
        for idx, value in session.labels.items():
            assert value != truth[ds.samples[idx].sample_id]

    def test_region_bias_distorts_distribution(self, clustered):
        truth = clustered.ground_truth["cluster"]
        scheme = clustered.scheme("cluster")
        reference = label_histogram(truth, scheme)
        projection = compute_pca(clustered.features)
        # center the bias on one class's cluster in the projection
        target = [s.global_index for s in clustered.samples if truth[s.sample_id] == "class_0"]
        center = projection.coords[target].mean(axis=0)
        biased = simulate_annotation(
            clustered, "cluster", "2DV", budget=60, seed=4,
            region_bias=RegionBias(projection, (center[0], center[1]), radius=1.0),
        )
        unbiased = simulate_annotation(clustered, "cluster", "2DV", budget=60, seed=4)
        h_biased = hellinger(label_histogram(biased.labels, scheme), reference)
        h_unbiased = hellinger(label_histogram(unbiased.labels, scheme), reference)
        assert h_biased > h_unbiased

    def test_biased_selection_stays_in_one_class(self, clustered):
        truth = clustered.ground_truth["cluster"]
        projection = compute_pca(clustered.features)
        target = [s.global_index for s in clustered.samples if truth[s.sample_id] == "class_1"]
        center = projection.coords[target].mean(axis=0)
        session = simulate_annotation(
            clustered, "cluster", "2DV", budget=30, seed=5,
            region_bias=RegionBias(projection, (center[0], center[1]), radius=1.0),
        )
        picked_classes = {truth[clustered.samples[i].sample_id] for i in session.labels}
        assert picked_classes == {"class_1"}

    def test_missing_ground_truth(self):
        ds = make_dataset(np.ones((10, 3)))
        with pytest.raises(MissingGroundTruthError):
            simulate_annotation(ds, "kind", "RND", budget=5, seed=0)

    def test_deterministic_given_seed(self, clustered):
        a = simulate_annotation(clustered, "cluster", "2DV", budget=25, seed=9, noise_rate=0.3)
        b = simulate_annotation(clustered, "cluster", "2DV", budget=25, seed=9, noise_rate=0.3)
        assert a.labels == b.labels
        assert a.order.order == b.order.order

    def test_ordered_methods_follow_their_order(self, clustered):
        session = simulate_annotation(clustered, "cluster", "FAFT", budget=20, seed=6)
        assert session.label_sequence == list(session.order.order[:20])
