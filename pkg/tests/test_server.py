import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from tsworkbench import matrixio
from tsworkbench.dataset import write_manifest
from tsworkbench.server import create_app
from tsworkbench.simulate import make_clustered_dataset


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    ds = make_clustered_dataset(
        n_samples=80, n_classes=3, n_dims=4, seed=1, proportions=[0.55, 0.40, 0.05]
    )
    # give one sample a small media file so the media endpoint has something
    media_dir = root / "data" / "media"
    media_dir.mkdir(parents=True)
    (media_dir / "clip.bin").write_bytes(bytes(range(200)) * 5)
    from tsworkbench.dataset import MediaRef

    ds.samples[0] = type(ds.samples[0])(
        ds.samples[0].sample_id, 0, (MediaRef("video", "media/clip.bin"),), 2.3
    )
    write_manifest(ds, root / "data")
    return root / "data"


@pytest.fixture()
def client(dataset_dir, tmp_path):
    app = create_app(dataset_dir, tmp_path / "store")
    with TestClient(app) as c:
        yield c


def make_session(client, method="2DV", budget=10, **extra):
    body = {
        "track": "cluster",
        "method": method,
        "budget": budget,
        "seed": 7,
        "annotator_id": "a1",
        "annotator_group": "expert",
    }
    body.update(extra)
    response = client.post("/api/sessions", json=body)
    assert response.status_code == 201, response.text
    return response.json()


class TestDatasetAndProjections:
    def test_dataset_summary(self, client):
        info = client.get("/api/dataset").json()
        assert info["n_samples"] == 80
        assert info["tracks"][0]["track_name"] == "cluster"
        assert len(info["samples"]) == 80

    def test_pca_served_by_default(self, client):
        names = [p["name"] for p in client.get("/api/projections").json()]
        assert "pca" in names

    def test_coords_binary_payload(self, client):
        raw = client.get("/api/projections/pca/coords")
        assert raw.status_code == 200
        assert raw.headers["content-type"].startswith("application/octet-stream")
        blob = raw.content
        assert int.from_bytes(blob[0:4], "little") == 80
        assert int.from_bytes(blob[4:8], "little") == 2

    def test_unknown_projection_404(self, client):
        response = client.get("/api/projections/nope/coords")
        assert response.status_code == 404
        assert response.json()["error"]["kind"] == "UnknownProjection"

    def test_tsne_job_lifecycle(self, client):
        body = {"name": "tsne-test", "perplexity": 5.0, "n_iterations": 60, "seed": 1}
        job = client.post("/api/projections/tsne", json=body).json()
        deadline = time.time() + 60
        while time.time() < deadline:
            status = client.get(f"/api/jobs/{job['job_id']}").json()
            if status["state"] in ("done", "failed", "cancelled"):
                break
            time.sleep(0.05)
        assert status["state"] == "done", status
        assert status["projection"] == "tsne-test"
        names = [p["name"] for p in client.get("/api/projections").json()]
        assert "tsne-test" in names

    def test_unknown_job_404(self, client):
        assert client.get("/api/jobs/zzz").status_code == 404

    def test_job_cancellation(self, client):
        body = {"name": "tsne-cancel", "perplexity": 5.0, "n_iterations": 200_000, "seed": 2}
        job = client.post("/api/projections/tsne", json=body).json()
        client.delete(f"/api/jobs/{job['job_id']}")
        deadline = time.time() + 30
        while time.time() < deadline:
            status = client.get(f"/api/jobs/{job['job_id']}").json()
            if status["state"] in ("cancelled", "done", "failed"):
                break
            time.sleep(0.05)
        assert status["state"] == "cancelled", status
        names = [p["name"] for p in client.get("/api/projections").json()]
        assert "tsne-cancel" not in names


class TestSessions:
    def test_create_and_view(self, client):
        view = make_session(client, method="RND")
        sid = view["session_id"]
        assert view["labeled_count"] == 0
        assert view["current"] is not None
        again = client.get(f"/api/sessions/{sid}").json()
        assert again["current"] == view["current"]

    def test_label_flow_and_counter(self, client):
        view = make_session(client)
        sid = view["session_id"]
        sample = client.get("/api/dataset").json()["samples"][3]["sample_id"]
        out = client.post(
            f"/api/sessions/{sid}/labels", json={"sample_id": sample, "value": "class_0"}
        ).json()
        assert out["labeled_count"] == 1
        assert out["status"] == "active"

    def test_unknown_class_maps_to_422(self, client):
        view = make_session(client)
        sid = view["session_id"]
        sample = client.get("/api/dataset").json()["samples"][0]["sample_id"]
        response = client.post(
            f"/api/sessions/{sid}/labels", json={"sample_id": sample, "value": "jumping"}
        )
        assert response.status_code == 422
        assert response.json()["error"]["kind"] == "UnknownClass"

    def test_queue_and_navigate(self, client):
        view = make_session(client)
        sid = view["session_id"]
        samples = client.get("/api/dataset").json()["samples"]
        client.post(f"/api/sessions/{sid}/queue", json={"sample_id": samples[5]["sample_id"]})
        client.post(f"/api/sessions/{sid}/queue", json={"sample_id": samples[9]["sample_id"]})
        first = client.post(f"/api/sessions/{sid}/navigate", json={"action": "next"}).json()
        second = client.post(f"/api/sessions/{sid}/navigate", json={"action": "next"}).json()
        assert first["current"]["index"] == 5
        assert second["current"]["index"] == 9

    def test_export_csv(self, client):
        view = make_session(client)
        sid = view["session_id"]
        sample = client.get("/api/dataset").json()["samples"][2]["sample_id"]
        client.post(f"/api/sessions/{sid}/labels", json={"sample_id": sample, "value": "class_1"})
        response = client.get(f"/api/sessions/{sid}/export.csv")
        assert response.status_code == 200
        lines = response.text.splitlines()
        assert lines[0].startswith("sample_id,track,method")
        assert len(lines) == 2

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/feedbeef").status_code == 404

    def test_sessions_persist_across_restart(self, dataset_dir, tmp_path):
        store = tmp_path / "store"
        with TestClient(create_app(dataset_dir, store)) as c:
            sid = make_session(c)["session_id"]
            sample = c.get("/api/dataset").json()["samples"][1]["sample_id"]
            c.post(f"/api/sessions/{sid}/labels", json={"sample_id": sample, "value": "class_0"})
        with TestClient(create_app(dataset_dir, store)) as c:
            view = c.get(f"/api/sessions/{sid}").json()
            assert view["labeled_count"] == 1

    def test_concurrent_labels_serialize(self, client):
        view = make_session(client, budget=40)
        sid = view["session_id"]
        samples = [s["sample_id"] for s in client.get("/api/dataset").json()["samples"]]
        errors = []

        def label(sample_id):
            try:
                r = client.post(
                    f"/api/sessions/{sid}/labels",
                    json={"sample_id": sample_id, "value": "class_0"},
                )
                assert r.status_code == 200
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=label, args=(samples[i],)) for i in range(12)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert client.get(f"/api/sessions/{sid}").json()["labeled_count"] == 12

    def test_concurrent_same_sample_counts_once(self, client):
        view = make_session(client, budget=5)
        sid = view["session_id"]
        sample = client.get("/api/dataset").json()["samples"][4]["sample_id"]
        threads = [
            threading.Thread(
                target=lambda: client.post(
                    f"/api/sessions/{sid}/labels",
                    json={"sample_id": sample, "value": "class_0"},
                )
            )
            for _ in range(8)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert client.get(f"/api/sessions/{sid}").json()["labeled_count"] == 1


class TestMedia:
    def test_full_file(self, client):
        sample = client.get("/api/dataset").json()["samples"][0]["sample_id"]
        response = client.get(f"/media/{sample}/video")
        assert response.status_code == 200
        assert len(response.content) == 1000
        assert response.headers["accept-ranges"] == "bytes"

    def test_range_request(self, client):
        sample = client.get("/api/dataset").json()["samples"][0]["sample_id"]
        response = client.get(f"/media/{sample}/video", headers={"Range": "bytes=10-19"})
        assert response.status_code == 206
        assert response.content == bytes(range(10, 20))
        assert response.headers["content-range"] == "bytes 10-19/1000"

    def test_open_ended_range(self, client):
        sample = client.get("/api/dataset").json()["samples"][0]["sample_id"]
        response = client.get(f"/media/{sample}/video", headers={"Range": "bytes=990-"})
        assert response.status_code == 206
        assert len(response.content) == 10

    def test_missing_media_404(self, client):
        sample = client.get("/api/dataset").json()["samples"][1]["sample_id"]
        assert client.get(f"/media/{sample}/video").status_code == 404


class TestAnalysis:
    def _populate(self, client):
        truth_info = client.get("/api/dataset").json()
        samples = truth_info["samples"]
        for method in ("RND", "FAFT"):
            for annotator in ("x", "y"):
                view = make_session(
                    client, method=method, budget=12, annotator_id=annotator, seed=3
                )
                sid = view["session_id"]
                while True:
                    v = client.get(f"/api/sessions/{sid}").json()
                    if v["status"] == "complete":
                        break
                    current = v["current"]["sample_id"]
                    cls = f"class_{int(current[-1]) % 3}"
                    client.post(
                        f"/api/sessions/{sid}/labels",
                        json={"sample_id": current, "value": cls},
                    )

    def test_histograms_endpoint(self, client):
        self._populate(client)
        out = client.get("/api/analysis/histograms", params={"track": "cluster"}).json()
        assert "reference" in out
        assert set(out["methods"]) == {"RND", "FAFT"}
        entry = out["methods"]["RND"]
        assert len(entry["annotators"]) == 2
        assert "sd" in entry and "mean" in entry

    def test_risk_endpoint(self, client):
        self._populate(client)
        out = client.get(
            "/api/analysis/risk", params={"track": "cluster", "group": "all", "k": 3}
        ).json()
        assert set(out["scores"]) == {"RND", "FAFT"}
        assert out["metrics"] == ["cov", "dis"]  # two annotators per method: no mod
        assert ">" in out["ordering"] or "=" in out["ordering"]

    def test_curve_endpoint(self, client):
        self._populate(client)
        ids = [
            v["session_id"]
            for v in client.get("/api/sessions").json()
            if v["config"]["method"] == "RND"
        ]
        out = client.get(
            "/api/analysis/curve",
            params={
                "sessions": ",".join(ids),
                "track": "cluster",
                "checkpoints": "6,12",
                "k": 3,
                "repeats": 2,
            },
        ).json()
        assert [p["n_labels"] for p in out["points"]] == [6, 12]
