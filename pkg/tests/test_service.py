"""HTTP surface: session lifecycle, labeling, suggestions, verification, export."""

import io
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from labelgraph import read_features
from labelgraph.features import FeatureMatrix
from labelgraph.service import create_app
from labelgraph.workflows import make_blobs

from conftest import feature_bytes


@pytest.fixture(scope="module")
def blob_payload():
    features, truth = make_blobs(classes=4, n=120, dim=16, separation=6.0, seed=7)
    return feature_bytes(features), truth


@pytest.fixture()
def client(tmp_path, blob_payload):
    app = create_app(tmp_path / "sessions")
    with TestClient(app) as c:
        c.blob_payload = blob_payload
        yield c


def create_session(client, *, payload=None, params=None):
    body, _ = client.blob_payload
    if payload is not None:
        body = payload
    merged = {"k": 5, "temperature": 0.1, "num_classes": 4}
    if params:
        merged.update(params)
    return client.post(
        "/sessions",
        files={"features": ("features.lgf", io.BytesIO(body))},
        data={"params": json.dumps(merged)},
    )


def label_events(ids, rows, classes):
    return [{"id": ids[r], "action": "label", "class": int(c)}
            for r, c in zip(rows, classes)]


def test_create_session_reports_shape(client):
    response = create_session(client)
    assert response.status_code == 201
    body = response.json()
    assert body["n"] == 120
    assert body["d"] == 16
    assert body["k"] == 5
    assert body["c"] == 4
    assert body["T"] == 0.1
    assert len(body["session_id"]) == 16


def test_create_twice_returns_existing_session(client):
    first = create_session(client)
    second = create_session(client)
    assert first.status_code == 201
    assert second.status_code == 200
    assert second.json()["session_id"] == first.json()["session_id"]


def test_create_rejects_oversized_k(client):
    response = create_session(client, params={"k": 120})
    assert response.status_code == 400
    body = response.json()
    assert body["code"] == "invalid_parameter"
    assert "k must be < n" in body["message"]


def test_create_rejects_garbage_features(client):
    response = create_session(client, payload=b"this is not a feature file")
    assert response.status_code == 422
    assert response.json()["code"] == "invalid_format"


def test_create_rejects_unknown_params(client):
    response = create_session(client, params={"sigma": 3})
    assert response.status_code == 400
    assert "sigma" in response.json()["message"]


def test_session_listing_and_detail(client):
    sid = create_session(client).json()["session_id"]
    listing = client.get("/sessions").json()
    assert [s["session_id"] for s in listing["sessions"]] == [sid]
    detail = client.get(f"/sessions/{sid}")
    assert detail.status_code == 200
    body = detail.json()
    assert body["version"] == 0
    assert body["soft_version"] == 0
    assert body["labeled"] == 0

    assert client.get("/sessions/0000000000000000").status_code == 404


def test_next_returns_distinct_unlabeled_samples(client):
    sid = create_session(client).json()["session_id"]
    response = client.get(f"/sessions/{sid}/next", params={"count": 5})
    assert response.status_code == 200
    body = response.json()
    assert len(body["items"]) == 5
    ids = [s["id"] for s in body["items"]]
    assert len(set(ids)) == 5
    assert "version" in body and "soft_version" in body


def test_next_does_not_repeat_until_pool_drains(client):
    sid = create_session(client).json()["session_id"]
    seen: set[str] = set()
    for _ in range(24):
        batch = client.get(f"/sessions/{sid}/next", params={"count": 5}).json()
        for sample in batch["items"]:
            assert sample["id"] not in seen
            seen.add(sample["id"])
    assert len(seen) == 120
    exhausted = client.get(f"/sessions/{sid}/next", params={"count": 5})
    assert exhausted.status_code == 409
    assert exhausted.json()["code"] == "conflict"


def test_next_partial_batch_sets_exhaustion_header(client):
    sid = create_session(client).json()["session_id"]
    first = client.get(f"/sessions/{sid}/next", params={"count": 118})
    assert len(first.json()["items"]) == 118
    partial = client.get(f"/sessions/{sid}/next", params={"count": 5})
    assert partial.status_code == 200
    assert len(partial.json()["items"]) == 2
    assert partial.headers["X-Pool-Exhausted"] == "true"


def test_reject_returns_sample_to_suggestion_pool(client):
    sid = create_session(client).json()["session_id"]
    suggestion = client.get(f"/sessions/{sid}/next", params={"count": 1}).json()
    sample_id = suggestion["items"][0]["id"]
    drained = {s["id"]
               for _ in range(119)
               for s in client.get(f"/sessions/{sid}/next",
                                   params={"count": 1}).json()["items"]}
    assert sample_id not in drained
    client.post(f"/sessions/{sid}/labels",
                json={"events": [{"id": sample_id, "action": "reject"}]})
    again = client.get(f"/sessions/{sid}/next", params={"count": 1}).json()
    assert again["items"][0]["id"] == sample_id


def test_label_batch_bumps_version_by_batch_size(client):
    sid = create_session(client).json()["session_id"]
    features, truth = client.blob_payload
    ids = read_features(io.BytesIO(features)).ids
    response = client.post(
        f"/sessions/{sid}/labels",
        json={"events": label_events(ids, range(10), truth[:10])})
    assert response.status_code == 200
    body = response.json()
    assert body["version"] == 10
    assert body["propagation"] == "scheduled"


def test_invalid_event_rejects_whole_batch(client):
    sid = create_session(client).json()["session_id"]
    _, truth = client.blob_payload
    ids = read_features(io.BytesIO(client.blob_payload[0])).ids
    events = label_events(ids, range(3), truth[:3])
    events.insert(1, {"id": "ghost", "action": "label", "class": 0})
    response = client.post(f"/sessions/{sid}/labels", json={"events": events})
    assert response.status_code == 422
    body = response.json()
    assert body["code"] == "invalid_event"
    assert body["detail"]["event_index"] == 1
    assert client.get(f"/sessions/{sid}").json()["version"] == 0


def test_empty_batch_is_rejected(client):
    sid = create_session(client).json()["session_id"]
    response = client.post(f"/sessions/{sid}/labels", json={"events": []})
    assert response.status_code == 400


def test_pseudo_labels_appear_near_labeled_sample(client):
    sid = create_session(client).json()["session_id"]
    features, truth = client.blob_payload
    matrix = read_features(io.BytesIO(features))
    before = client.get(f"/sessions/{sid}/pseudo",
                        params={"ids": matrix.ids[0]}).json()
    assert before["results"][0]["pseudo"] == -1
    assert before["results"][0]["confidence"] == 0

    client.post(f"/sessions/{sid}/labels",
                json={"events": label_events(matrix.ids, range(8), truth[:8])})
    client.get(f"/sessions/{sid}/verify")  # blocks until soft labels are fresh

    after = client.get(f"/sessions/{sid}/pseudo",
                       params={"ids": ",".join(matrix.ids[:8])}).json()
    assert [s["pseudo"] for s in after["results"]] == list(map(int, truth[:8]))
    assert all(s["confidence"] > 0 for s in after["results"])
    assert after["soft_version"] == after["version"] == 8


def test_pseudo_lists_unknown_ids_as_missing(client):
    sid = create_session(client).json()["session_id"]
    known = read_features(io.BytesIO(client.blob_payload[0])).ids[0]
    response = client.get(f"/sessions/{sid}/pseudo",
                          params={"ids": f"ghost,{known}"})
    assert response.status_code == 200
    body = response.json()
    assert body["missing"] == ["ghost"]
    assert [r["id"] for r in body["results"]] == [known]


def test_rapid_label_posts_coalesce_propagation(client):
    sid = create_session(client).json()["session_id"]
    features, truth = client.blob_payload
    ids = read_features(io.BytesIO(features)).ids
    for i in range(100):
        client.post(f"/sessions/{sid}/labels",
                    json={"events": [{"id": ids[i], "action": "label",
                                      "class": int(truth[i])}]})
    runtime = client.app.state.runtime(sid)
    runtime.ensure_fresh(100)
    assert runtime.run_count <= 101
    assert client.get(f"/sessions/{sid}").json()["soft_version"] == 100


def test_verify_requires_labels(client):
    sid = create_session(client).json()["session_id"]
    response = client.get(f"/sessions/{sid}/verify")
    assert response.status_code == 409
    assert response.json()["code"] == "conflict"


def test_verify_ranks_corrupted_label_first(client):
    # verification workflow: import everything untrusted so propagation can
    # drift each row toward its neighborhood instead of clamping it
    sid = create_session(client, params={"mode": "verification"}).json()["session_id"]
    features, truth = client.blob_payload
    ids = read_features(io.BytesIO(features)).ids
    corrupted = dict(enumerate(truth))
    corrupted[17] = (truth[17] + 2) % 4
    events = [{"id": ids[r], "action": "label", "class": int(c), "trusted": False}
              for r, c in corrupted.items()]
    client.post(f"/sessions/{sid}/labels", json={"events": events})
    response = client.get(f"/sessions/{sid}/verify", params={"limit": 5})
    assert response.status_code == 200
    queue = response.json()["items"]
    assert queue[0]["id"] == ids[17]
    assert queue[0]["given"] == corrupted[17]
    assert queue[0]["score"] > queue[1]["score"]
    scores = [entry["score"] for entry in queue]
    assert scores == sorted(scores, reverse=True)


def test_verify_limit_zero_is_empty_success(client):
    sid = create_session(client).json()["session_id"]
    ids = read_features(io.BytesIO(client.blob_payload[0])).ids
    client.post(f"/sessions/{sid}/labels",
                json={"events": [{"id": ids[3], "action": "label", "class": 0}]})
    response = client.get(f"/sessions/{sid}/verify", params={"limit": 0})
    assert response.status_code == 200
    assert response.json()["items"] == []


def test_export_labels_round_trips_through_reimport(client, tmp_path):
    sid = create_session(client).json()["session_id"]
    features, truth = client.blob_payload
    ids = read_features(io.BytesIO(features)).ids
    client.post(f"/sessions/{sid}/labels",
                json={"events": label_events(ids, range(12), truth[:12])})
    exported = client.get(f"/sessions/{sid}/export", params={"kind": "labels"})
    assert exported.status_code == 200
    assert exported.headers["content-type"].startswith("application/jsonl")
    assert exported.headers["X-Label-Version"] == "12"
    lines = [json.loads(line) for line in exported.text.splitlines()]
    assert len(lines) == 12
    assert all(line["trusted"] is True for line in lines)
    assert {line["id"] for line in lines} == set(ids[:12])

    events = [{"id": line["id"], "action": "label", "class": line["class"],
               "trusted": line["trusted"]} for line in lines]
    replica = create_session(client, params={"k": 6}).json()["session_id"]
    client.post(f"/sessions/{replica}/labels", json={"events": events})
    again = client.get(f"/sessions/{replica}/export", params={"kind": "labels"})
    assert sorted(again.text.splitlines()) == sorted(exported.text.splitlines())


def test_export_soft_is_fresh_and_covers_every_sample(client):
    sid = create_session(client).json()["session_id"]
    features, truth = client.blob_payload
    ids = read_features(io.BytesIO(features)).ids
    client.post(f"/sessions/{sid}/labels",
                json={"events": label_events(ids, range(20), truth[:20])})
    response = client.get(f"/sessions/{sid}/export", params={"kind": "soft"})
    assert response.status_code == 200
    assert response.headers["X-Soft-Version"] == "20"
    lines = [json.loads(line) for line in response.text.splitlines()]
    assert len(lines) == 120
    assert [line["id"] for line in lines] == list(ids)
    for line in lines:
        assert set(line) == {"id", "scores", "pseudo", "confidence"}
        assert len(line["scores"]) == 4


def test_export_rejects_unknown_kind(client):
    sid = create_session(client).json()["session_id"]
    response = client.get(f"/sessions/{sid}/export", params={"kind": "hard"})
    assert response.status_code == 400


def test_errors_use_uniform_shape(client):
    response = client.get("/sessions/0000000000000000")
    body = response.json()
    assert set(body) >= {"code", "message"}
    assert body["code"] == "not_found"

    malformed = client.post(
        "/sessions",
        files={"features": ("f.lgf", io.BytesIO(b"LGF1"))},
        data={"params": "{]"})
    assert malformed.status_code in (400, 422)
    assert "code" in malformed.json()


def test_healthz(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}
