from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from drivegraph.qa import GeneratorConfig, TASK_IDS, build_contexts, generate_all
from drivegraph.scoring import PredictionRecord, exact_match_accuracy, score
from drivegraph.service import (
    ServiceConfig,
    VerificationRecord,
    VerificationStore,
    create_app,
)


@pytest.fixture(scope="module")
def corpus(reference_pool):
    contexts = build_contexts(reference_pool[:6])
    cfg = GeneratorConfig(seed=17, render_assets=False)
    items, _ = generate_all(contexts, {t: 2 for t in TASK_IDS}, cfg)
    return items, [c.scene for c in contexts], {c.scene_id: c.graph for c in contexts}


@pytest.fixture()
def store(corpus, tmp_path):
    items, scenes, graphs = corpus
    config = ServiceConfig(log_path=str(tmp_path / "verify.log"), quorum=1)
    return VerificationStore(items, scenes, config, graphs=graphs)


@pytest.fixture()
def client(store):
    return TestClient(create_app(store))


HDR = {"X-Annotator-Id": "ann1"}


def _verdict_body(target, verdict="accept", flags=None, edited=None):
    return {
        "target": target,
        "verdict": verdict,
        "criterion_flags": flags,
        "edited_value": edited,
        "started_at": 100.0,
        "submitted_at": 103.5,
    }


def test_queue_requires_annotator_header(client):
    assert client.get("/queue").status_code == 400


def test_queue_kinds_and_stable_ordering(client, corpus):
    items, scenes, _ = corpus
    qa = client.get("/queue", params={"kind": "qa", "limit": 10}, headers=HDR).json()
    assert qa["total"] == len(items)
    assert qa["targets"] == sorted(i.item_id for i in items)[:10]
    again = client.get("/queue", params={"kind": "qa", "limit": 10}, headers=HDR).json()
    assert qa == again

    meta = client.get("/queue", params={"kind": "metadata"}, headers=HDR).json()
    assert meta["total"] == 3 * len(scenes)
    human = client.get("/queue", params={"kind": "human_eval"}, headers=HDR).json()
    assert human["total"] == len(items)


def test_queue_unknown_filter_rejected(client):
    r = client.get("/queue", params={"kind": "qa", "color": "red"}, headers=HDR)
    assert r.status_code == 400
    assert "BadFilter" in r.json()["detail"]


def test_decided_item_leaves_annotator_queue(client, corpus):
    items, _, _ = corpus
    target = sorted(i.item_id for i in items)[0]
    ok = client.post("/verdict", json=_verdict_body(target), headers=HDR)
    assert ok.status_code == 200
    assert ok.json()["seconds_spent"] == 3.5
    queue = client.get("/queue", params={"kind": "qa", "limit": 1000}, headers=HDR).json()
    assert target not in queue["targets"]
    other = client.get(
        "/queue", params={"kind": "qa", "limit": 1000}, headers={"X-Annotator-Id": "ann2"}
    ).json()
    assert target in other["targets"]


def test_bundle_for_qa_target(client, corpus):
    items, _, _ = corpus
    target = items[0].item_id
    bundle = client.get(f"/bundle/{target}").json()
    assert bundle["kind"] == "qa"
    assert bundle["item"]["options"] == items[0].options
    assert bundle["item"]["constraint_certificate"] == items[0].constraint_certificate
    assert all(ref.startswith("/assets/") for ref in bundle["assets"])
    assert "graph_slice" in bundle


def test_bundle_for_metadata_target(client, corpus):
    _, scenes, _ = corpus
    target = f"{scenes[0].scene_id}::weather"
    bundle = client.get(f"/bundle/{target}").json()
    assert bundle["kind"] == "metadata"
    assert bundle["field"] == "weather"
    assert any("bev" in a for a in bundle["assets"])


def test_bundle_not_found(client):
    assert client.get("/bundle/nope:missing:000").status_code == 404


def test_missing_asset_404_names_path(client):
    r = client.get("/assets/ghost/0/bev.png")
    assert r.status_code == 404
    assert "ghost/0/bev.png" in r.json()["detail"]


def test_reject_requires_false_criterion(client, corpus):
    items, _, _ = corpus
    target = items[0].item_id
    all_true = {c: True for c in ("answer_correct", "option_unique", "plausible", "objects_visible")}
    r = client.post("/verdict", json=_verdict_body(target, "reject", flags=all_true), headers=HDR)
    assert r.status_code == 400
    assert "InvariantError" in r.json()["detail"]
    flags = dict(all_true, plausible=False)
    ok = client.post("/verdict", json=_verdict_body(target, "reject", flags=flags), headers=HDR)
    assert ok.status_code == 200


def test_duplicate_verdict_rejected(client, corpus):
    items, _, _ = corpus
    target = items[1].item_id
    assert client.post("/verdict", json=_verdict_body(target), headers=HDR).status_code == 200
    dup = client.post("/verdict", json=_verdict_body(target), headers=HDR)
    assert dup.status_code == 409


def test_metadata_edit_updates_provenance(client, store, corpus):
    _, scenes, _ = corpus
    scene = scenes[0]
    target = f"{scene.scene_id}::weather"
    body = _verdict_body(target, "edit", edited="hail")
    assert client.post("/verdict", json=body, headers=HDR).status_code == 200
    assert scene.metadata.weather == "hail"
    assert scene.metadata.provenance["weather"] == "human_verified"
    bundle = client.get(f"/bundle/{target}").json()
    assert bundle["current_value"] == "hail"
    assert bundle["provenance"] == "human_verified"


def test_edit_without_value_rejected(client, corpus):
    _, scenes, _ = corpus
    target = f"{scenes[1].scene_id}::weather"
    r = client.post("/verdict", json=_verdict_body(target, "edit"), headers=HDR)
    assert r.status_code == 400


def test_human_answer_flow_and_duplicates(client, corpus):
    items, _, _ = corpus
    mca = next(i for i in items if i.answer_type == "option")
    body = {"item_id": mca.item_id, "option_index": int(mca.answer)}
    assert client.post("/answer", json=body, headers=HDR).status_code == 200
    dup = client.post("/answer", json=body, headers=HDR)
    assert dup.status_code == 409

    numeric = next(i for i in items if i.answer_type == "numeric")
    bad = client.post(
        "/answer", json={"item_id": mca.item_id, "value": 3.5}, headers={"X-Annotator-Id": "a2"}
    )
    assert bad.status_code == 400
    ok = client.post(
        "/answer", json={"item_id": numeric.item_id, "value": 12.5}, headers=HDR
    )
    assert ok.status_code == 200
    missing = client.post("/answer", json={"item_id": "ghost", "option_index": 0}, headers=HDR)
    assert missing.status_code == 404


def test_human_answers_scoreable_by_scoring_module(client, store, corpus):
    items, _, _ = corpus
    mca_items = [i for i in items if i.answer_type == "option"][:5]
    for item in mca_items:
        body = {"item_id": item.item_id, "option_index": int(item.answer)}
        assert client.post("/answer", json=body, headers=HDR).status_code == 200
    preds = [
        PredictionRecord(rec["item_id"], rec["responder_id"], rec["raw_answer"])
        for rec in client.get("/answers").json()
    ]
    assert exact_match_accuracy(mca_items, preds) == 100.0


def test_export_and_pass_rates(client, store, corpus):
    items, _, _ = corpus
    ids = sorted(i.item_id for i in items)
    flags_bad = {
        "answer_correct": False,
        "option_unique": True,
        "plausible": True,
        "objects_visible": True,
    }
    client.post("/verdict", json=_verdict_body(ids[0], "accept"), headers=HDR)
    client.post("/verdict", json=_verdict_body(ids[1], "accept"), headers=HDR)
    client.post("/verdict", json=_verdict_body(ids[2], "accept"), headers=HDR)
    client.post("/verdict", json=_verdict_body(ids[3], "reject", flags=flags_bad), headers=HDR)
    client.post(
        "/verdict",
        json=_verdict_body(ids[4], "edit", edited={"answer": 0}),
        headers=HDR,
    )

    stats = client.get("/stats").json()
    assert stats["decided"] == 5
    assert stats["accepted"] == 3
    assert stats["rejected"] == 1
    assert stats["edited"] == 1
    assert stats["pass_rate_strict"] == 0.6
    assert stats["pass_rate_with_edits"] == 0.8
    assert stats["criterion_rejections"]["answer_correct"] == 1

    text = client.get("/export").text
    lines = [json.loads(l) for l in text.strip().splitlines()]
    assert lines[0]["record_type"] == "qc_stats"
    exported_ids = {l["item_id"] for l in lines[1:]}
    assert exported_ids == {ids[0], ids[1], ids[2], ids[4]}
    edited_record = next(l for l in lines[1:] if l["item_id"] == ids[4])
    assert edited_record["answer"] == 0
    assert "edit" in edited_record["verdict_provenance"]


def test_empty_store_export(client):
    stats = client.get("/stats").json()
    assert stats["pass_rate_strict"] is None
    text = client.get("/export").text
    assert json.loads(text.splitlines()[0])["decided"] == 0


def test_event_log_replay_reconstructs_state(store, corpus, tmp_path):
    items, scenes, graphs = corpus
    ids = sorted(i.item_id for i in items)
    store.submit_verdict(
        VerificationRecord(ids[0], "accept", "ann1", 0.0, 2.0)
    )
    store.submit_verdict(
        VerificationRecord(
            ids[1],
            "reject",
            "ann1",
            0.0,
            4.0,
            criterion_flags={"answer_correct": False},
        )
    )
    store.submit_verdict(
        VerificationRecord(f"{scenes[0].scene_id}::weather", "edit", "ann1", 0.0, 1.0, edited_value="snow")
    )
    store.submit_answer(ids[0], "ann2", option_index=0)

    import copy

    fresh_scenes = [copy.deepcopy(s) for s in scenes]
    rebuilt = VerificationStore(items, fresh_scenes, store.config, graphs=graphs)
    assert {k: v.to_dict() for k, v in rebuilt.verdicts.items()} == {
        k: v.to_dict() for k, v in store.verdicts.items()
    }
    assert {k: a.to_dict() for k, a in rebuilt.answers.items()} == {
        k: a.to_dict() for k, a in store.answers.items()
    }
    assert rebuilt.qc_stats() == store.qc_stats()
    assert fresh_scenes[0].metadata.weather == "snow"
    assert fresh_scenes[0].metadata.provenance["weather"] == "human_verified"


def test_config_env_overrides(tmp_path, monkeypatch):
    cfg_path = tmp_path / "svc.json"
    cfg_path.write_text(json.dumps({"log_path": "a.log", "quorum": 2, "port": 9000}))
    monkeypatch.setenv("DRIVEGRAPH_QUORUM", "3")
    monkeypatch.setenv("DRIVEGRAPH_PORT", "9100")
    cfg = ServiceConfig.load(cfg_path)
    assert cfg.log_path == "a.log"
    assert cfg.quorum == 3
    assert cfg.port == 9100
