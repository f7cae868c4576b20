"""Record canonical service interactions into frontend/fixtures/recorded.json.

Run from the repository root with the Python package installed:

    python3 frontend/scripts/record_fixtures.py

Every fixture is a literal request/response pair captured against the real
verification service backed by the synthetic pool, so UI tests replay what
the service actually said rather than hand-written approximations.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi.testclient import TestClient

from drivegraph import synth
from drivegraph.qa import GeneratorConfig, TASK_IDS, build_contexts, generate_all
from drivegraph.scoring import PredictionRecord, exact_match_accuracy
from drivegraph.service import ServiceConfig, VerificationStore, create_app

ANNOTATOR = "ui-recorder"
HDR = {"X-Annotator-Id": ANNOTATOR}

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def _capture(client: TestClient, name: str, method: str, path: str, store: dict,
             body: dict | None = None, params: dict | None = None,
             headers: dict | None = None) -> dict:
    headers = headers or HDR
    response = client.request(method, path, params=params, json=body, headers=headers)
    try:
        payload = response.json()
    except ValueError:
        payload = response.text
    store[name] = {
        "request": {
            "method": method,
            "path": path,
            "params": params or {},
            "headers": {"X-Annotator-Id": headers.get("X-Annotator-Id")},
            "body": body,
        },
        "response": {"status": response.status_code, "body": payload},
    }
    return payload


def main() -> None:
    import tempfile

    scenes = synth.build_pool(6, seed=7)
    contexts = build_contexts(scenes)
    cfg = GeneratorConfig(seed=13, render_assets=False)
    items, _ = generate_all(contexts, {t: 2 for t in TASK_IDS}, cfg)

    with tempfile.TemporaryDirectory() as tmp:
        store_obj = VerificationStore(
            items,
            [c.scene for c in contexts],
            ServiceConfig(log_path=f"{tmp}/v.log", quorum=1),
            graphs={c.scene_id: c.graph for c in contexts},
        )
        client = TestClient(create_app(store_obj))
        recorded: dict = {}

        _capture(client, "queue_metadata", "GET", "/queue", recorded,
                 params={"kind": "metadata", "limit": 5})
        qa_queue = _capture(client, "queue_qa", "GET", "/queue", recorded,
                            params={"kind": "qa", "limit": 5})
        _capture(client, "queue_human_eval", "GET", "/queue", recorded,
                 params={"kind": "human_eval", "limit": 5})

        meta_target = f"{scenes[0].scene_id}::weather"
        _capture(client, "bundle_metadata_before", "GET", f"/bundle/{meta_target}", recorded)
        _capture(client, "verdict_metadata_edit", "POST", "/verdict", recorded, body={
            "target": meta_target,
            "verdict": "edit",
            "edited_value": "hail",
            "started_at": 50.0,
            "submitted_at": 62.5,
        })
        _capture(client, "bundle_metadata_after", "GET", f"/bundle/{meta_target}", recorded)

        mca = next(i for i in items if i.answer_type == "option")
        numeric = next(i for i in items if i.answer_type == "numeric")
        _capture(client, "bundle_qa_mca", "GET", f"/bundle/{mca.item_id}", recorded)
        _capture(client, "bundle_qa_numeric", "GET", f"/bundle/{numeric.item_id}", recorded)

        all_true = {c: True for c in ("answer_correct", "option_unique", "plausible", "objects_visible")}
        _capture(client, "verdict_reject_all_true_rejected", "POST", "/verdict", recorded, body={
            "target": mca.item_id,
            "verdict": "reject",
            "criterion_flags": all_true,
            "started_at": 10.0,
            "submitted_at": 15.0,
        })
        _capture(client, "verdict_reject_ok", "POST", "/verdict", recorded, body={
            "target": mca.item_id,
            "verdict": "reject",
            "criterion_flags": dict(all_true, plausible=False),
            "started_at": 10.0,
            "submitted_at": 18.0,
        })
        accept_target = qa_queue["targets"][1]
        _capture(client, "verdict_accept_ok", "POST", "/verdict", recorded, body={
            "target": accept_target,
            "verdict": "accept",
            "started_at": 20.0,
            "submitted_at": 24.0,
        })

        answer_body = {"item_id": mca.item_id, "option_index": int(mca.answer)}
        _capture(client, "answer_mca_ok", "POST", "/answer", recorded, body=answer_body)
        _capture(client, "answer_mca_duplicate", "POST", "/answer", recorded, body=answer_body)
        _capture(client, "answer_numeric_ok", "POST", "/answer", recorded, body={
            "item_id": numeric.item_id, "value": float(numeric.answer),
        })
        _capture(client, "answer_numeric_on_mca_rejected", "POST", "/answer", recorded, body={
            "item_id": mca.item_id, "value": 3.5,
        }, headers={"X-Annotator-Id": "ui-recorder-2"})

        _capture(client, "stats", "GET", "/stats", recorded)

        # Prove the captured human answers score with the scoring module.
        answers = client.get("/answers").json()
        preds = [
            PredictionRecord(rec["item_id"], rec["responder_id"], rec["raw_answer"])
            for rec in answers
            if rec["item_id"] == mca.item_id
        ]
        accuracy = exact_match_accuracy([mca], preds)
        recorded["scoring_check"] = {
            "item_id": mca.item_id,
            "n_answers": len(preds),
            "accuracy": accuracy,
        }

        OUT.mkdir(parents=True, exist_ok=True)
        (OUT / "recorded.json").write_text(
            json.dumps(recorded, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"wrote {len(recorded)} fixtures -> {OUT / 'recorded.json'}")


if __name__ == "__main__":
    main()
