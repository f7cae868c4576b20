"""Human verification service: review queues, verdict capture, human-eval
answers, and QC export over an append-only event log.

State is an in-memory index rebuilt by replaying the log at startup, so the
full verdict history doubles as the audit trail. A single writer lock
serializes appends; reads are lock-free snapshots.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import FileResponse, PlainTextResponse

from .qa.items import QAItem, read_corpus
from .schema import (
    METADATA_FIELDS,
    SCENE_TYPE_LABELS,
    Scene,
    TIME_OF_DAY_LABELS,
    WEATHER_LABELS,
    dumps_canonical,
)

QA_CRITERIA = ("answer_correct", "option_unique", "plausible", "objects_visible")
VERDICTS = ("accept", "reject", "edit")
_FIELD_LABELS = {
    "weather": WEATHER_LABELS,
    "time_of_day": TIME_OF_DAY_LABELS,
    "scene_type": SCENE_TYPE_LABELS,
}


class InvariantViolation(ValueError):
    pass


@dataclass
class VerificationRecord:
    target: str  # "{scene_id}::{field}" or a QA item_id
    verdict: str
    annotator_id: str
    started_at: float
    submitted_at: float
    criterion_flags: dict[str, bool] | None = None
    edited_value: object = None

    def validate(self, is_qa_target: bool) -> None:
        if self.verdict not in VERDICTS:
            raise InvariantViolation(f"unknown verdict {self.verdict!r}")
        if self.submitted_at < self.started_at:
            raise InvariantViolation("submitted_at before started_at")
        if is_qa_target:
            flags = self.criterion_flags or {}
            if set(flags) - set(QA_CRITERIA):
                raise InvariantViolation("unknown criterion flag")
            if self.verdict == "reject":
                if not flags or all(flags.get(c, True) for c in QA_CRITERIA):
                    raise InvariantViolation("reject requires at least one false criterion")
        if self.verdict == "edit" and self.edited_value is None:
            raise InvariantViolation("edit requires edited_value")

    @property
    def seconds_spent(self) -> float:
        return self.submitted_at - self.started_at

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "verdict": self.verdict,
            "annotator_id": self.annotator_id,
            "started_at": self.started_at,
            "submitted_at": self.submitted_at,
            "criterion_flags": self.criterion_flags,
            "edited_value": self.edited_value,
        }


@dataclass
class HumanAnswer:
    item_id: str
    annotator_id: str
    raw_answer: str
    submitted_at: float

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "annotator_id": self.annotator_id,
            "raw_answer": self.raw_answer,
            "submitted_at": self.submitted_at,
        }


@dataclass
class ServiceConfig:
    log_path: str = "verification.log"
    asset_root: str | None = None
    quorum: int = 1
    port: int = 8787

    @classmethod
    def load(cls, path: str | Path | None = None, env=os.environ) -> "ServiceConfig":
        data: dict = {}
        if path:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = cls(
            log_path=data.get("log_path", cls.log_path),
            asset_root=data.get("asset_root"),
            quorum=int(data.get("quorum", cls.quorum)),
            port=int(data.get("port", cls.port)),
        )
        if env.get("DRIVEGRAPH_LOG_PATH"):
            cfg.log_path = env["DRIVEGRAPH_LOG_PATH"]
        if env.get("DRIVEGRAPH_ASSET_ROOT"):
            cfg.asset_root = env["DRIVEGRAPH_ASSET_ROOT"]
        if env.get("DRIVEGRAPH_QUORUM"):
            cfg.quorum = int(env["DRIVEGRAPH_QUORUM"])
        if env.get("DRIVEGRAPH_PORT"):
            cfg.port = int(env["DRIVEGRAPH_PORT"])
        return cfg


class VerificationStore:
    def __init__(
        self,
        items: list[QAItem],
        scenes: list[Scene],
        config: ServiceConfig,
        graphs: dict | None = None,
    ):
        self.items = {i.item_id: i for i in items}
        self.scenes = {s.scene_id: s for s in scenes}
        self.graphs = graphs or {}
        self.config = config
        self.verdicts: dict[tuple[str, str], VerificationRecord] = {}
        self.answers: dict[tuple[str, str], HumanAnswer] = {}
        self._lock = threading.Lock()
        self._replay()

    # --- event log -------------------------------------------------------------

    def _replay(self) -> None:
        path = Path(self.config.log_path)
        if not path.exists():
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event["type"] == "verdict":
                    record = VerificationRecord(**event["record"])
                    self._index_verdict(record)
                elif event["type"] == "answer":
                    answer = HumanAnswer(**event["record"])
                    self.answers[(answer.annotator_id, answer.item_id)] = answer

    def _append(self, event_type: str, record: dict) -> None:
        path = Path(self.config.log_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(dumps_canonical({"type": event_type, "record": record}) + "\n")

    def _index_verdict(self, record: VerificationRecord) -> None:
        self.verdicts[(record.annotator_id, record.target)] = record
        if "::" in record.target and record.verdict == "edit":
            scene_id, _, field_name = record.target.partition("::")
            scene = self.scenes.get(scene_id)
            if scene is not None and field_name in METADATA_FIELDS:
                setattr(scene.metadata, field_name, record.edited_value)
                scene.metadata.provenance[field_name] = "human_verified"

    # --- domain operations -------------------------------------------------------

    def metadata_targets(self) -> list[str]:
        return [
            f"{scene_id}::{field_name}"
            for scene_id in sorted(self.scenes)
            for field_name in METADATA_FIELDS
        ]

    def list_queue(self, kind: str, annotator: str, filters: dict,
                   offset: int = 0, limit: int = 50) -> dict:
        if kind == "metadata":
            targets = self.metadata_targets()
            if "scene_id" in filters:
                targets = [t for t in targets if t.startswith(filters["scene_id"] + "::")]
            if "source" in filters:
                targets = [
                    t for t in targets
                    if self.scenes[t.partition("::")[0]].metadata.source == filters["source"]
                ]
            pending = [t for t in targets if (annotator, t) not in self.verdicts]
        elif kind in ("qa", "human_eval"):
            item_ids = sorted(self.items)
            if "task_id" in filters:
                item_ids = [i for i in item_ids if self.items[i].task_id == filters["task_id"]]
            if "scene_id" in filters:
                item_ids = [i for i in item_ids if self.items[i].scene_id == filters["scene_id"]]
            if "source" in filters:
                item_ids = [
                    i for i in item_ids
                    if self.scenes[self.items[i].scene_id].metadata.source == filters["source"]
                ]
            if kind == "qa":
                pending = [i for i in item_ids if (annotator, i) not in self.verdicts]
            else:
                pending = [i for i in item_ids if (annotator, i) not in self.answers]
        else:
            raise KeyError(kind)
        return {
            "kind": kind,
            "total": len(pending),
            "offset": offset,
            "targets": pending[offset : offset + limit],
        }

    def bundle(self, target: str) -> dict:
        if "::" in target:
            scene_id, _, field_name = target.partition("::")
            scene = self.scenes.get(scene_id)
            if scene is None or field_name not in METADATA_FIELDS:
                raise KeyError(target)
            return {
                "target": target,
                "kind": "metadata",
                "scene_id": scene_id,
                "field": field_name,
                "current_value": scene.metadata.get(field_name),
                "provenance": scene.metadata.provenance.get(field_name),
                "allowed_values": list(_FIELD_LABELS[field_name]),
                "n_frames": len(scene.frames),
                "assets": [
                    f"/assets/{scene_id}/0/bev.png",
                    f"/assets/{scene_id}/0/stitched.png",
                ],
            }
        item = self.items.get(target)
        if item is None:
            raise KeyError(target)
        scene = self.scenes.get(item.scene_id)
        bundle = {
            "target": target,
            "kind": "qa",
            "item": item.to_record(),
            "assets": [f"/assets/{ref}" for ref in item.asset_refs],
            "scene_summary": {
                "scene_id": item.scene_id,
                "source": scene.metadata.source if scene else None,
                "n_frames": len(scene.frames) if scene else None,
            },
        }
        graph = self.graphs.get(item.scene_id)
        if graph is not None:
            t = item.frame_span[0]
            indices = {
                v for v in item.constraint_certificate.values() if isinstance(v, int)
            }
            slice_edges = [
                {"kind": e.kind, "src": list(e.src), "dst": list(e.dst), "label": e.label}
                for kind in ("relation", "action", "interaction")
                for e in graph.edges[kind]
                if e.src[0] == t and (e.src[1] in indices or e.dst[1] in indices)
            ]
            bundle["graph_slice"] = slice_edges
        return bundle

    def submit_verdict(self, record: VerificationRecord) -> dict:
        is_qa = "::" not in record.target
        if is_qa and record.target not in self.items:
            raise KeyError(record.target)
        if not is_qa:
            scene_id, _, field_name = record.target.partition("::")
            if scene_id not in self.scenes or field_name not in METADATA_FIELDS:
                raise KeyError(record.target)
            if record.verdict == "edit" and record.edited_value not in _FIELD_LABELS[field_name]:
                raise InvariantViolation(f"edited_value not a {field_name} label")
        record.validate(is_qa)
        with self._lock:
            if (record.annotator_id, record.target) in self.verdicts:
                raise FileExistsError(record.target)
            self._append("verdict", record.to_dict())
            self._index_verdict(record)
        return {"ok": True, "seconds_spent": record.seconds_spent}

    def submit_answer(self, item_id: str, annotator: str, option_index=None, value=None) -> dict:
        item = self.items.get(item_id)
        if item is None:
            raise KeyError(item_id)
        if item.answer_type == "option":
            if option_index is None or value is not None:
                raise TypeError("MCA items take option_index")
            if not 0 <= int(option_index) < len(item.options):
                raise InvariantViolation("option_index out of range")
            raw = f"<answer>{chr(ord('A') + int(option_index))}</answer>"
        else:
            if value is None or option_index is not None:
                raise TypeError("numeric items take value")
            raw = f"<answer>{float(value)}</answer>"
        answer = HumanAnswer(
            item_id=item_id,
            annotator_id=annotator,
            raw_answer=raw,
            submitted_at=time.time(),
        )
        with self._lock:
            if (annotator, item_id) in self.answers:
                raise FileExistsError(item_id)
            self._append("answer", answer.to_dict())
            self.answers[(annotator, item_id)] = answer
        return {"ok": True, "raw_answer": raw}

    # --- export / stats ------------------------------------------------------------

    def _qa_decisions(self) -> dict[str, list[VerificationRecord]]:
        decisions: dict[str, list[VerificationRecord]] = {}
        for (_, target), record in self.verdicts.items():
            if "::" not in target and target in self.items:
                decisions.setdefault(target, []).append(record)
        return decisions

    def qc_stats(self) -> dict:
        decisions = self._qa_decisions()
        decided = len(decisions)
        accepted = rejected = edited = 0
        criterion_rejections = {c: 0 for c in QA_CRITERIA}
        for records in decisions.values():
            verdicts = {r.verdict for r in records}
            if "reject" in verdicts:
                rejected += 1
                for r in records:
                    if r.verdict == "reject":
                        for criterion, ok in (r.criterion_flags or {}).items():
                            if not ok:
                                criterion_rejections[criterion] += 1
            elif "edit" in verdicts:
                edited += 1
            else:
                accepted += 1
        total_seconds = sum(r.seconds_spent for r in self.verdicts.values())
        return {
            "decided": decided,
            "accepted": accepted,
            "rejected": rejected,
            "edited": edited,
            "pass_rate_strict": (accepted / decided) if decided else None,
            "pass_rate_with_edits": ((accepted + edited) / decided) if decided else None,
            "criterion_rejections": criterion_rejections,
            "total_annotator_seconds": total_seconds,
            "n_verdicts": len(self.verdicts),
            "n_answers": len(self.answers),
        }

    def export_accepted(self, filters: dict | None = None) -> tuple[list[dict], dict]:
        decisions = self._qa_decisions()
        quorum = self.config.quorum
        out = []
        for item_id in sorted(decisions):
            records = decisions[item_id]
            if any(r.verdict == "reject" for r in records):
                continue
            accepts = sum(1 for r in records if r.verdict == "accept")
            edits = [r for r in records if r.verdict == "edit"]
            if accepts < quorum and not edits:
                continue
            item = self.items[item_id]
            if filters:
                if filters.get("task_id") and item.task_id != filters["task_id"]:
                    continue
                if filters.get("scene_id") and item.scene_id != filters["scene_id"]:
                    continue
            record = item.to_record()
            for edit in edits:
                if isinstance(edit.edited_value, dict):
                    record.update(edit.edited_value)
            record["verdict_provenance"] = [r.verdict for r in records]
            out.append(record)
        return out, self.qc_stats()

    def human_predictions(self) -> list[dict]:
        return [
            {"item_id": a.item_id, "responder_id": a.annotator_id, "raw_answer": a.raw_answer}
            for (_, _), a in sorted(self.answers.items())
        ]


# --- HTTP layer -------------------------------------------------------------------

QUEUE_FILTERS = {"task_id", "scene_id", "source"}


def create_app(store: VerificationStore) -> FastAPI:
    app = FastAPI(title="drivegraph verification service")

    def annotator_from(x_annotator_id: str | None) -> str:
        if not x_annotator_id:
            raise HTTPException(status_code=400, detail="X-Annotator-Id header required")
        return x_annotator_id

    @app.get("/queue")
    def queue(
        request: Request,
        kind: str = Query("qa"),
        offset: int = 0,
        limit: int = 50,
        x_annotator_id: str | None = Header(default=None),
    ):
        annotator = annotator_from(x_annotator_id)
        filters = {
            k: v for k, v in request.query_params.items() if k not in ("kind", "offset", "limit")
        }
        unknown = set(filters) - QUEUE_FILTERS
        if unknown:
            raise HTTPException(status_code=400, detail=f"BadFilter: {sorted(unknown)}")
        try:
            return store.list_queue(kind, annotator, filters, offset=offset, limit=limit)
        except KeyError as exc:
            raise HTTPException(status_code=400, detail=f"BadFilter: unknown kind {exc}")

    @app.get("/bundle/{target:path}")
    def bundle(target: str):
        try:
            return store.bundle(target)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"NotFound: {target}")

    @app.post("/verdict")
    def verdict(body: dict, x_annotator_id: str | None = Header(default=None)):
        annotator = annotator_from(x_annotator_id)
        body_annotator = body.get("annotator_id")
        if body_annotator and body_annotator != annotator:
            raise HTTPException(status_code=400, detail="annotator_id mismatch with header")
        try:
            record = VerificationRecord(
                target=body["target"],
                verdict=body["verdict"],
                annotator_id=annotator,
                started_at=float(body["started_at"]),
                submitted_at=float(body["submitted_at"]),
                criterion_flags=body.get("criterion_flags"),
                edited_value=body.get("edited_value"),
            )
        except KeyError as exc:
            raise HTTPException(status_code=422, detail=f"missing field {exc}")
        try:
            return store.submit_verdict(record)
        except FileExistsError:
            raise HTTPException(status_code=409, detail=f"DuplicateVerdict: {record.target}")
        except InvariantViolation as exc:
            raise HTTPException(status_code=400, detail=f"InvariantError: {exc}")
        except KeyError:
            raise HTTPException(status_code=404, detail=f"NotFound: {record.target}")

    @app.post("/answer")
    def answer(body: dict, x_annotator_id: str | None = Header(default=None)):
        annotator = annotator_from(x_annotator_id)
        try:
            return store.submit_answer(
                body.get("item_id", ""),
                annotator,
                option_index=body.get("option_index"),
                value=body.get("value"),
            )
        except FileExistsError:
            raise HTTPException(status_code=409, detail="DuplicateAnswer")
        except TypeError as exc:
            raise HTTPException(status_code=400, detail=f"TypeError: {exc}")
        except InvariantViolation as exc:
            raise HTTPException(status_code=400, detail=f"InvariantError: {exc}")
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"NotFound: {exc}")

    @app.get("/export", response_class=PlainTextResponse)
    def export(task_id: str | None = None, scene_id: str | None = None):
        records, stats = store.export_accepted({"task_id": task_id, "scene_id": scene_id})
        lines = [dumps_canonical({"record_type": "qc_stats", **stats})]
        lines += [dumps_canonical(r) for r in records]
        return "\n".join(lines) + "\n"

    @app.get("/stats")
    def stats():
        return store.qc_stats()

    @app.get("/answers")
    def answers():
        return store.human_predictions()

    @app.get("/assets/{path:path}")
    def asset(path: str):
        root = store.config.asset_root
        if root is None:
            raise HTTPException(status_code=404, detail=f"no asset root configured: {path}")
        full = Path(root) / path
        if not full.exists():
            raise HTTPException(status_code=404, detail=f"NotFound: {path}")
        return FileResponse(full)

    return app


def load_service(corpus_path: str, scene_paths: list[str], config: ServiceConfig) -> FastAPI:
    from .schema import parse_canonical

    items = read_corpus(corpus_path)
    scenes = [parse_canonical(Path(p).read_text(encoding="utf-8")) for p in scene_paths]
    return create_app(VerificationStore(items, scenes, config))
