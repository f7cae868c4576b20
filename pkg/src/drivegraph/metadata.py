"""Scene-level metadata completion via pluggable classifier clients.

Weather and time-of-day come from image-text similarity over fixed prompt
sets against the first frame's front camera; scene type from a label client
looking at a rendered top-down map. Real model backends are external
services; this module ships deterministic stubs so the pipeline runs offline.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .rendering import BevStyle, front_camera, render_bev, save_png
from .schema import (
    SCENE_TYPE_LABELS,
    Scene,
    SceneMetadata,
    TIME_OF_DAY_LABELS,
    WEATHER_LABELS,
)

WEATHER_PROMPT = "a photo of {name} weather"
TIME_PROMPT = "a photo taken at {name}"


class MissingImage(FileNotFoundError):
    pass


class ClientError(RuntimeError):
    pass


class InvalidCategory(ValueError):
    pass


class SimilarityClient(Protocol):
    def scores(self, image_ref: str, prompts: Sequence[str]) -> list[float]:
        """One finite score per prompt; deterministic for identical inputs."""


class MapLabelClient(Protocol):
    def label(self, bev_ref: str, categories: Sequence[str]) -> str:
        """A category drawn from ``categories``."""


class TableSimilarityClient:
    """Test stub returning canned score vectors keyed by image ref."""

    def __init__(self, table: dict[str, list[float]], default: list[float] | None = None):
        self.table = table
        self.default = default

    def scores(self, image_ref: str, prompts: Sequence[str]) -> list[float]:
        row = self.table.get(image_ref, self.default)
        if row is None or len(row) != len(prompts):
            raise ClientError(f"no scores for {image_ref!r}")
        return list(row)


class HashSimilarityClient:
    """Deterministic pseudo-scores from a stable digest of (ref, prompt)."""

    def scores(self, image_ref: str, prompts: Sequence[str]) -> list[float]:
        return [zlib.crc32(f"{image_ref}|{p}".encode()) % 1000 / 1000.0 for p in prompts]


class ConstantMapLabelClient:
    """Stub scene-type client; the synthetic pool is straight-road geometry."""

    def __init__(self, category: str = "straight_road"):
        self.category = category

    def label(self, bev_ref: str, categories: Sequence[str]) -> str:
        return self.category


class TableMapLabelClient:
    def __init__(self, table: dict[str, str], default: str | None = None):
        self.table = table
        self.default = default

    def label(self, bev_ref: str, categories: Sequence[str]) -> str:
        value = self.table.get(bev_ref, self.default)
        if value is None:
            raise ClientError(f"no label for {bev_ref!r}")
        return value


class HttpSimilarityClient:
    """Remote scorer: POST {image_ref, prompts} -> {scores: [...]}."""

    def __init__(self, url: str, timeout: float = 30.0, retries: int = 2, transport=None):
        import httpx

        self.url = url
        self.timeout = timeout
        self.retries = retries
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def scores(self, image_ref: str, prompts: Sequence[str]) -> list[float]:
        import httpx

        payload = {"image_ref": image_ref, "prompts": list(prompts)}
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                response = self._client.post(self.url, json=payload)
                response.raise_for_status()
                scores = response.json()["scores"]
                if len(scores) != len(prompts):
                    raise ClientError(f"expected {len(prompts)} scores, got {len(scores)}")
                return [float(s) for s in scores]
            except httpx.HTTPError as exc:
                last_error = exc
        raise ClientError(f"similarity request failed: {last_error}") from last_error


def _front_image_ref(scene: Scene) -> str:
    name = front_camera(scene.metadata.source)
    ref = scene.frames[0].image_refs.get(name)
    if not ref:
        raise MissingImage(f"{scene.scene_id}: no front camera image reference ({name})")
    return ref


def _argmax_label(scores: Sequence[float], labels: Sequence[str]) -> str:
    best = 0
    for k, value in enumerate(scores):
        if value > scores[best]:
            best = k
    return labels[best]  # ties keep the earliest label


def classify_weather(scene: Scene, client: SimilarityClient) -> tuple[str, str]:
    ref = _front_image_ref(scene)
    prompts = [WEATHER_PROMPT.format(name=name) for name in WEATHER_LABELS]
    try:
        scores = client.scores(ref, prompts)
    except ClientError:
        raise
    except Exception as exc:
        raise ClientError(f"weather client failed for {scene.scene_id}: {exc}") from exc
    return _argmax_label(scores, WEATHER_LABELS), "inferred"


def classify_time_of_day(scene: Scene, client: SimilarityClient) -> tuple[str, str]:
    ref = _front_image_ref(scene)
    prompts = [TIME_PROMPT.format(name=name) for name in TIME_OF_DAY_LABELS]
    try:
        scores = client.scores(ref, prompts)
    except ClientError:
        raise
    except Exception as exc:
        raise ClientError(f"time-of-day client failed for {scene.scene_id}: {exc}") from exc
    return _argmax_label(scores, TIME_OF_DAY_LABELS), "inferred"


def classify_scene_type(scene: Scene, bev_ref: str, client: MapLabelClient) -> tuple[str, str]:
    try:
        label = client.label(bev_ref, SCENE_TYPE_LABELS)
    except ClientError:
        raise
    except Exception as exc:
        raise ClientError(f"scene-type client failed for {scene.scene_id}: {exc}") from exc
    if label not in SCENE_TYPE_LABELS:
        raise InvalidCategory(f"client returned {label!r}")
    return label, "inferred"


@dataclass
class ClientBundle:
    weather: SimilarityClient
    time_of_day: SimilarityClient
    scene_type: MapLabelClient


def default_clients() -> ClientBundle:
    return ClientBundle(
        weather=HashSimilarityClient(),
        time_of_day=HashSimilarityClient(),
        scene_type=ConstantMapLabelClient(),
    )


@dataclass
class CompletionResult:
    scene: Scene
    errors: list[tuple[str, str]]  # (field, message)


def complete_metadata(
    scene: Scene,
    clients: ClientBundle,
    asset_dir: str | Path | None = None,
    bev_ref: str | None = None,
) -> CompletionResult:
    """Fill missing weather / time_of_day / scene_type.

    Precedence: human_verified > source_native > inferred; existing values are
    never overwritten. Idempotent. Errors are aggregated per attribute and the
    scene is still returned with whatever completed.
    """
    meta = scene.metadata
    updates: dict[str, str] = {}
    provenance = dict(meta.provenance)
    errors: list[tuple[str, str]] = []

    def needs(field: str) -> bool:
        return meta.get(field) is None

    if needs("weather"):
        try:
            label, prov = classify_weather(scene, clients.weather)
            updates["weather"] = label
            provenance["weather"] = prov
        except (MissingImage, ClientError, InvalidCategory) as exc:
            errors.append(("weather", str(exc)))
    if needs("time_of_day"):
        try:
            label, prov = classify_time_of_day(scene, clients.time_of_day)
            updates["time_of_day"] = label
            provenance["time_of_day"] = prov
        except (MissingImage, ClientError, InvalidCategory) as exc:
            errors.append(("time_of_day", str(exc)))
    if needs("scene_type"):
        try:
            ref = bev_ref or _render_bev_ref(scene, asset_dir)
            label, prov = classify_scene_type(scene, ref, clients.scene_type)
            updates["scene_type"] = label
            provenance["scene_type"] = prov
        except (MissingImage, ClientError, InvalidCategory) as exc:
            errors.append(("scene_type", str(exc)))

    if not updates:
        return CompletionResult(scene, errors)
    new_meta = SceneMetadata(
        source=meta.source,
        ego_type=meta.ego_type,
        weather=updates.get("weather", meta.weather),
        time_of_day=updates.get("time_of_day", meta.time_of_day),
        scene_type=updates.get("scene_type", meta.scene_type),
        provenance=provenance,
    )
    new_scene = Scene(
        scene_id=scene.scene_id,
        metadata=new_meta,
        frames=scene.frames,
        calibrated=scene.calibrated,
        lanes=scene.lanes,
    )
    return CompletionResult(new_scene, errors)


def _render_bev_ref(scene: Scene, asset_dir: str | Path | None) -> str:
    if asset_dir is None:
        return f"bev://{scene.scene_id}/0"
    out = Path(asset_dir) / scene.scene_id / "0"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "bev.png"
    if not path.exists():
        save_png(render_bev(scene, 0, BevStyle()), path)
    return str(path)
