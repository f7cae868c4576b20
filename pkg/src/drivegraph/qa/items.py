"""QA item model, generator configuration, and corpus serialization."""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from ..rendering import save_png
from ..schema import dumps_canonical
from .templates import ABILITIES, TASK_IDS


class NoEligibleCandidates(RuntimeError):
    """A generator could not satisfy one of its constraints."""

    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        super().__init__(f"{constraint}{': ' + detail if detail else ''}")


@dataclass
class GeneratorConfig:
    k_options: int = 4
    seed: int = 0
    frame_gap: int = 3  # ego-rotation frame separation
    sequence_length: int = 6  # leave-one-camera-out window
    p_same: float = 0.75  # multiview matching same-object probability
    depth_margin: float = 2.0  # m, minimum range difference
    visibility_threshold: float = 0.6  # occlusion cut
    event_horizon: float = 3.0  # s of future events
    manipulation_dt: float = 0.5  # s simulated
    max_listed: int = 3  # occlusion / action-reasoning object cap
    p_diff_camera: float = 0.75  # interaction reasoning disjoint preference
    render_assets: bool = True
    asset_dir: str | None = None


@dataclass
class QAItem:
    item_id: str
    task_id: str
    ability: str
    question: str
    prompt: str  # question with any <video> tag expanded to frame slots
    asset_refs: list[str]
    options: list[str] | None  # None for open-numeric items
    answer: int | float  # option index, or the numeric target
    answer_type: str  # "option" | "numeric"
    scene_id: str
    frame_span: tuple[int, int]
    constraint_certificate: dict
    rng_seed: int
    context: str = ""  # extra prompt text (interaction definitions)

    def __post_init__(self):
        if self.task_id not in TASK_IDS:
            raise ValueError(f"unknown task {self.task_id!r}")
        if self.ability != ABILITIES[self.task_id]:
            raise ValueError(f"{self.task_id}: ability mismatch")
        if self.answer_type == "option":
            if not self.options or len(set(self.options)) != len(self.options):
                raise ValueError(f"{self.item_id}: options must be unique")
            if not 0 <= int(self.answer) < len(self.options):
                raise ValueError(f"{self.item_id}: answer index out of range")
        elif self.answer_type == "numeric":
            if self.options is not None:
                raise ValueError(f"{self.item_id}: numeric items carry no options")
        else:
            raise ValueError(f"{self.item_id}: bad answer_type {self.answer_type!r}")

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["frame_span"] = list(self.frame_span)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "QAItem":
        rec = dict(rec)
        rec["frame_span"] = tuple(rec["frame_span"])
        return cls(**rec)


def write_corpus(items: list[QAItem], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(dumps_canonical(item.to_record()) + "\n")


def read_corpus(path: str | Path) -> list[QAItem]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                items.append(QAItem.from_record(json.loads(line)))
    return items


def derive_seed(*parts) -> int:
    return zlib.crc32("|".join(str(p) for p in parts).encode())


def derive_rng(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


class AssetWriter:
    """Renders item assets under {root}/{scene_id}/{frame}/{kind}.png.

    With rendering disabled (validity sweeps, rate estimation) only the
    relative paths are produced; corpus bytes are identical either way.
    """

    def __init__(self, root: str | Path | None, enabled: bool = True):
        self.root = Path(root) if root else None
        self.enabled = enabled and root is not None

    def add(self, scene_id: str, frame: int, kind: str, factory: Callable[[], Image.Image]) -> str:
        rel = f"{scene_id}/{frame}/{kind}.png"
        if self.enabled:
            path = self.root / rel
            if not path.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
                save_png(factory(), path)
        return rel


def shuffle_with_answer(options: list[str], correct_index: int, rng: np.random.Generator):
    """Shuffle options, returning (shuffled, new_answer_index)."""
    order = list(rng.permutation(len(options)))
    shuffled = [options[k] for k in order]
    return shuffled, order.index(correct_index)
