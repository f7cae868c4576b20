"""Shared generation context: scenes, graphs, assets, candidate utilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graph import SceneGraph
from ..graph.types import ObjectNode
from ..rendering import (
    BevStyle,
    camera_order,
    compose_camera_grid,
    mask_camera_sequence,
    render_bev,
    render_multiview,
)
from ..schema import Scene
from .items import AssetWriter, GeneratorConfig


@dataclass
class SceneContext:
    scene: Scene
    graph: SceneGraph

    @property
    def scene_id(self) -> str:
        return self.scene.scene_id

    @property
    def n_frames(self) -> int:
        return len(self.scene.frames)

    @property
    def keyframe(self) -> int:
        return self.n_frames // 2


class GenerationContext:
    def __init__(self, contexts: list[SceneContext], cfg: GeneratorConfig):
        self.by_id = {c.scene_id: c for c in contexts}
        self.cfg = cfg
        self.assets = AssetWriter(cfg.asset_dir, enabled=cfg.render_assets)

    @property
    def scene_ids(self) -> list[str]:
        return sorted(self.by_id)

    def pool_matches(self, scene: Scene) -> list[str]:
        """Other pool scenes sharing (source, scene_type)."""
        return [
            sid
            for sid in self.scene_ids
            if sid != scene.scene_id
            and self.by_id[sid].scene.metadata.source == scene.metadata.source
            and self.by_id[sid].scene.metadata.scene_type == scene.metadata.scene_type
        ]

    # --- asset shortcuts -----------------------------------------------------

    def bev_asset(self, sc: SceneContext, frame: int, highlight=()) -> str:
        style = BevStyle(highlight=list(highlight))
        kind = "bev" if not highlight else "bev_" + "_".join(f"{t}x{i}" for t, i in highlight)
        return self.assets.add(sc.scene_id, frame, kind, lambda: render_bev(sc.scene, frame, style))

    def multiview_asset(self, sc: SceneContext, frame: int, highlight, kind: str) -> str:
        return self.assets.add(
            sc.scene_id,
            frame,
            kind,
            lambda: render_multiview(sc.scene, frame, highlight=highlight).image,
        )

    def camera_tile_asset(self, sc: SceneContext, frame: int, camera: str) -> str:
        from ..rendering import placeholder_tile, _load_tile  # tile reuse

        return self.assets.add(
            sc.scene_id,
            frame,
            f"tile_{camera}",
            lambda: _load_tile(sc.scene, sc.scene.frames[frame], camera, placeholder=True),
        )

    def grid_asset(self, sc: SceneContext, frame: int, shuffled: list[str], kind: str) -> str:
        return self.assets.add(
            sc.scene_id,
            frame,
            kind,
            lambda: compose_camera_grid(sc.scene, frame, shuffled)[0],
        )

    def masked_sequence_assets(self, sc: SceneContext, start: int, count: int, camera: str) -> list[str]:
        refs = []
        for k in range(count):
            def factory(k=k):
                return mask_camera_sequence(sc.scene, start, count, camera)[k]

            refs.append(self.assets.add(sc.scene_id, start + k, f"masked_{camera}_{start}_{k}", factory))
        return refs

    def video_assets(self, sc: SceneContext, frames: range, highlight_first=(), kind="clip") -> list[str]:
        refs = []
        for t in frames:
            hl = list(highlight_first) if t == frames[0] else []
            refs.append(self.multiview_asset(sc, t, hl, f"{kind}_{frames[0]}_{t}"))
        return refs


# --- node helpers -------------------------------------------------------------

def visible_nodes(graph: SceneGraph, t: int) -> list[ObjectNode]:
    return [n for n in graph.nodes_at(t) if n.cameras]


def display_id(node: ObjectNode) -> int:
    return node.object_index + 1


def tracked_visible(graph: SceneGraph, t: int) -> list[ObjectNode]:
    return [n for n in visible_nodes(graph, t) if n.track_id is not None]


def disjoint_camera_pairs(nodes: list[ObjectNode]) -> list[tuple[ObjectNode, ObjectNode]]:
    pairs = []
    for a in nodes:
        for b in nodes:
            if a.object_index == b.object_index:
                continue
            if a.track_id is not None and a.track_id == b.track_id:
                continue
            if a.cameras and b.cameras and not (a.cameras & b.cameras):
                pairs.append((a, b))
    return pairs


def pick(rng: np.random.Generator, seq):
    return seq[int(rng.integers(0, len(seq)))]


def first_frame_ids(graph: SceneGraph) -> dict[str, int]:
    """track_id -> 1-indexed position in the first frame (the annotated one)."""
    return {
        n.track_id: display_id(n)
        for n in graph.nodes_at(0)
        if n.track_id is not None
    }
