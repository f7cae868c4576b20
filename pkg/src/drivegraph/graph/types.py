"""Node, edge, and threshold types for the multi-relational scene graph."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from ..schema import dumps_canonical

RELATION_LABELS = (
    "ahead_of",
    "behind",
    "left_of",
    "right_of",
    "ahead_left_of",
    "ahead_right_of",
    "rear_left_of",
    "rear_right_of",
)
ACTION_LABELS = (
    "stopped",
    "moving_forward",
    "moving_backward",
    "turn_left",
    "turn_right",
    "u_turn",
    "lane_change_left",
    "lane_change_right",
    "accelerate",
    "decelerate",
)
INTERACTION_LABELS = (
    "lead",
    "follow",
    "overtake",
    "passing",
    "co_moving",
    "approaching",
    "crossing",
    "yielding",
)
EDGE_KINDS = ("relation", "action", "interaction", "temporal")

EGO_INDEX = -1  # object_index reserved for the per-frame ego node


@dataclass
class ThresholdSet:
    """Geometric/kinematic thresholds; all values strictly positive.

    Values not fixed by the construction rules themselves are configuration
    with these defaults and are recorded in graph provenance.
    """

    delta_xy_floor: float = 1.0  # m, lower bound for the adaptive planar dead zone
    delta_z: float = 1.5  # m, vertical relation band
    eps_v: float = 0.5  # m/s, below -> stopped
    eps_a: float = 0.5  # m/s per inter-frame interval
    eps_lane: float = 1.0  # m, turn-compensated lateral displacement
    delta_int: float = 30.0  # m, interaction pairing radius
    same_lane: float = 2.0  # m, lateral offset for shared-lane test
    visibility_view: float = 0.1  # min visibility fraction to count a camera view

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value <= 0:
                raise ValueError(f"threshold {name} must be positive, got {value}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ObjectNode:
    frame_index: int
    object_index: int  # position in the frame's object list; EGO_INDEX for ego
    category: str
    center: np.ndarray  # ego frame, m
    size: np.ndarray
    yaw: float
    velocity: np.ndarray  # ego frame, m/s (possibly estimated; zero if unknown)
    cameras: frozenset[str] = frozenset()
    track_id: str | None = None
    velocity_known: bool = True

    @property
    def key(self) -> tuple[int, int]:
        return (self.frame_index, self.object_index)

    @property
    def is_ego(self) -> bool:
        return self.object_index == EGO_INDEX

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


@dataclass(frozen=True)
class TypedEdge:
    kind: str  # relation | action | interaction | temporal
    src: tuple[int, int]
    dst: tuple[int, int]
    label: str = ""

    def __post_init__(self):
        if self.kind not in EDGE_KINDS:
            raise ValueError(f"unknown edge kind {self.kind!r}")
        if self.kind == "action" and self.src != self.dst:
            raise ValueError("action edges must be self-loops")
        if self.kind in ("relation", "interaction") and self.src == self.dst:
            raise ValueError(f"{self.kind} edges must connect distinct nodes")


@dataclass
class SceneGraph:
    scene_id: str
    nodes: dict[tuple[int, int], ObjectNode]
    edges: dict[str, list[TypedEdge]]
    thresholds: ThresholdSet
    temporal_disabled: bool = False

    def __post_init__(self):
        for kind in EDGE_KINDS:
            self.edges.setdefault(kind, [])
        for kind, edges in self.edges.items():
            for e in edges:
                if e.src not in self.nodes or e.dst not in self.nodes:
                    raise ValueError(f"{kind} edge endpoint missing: {e}")

    def edges_of(self, kind: str) -> list[TypedEdge]:
        return self.edges[kind]

    def nodes_at(self, t: int, include_ego: bool = False) -> list[ObjectNode]:
        out = [
            n
            for (ft, _), n in sorted(self.nodes.items())
            if ft == t and (include_ego or not n.is_ego)
        ]
        return out

    def node(self, t: int, i: int) -> ObjectNode:
        return self.nodes[(t, i)]

    def relation_between(self, t: int, i: int, j: int) -> str | None:
        for e in self.edges["relation"]:
            if e.src == (t, i) and e.dst == (t, j):
                return e.label
        return None

    def actions_of(self, t: int, i: int) -> set[str]:
        return {e.label for e in self.edges["action"] if e.src == (t, i)}

    def frame_count(self) -> int:
        return 1 + max(t for t, _ in self.nodes)


def export_graph(graph: SceneGraph) -> str:
    """Stable-order single-line JSON document for diff-based testing."""
    nodes = [
        {
            "t": n.frame_index,
            "i": n.object_index,
            "track_id": n.track_id,
            "category": n.category,
            "center": n.center.tolist(),
            "size": n.size.tolist(),
            "yaw": n.yaw,
            "velocity": n.velocity.tolist(),
            "velocity_known": n.velocity_known,
            "cameras": sorted(n.cameras),
        }
        for _, n in sorted(graph.nodes.items())
    ]
    edges = [
        {"kind": e.kind, "src": list(e.src), "dst": list(e.dst), "label": e.label}
        for kind in EDGE_KINDS
        for e in sorted(graph.edges[kind], key=lambda e: (e.src, e.dst, e.label))
    ]
    doc = {
        "scene_id": graph.scene_id,
        "thresholds": graph.thresholds.to_dict(),
        "temporal_disabled": graph.temporal_disabled,
        "nodes": nodes,
        "edges": edges,
    }
    return dumps_canonical(doc) + "\n"


def parse_graph(text: str) -> SceneGraph:
    doc = json.loads(text)
    nodes = {
        (n["t"], n["i"]): ObjectNode(
            frame_index=n["t"],
            object_index=n["i"],
            category=n["category"],
            center=np.asarray(n["center"], dtype=float),
            size=np.asarray(n["size"], dtype=float),
            yaw=n["yaw"],
            velocity=np.asarray(n["velocity"], dtype=float),
            cameras=frozenset(n["cameras"]),
            track_id=n.get("track_id"),
            velocity_known=n.get("velocity_known", True),
        )
        for n in doc["nodes"]
    }
    edges: dict[str, list[TypedEdge]] = {k: [] for k in EDGE_KINDS}
    for e in doc["edges"]:
        edges[e["kind"]].append(
            TypedEdge(e["kind"], tuple(e["src"]), tuple(e["dst"]), e["label"])
        )
    return SceneGraph(
        scene_id=doc["scene_id"],
        nodes=nodes,
        edges=edges,
        thresholds=ThresholdSet(**doc["thresholds"]),
        temporal_disabled=doc["temporal_disabled"],
    )
