"""Assembles the dynamic multi-relational graph from a calibrated scene."""

from __future__ import annotations

import numpy as np

from ..schema import Scene
from .interactions import classify_interaction
from .motion import classify_actions, node_velocity, relative_ego_transform
from .relations import classify_relation
from .types import EGO_INDEX, ObjectNode, SceneGraph, ThresholdSet, TypedEdge

EGO_SIZE = {"car": (4.5, 1.9, 1.6), "truck": (8.0, 2.5, 3.4)}


class NotCalibrated(RuntimeError):
    pass


def _ego_node(scene: Scene, t: int) -> ObjectNode:
    # Ego sits at its own origin facing +x; velocity from pose finite difference.
    if t >= 1:
        rel = relative_ego_transform(scene, t)
        dt = scene.frames[t].timestamp - scene.frames[t - 1].timestamp
        velocity = -rel[:3, 3] / dt
        known = True
    else:
        velocity = np.zeros(3)
        known = False
    length, width, height = EGO_SIZE[scene.metadata.ego_type]
    return ObjectNode(
        frame_index=t,
        object_index=EGO_INDEX,
        category=f"vehicle.{scene.metadata.ego_type}",
        center=np.zeros(3),
        size=np.array([length, width, height]),
        yaw=0.0,
        velocity=velocity,
        cameras=frozenset(),
        track_id=None,
        velocity_known=known,
    )


def build_nodes(scene: Scene, thresholds: ThresholdSet, include_ego: bool = True) -> dict:
    nodes: dict[tuple[int, int], ObjectNode] = {}
    for t, frame in enumerate(scene.frames):
        if include_ego:
            ego = _ego_node(scene, t)
            nodes[ego.key] = ego
        for i, obj in enumerate(frame.objects):
            velocity, known = node_velocity(scene, t, i)
            nodes[(t, i)] = ObjectNode(
                frame_index=t,
                object_index=i,
                category=obj.category,
                center=obj.center.copy(),
                size=obj.size.copy(),
                yaw=obj.yaw,
                velocity=velocity,
                cameras=frozenset(obj.cameras(thresholds.visibility_view)),
                track_id=obj.track_id,
                velocity_known=known,
            )
    return nodes


def link_temporal(scene: Scene) -> list[TypedEdge]:
    """One edge per (track, t) with the track present at both t and t+1."""
    edges = []
    for t in range(len(scene.frames) - 1):
        next_by_track = {
            o.track_id: j
            for j, o in enumerate(scene.frames[t + 1].objects)
            if o.track_id is not None
        }
        for i, obj in enumerate(scene.frames[t].objects):
            if obj.track_id is not None and obj.track_id in next_by_track:
                edges.append(
                    TypedEdge("temporal", (t, i), (t + 1, next_by_track[obj.track_id]), "persists")
                )
    return edges


def build_graph(
    scene: Scene,
    thresholds: ThresholdSet | None = None,
    include_ego: bool = True,
) -> SceneGraph:
    """Nodes for every object in every frame plus all four edge families.

    Pure given (scene, thresholds); the thresholds used are recorded on the
    graph for provenance. Interaction edges start at the second frame, where
    a distance trend exists. Temporal edges are skipped (and flagged) for
    sources without track ids.
    """
    if not scene.calibrated:
        raise NotCalibrated(scene.scene_id)
    thresholds = thresholds or ThresholdSet()
    nodes = build_nodes(scene, thresholds, include_ego=include_ego)

    relation_edges: list[TypedEdge] = []
    action_edges: list[TypedEdge] = []
    interaction_edges: set[TypedEdge] = set()

    for t, frame in enumerate(scene.frames):
        frame_nodes = [nodes[(t, i)] for i in range(len(frame.objects))]
        for src in frame_nodes:
            for dst in frame_nodes:
                if src.object_index == dst.object_index:
                    continue
                label = classify_relation(src, dst, thresholds)
                if label is not None:
                    relation_edges.append(TypedEdge("relation", src.key, dst.key, label))
        if include_ego:
            ego = nodes[(t, EGO_INDEX)]
            for dst in frame_nodes:
                label = classify_relation(ego, dst, thresholds)
                if label is not None:
                    relation_edges.append(TypedEdge("relation", ego.key, dst.key, label))

        actions = classify_actions(scene, t, thresholds)
        for i, labels in enumerate(actions):
            for label in sorted(labels):
                action_edges.append(TypedEdge("action", (t, i), (t, i), label))

        if t >= 1:
            for src in frame_nodes:
                for dst in frame_nodes:
                    if src.object_index == dst.object_index:
                        continue
                    hits = classify_interaction(scene, src, dst, thresholds, actions[src.object_index])
                    for label, reciprocal in hits:
                        if reciprocal:
                            interaction_edges.add(TypedEdge("interaction", dst.key, src.key, label))
                        else:
                            interaction_edges.add(TypedEdge("interaction", src.key, dst.key, label))

    has_tracks = scene.has_track_ids()
    temporal_edges = link_temporal(scene) if has_tracks else []

    return SceneGraph(
        scene_id=scene.scene_id,
        nodes=nodes,
        edges={
            "relation": relation_edges,
            "action": action_edges,
            "interaction": sorted(interaction_edges, key=lambda e: (e.src, e.dst, e.label)),
            "temporal": temporal_edges,
        },
        thresholds=thresholds,
        temporal_disabled=not has_tracks,
    )
