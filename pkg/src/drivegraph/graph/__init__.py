from .builder import NotCalibrated, build_graph, link_temporal
from .interactions import classify_interaction
from .motion import MissingTrack, ZeroDt, classify_actions, estimate_velocity
from .relations import adaptive_threshold, classify_relation, local_projection
from .types import (
    ACTION_LABELS,
    EDGE_KINDS,
    EGO_INDEX,
    INTERACTION_LABELS,
    RELATION_LABELS,
    ObjectNode,
    SceneGraph,
    ThresholdSet,
    TypedEdge,
    export_graph,
    parse_graph,
)

__all__ = [
    "ACTION_LABELS",
    "EDGE_KINDS",
    "EGO_INDEX",
    "INTERACTION_LABELS",
    "RELATION_LABELS",
    "MissingTrack",
    "NotCalibrated",
    "ObjectNode",
    "SceneGraph",
    "ThresholdSet",
    "TypedEdge",
    "ZeroDt",
    "adaptive_threshold",
    "build_graph",
    "classify_actions",
    "classify_interaction",
    "classify_relation",
    "estimate_velocity",
    "export_graph",
    "link_temporal",
    "local_projection",
    "parse_graph",
]
