"""Pairwise spatial relation classification in the source object's frame."""

from __future__ import annotations

import math

import numpy as np

from .types import ObjectNode, ThresholdSet


def heading_basis(yaw: float) -> tuple[np.ndarray, np.ndarray]:
    """Forward and right unit vectors in the ground plane for a heading."""
    f = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    r = np.array([math.sin(yaw), -math.cos(yaw), 0.0])
    return f, r


def local_projection(src: ObjectNode, dst: ObjectNode) -> tuple[float, float, float]:
    """Displacement of dst in src's frame: (forward, lateral-right, vertical)."""
    d = dst.center - src.center
    f, r = heading_basis(src.yaw)
    return (float(d @ f), float(d @ r), float(d[2]))


def adaptive_threshold(src: ObjectNode, thresholds: ThresholdSet) -> float:
    """Planar dead-zone radius: half the mean horizontal extent, floored."""
    length, width = float(src.size[0]), float(src.size[1])
    return max(thresholds.delta_xy_floor, (length + width) / 4.0)


def classify_relation(src: ObjectNode, dst: ObjectNode, thresholds: ThresholdSet) -> str | None:
    """One of eight cardinal/diagonal labels, or None inside the dead zone.

    The regions partition the plane outside the dead zone, so at most one
    predicate fires for any (s, u).
    """
    s, u, _ = local_projection(src, dst)
    d = adaptive_threshold(src, thresholds)
    if s > d and abs(u) < d:
        return "ahead_of"
    if s < -d and abs(u) < d:
        return "behind"
    if u < -d and abs(s) < d:
        return "left_of"
    if u > d and abs(s) < d:
        return "right_of"
    if s > d and u < -d:
        return "ahead_left_of"
    if s > d and u > d:
        return "ahead_right_of"
    if s < -d and u < -d:
        return "rear_left_of"
    if s < -d and u > d:
        return "rear_right_of"
    return None
