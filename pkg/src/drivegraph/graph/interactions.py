"""Directed pairwise interaction classification.

Unlike spatial relations, interactions depend on velocities, lane-relative
geometry, and (for approaching traffic) the ego-compensated distance trend
between consecutive frames. Labels describe src from dst's point of view:
``lead`` means src leads dst.
"""

from __future__ import annotations

import math

import numpy as np

from ..schema import Scene, normalize_yaw
from .motion import compensate_point
from .relations import heading_basis
from .types import ObjectNode, ThresholdSet

SAME_DIRECTION = math.pi / 6
OPPOSITE_DIRECTION = 5 * math.pi / 6
PERPENDICULAR_WINDOW = math.pi / 9
AHEAD_OFFSET = 1.0  # m along dst's heading
OVERTAKE_SPEED_MARGIN = 0.5  # m/s
CO_MOVING_SPEED_BAND = 1.0  # m/s


def alignment(src_yaw: float, dst_yaw: float) -> str:
    """same | opposite | perpendicular | oblique by absolute heading delta."""
    dphi = abs(normalize_yaw(src_yaw - dst_yaw))
    if dphi < SAME_DIRECTION:
        return "same"
    if dphi > OPPOSITE_DIRECTION:
        return "opposite"
    if abs(dphi - math.pi / 2) < PERPENDICULAR_WINDOW:
        return "perpendicular"
    return "oblique"


def lane_projection(src: ObjectNode, dst: ObjectNode) -> tuple[float, float]:
    """(forward, |lateral|) of src's position in dst's frame."""
    d = src.center - dst.center
    f, r = heading_basis(dst.yaw)
    return float(d @ f), abs(float(d @ r))


def _distance_decreasing(scene: Scene, src: ObjectNode, dst: ObjectNode) -> bool:
    """Ego-compensated inter-object distance shrank since the previous frame."""
    t = src.frame_index
    if t < 1 or src.track_id is None or dst.track_id is None:
        return False
    i_prev = scene.frame_of_track(src.track_id, t - 1)
    j_prev = scene.frame_of_track(dst.track_id, t - 1)
    if i_prev is None or j_prev is None:
        return False
    ci = compensate_point(scene, t, scene.frames[t - 1].objects[i_prev].center)
    cj = compensate_point(scene, t, scene.frames[t - 1].objects[j_prev].center)
    d_prev = float(np.linalg.norm(ci - cj))
    d_now = float(np.linalg.norm(src.center - dst.center))
    return d_now < d_prev


def classify_interaction(
    scene: Scene,
    src: ObjectNode,
    dst: ObjectNode,
    thresholds: ThresholdSet,
    src_actions: set[str],
) -> list[tuple[str, bool]]:
    """Interaction labels for the directed pair (src, dst) at one frame.

    Returns (label, reciprocal) pairs; reciprocal=True marks a label to emit
    on the reversed edge (an overtake implies the other party yields).
    Empty when the pair is beyond the pairing radius or no rule fires.
    """
    distance = float(np.linalg.norm(src.center - dst.center))
    if distance >= thresholds.delta_int:
        return []

    align = alignment(src.yaw, dst.yaw)
    d_fwd, d_lat = lane_projection(src, dst)
    same_lane = d_lat < thresholds.same_lane
    src_moving = src.speed >= thresholds.eps_v
    dst_moving = dst.speed >= thresholds.eps_v
    lane_changing = bool(src_actions & {"lane_change_left", "lane_change_right"})

    if align in ("opposite", "perpendicular"):
        if (
            align == "opposite"
            and src_moving
            and dst_moving
            and _distance_decreasing(scene, src, dst)
        ):
            return [("approaching", False)]
        if distance < thresholds.delta_int / 2:
            return [("crossing", False)]
        return []

    if d_fwd > AHEAD_OFFSET:
        if same_lane and src_moving and dst_moving and align == "same":
            return [("lead", False)]
        if src.speed > dst.speed + OVERTAKE_SPEED_MARGIN and lane_changing:
            return [("overtake", False), ("yielding", True)]
        if src.speed > dst.speed + OVERTAKE_SPEED_MARGIN and not same_lane:
            return [("passing", False)]
        return []
    if d_fwd < -AHEAD_OFFSET:
        if same_lane and align == "same":
            return [("follow", False)]
        return []
    if not same_lane and abs(src.speed - dst.speed) < CO_MOVING_SPEED_BAND:
        return [("co_moving", False)]
    return []
