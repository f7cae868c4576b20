"""Independent oracles: brute-force re-derivations kept structurally apart
from the implementation paths they check."""

from __future__ import annotations

import math

import numpy as np


def frustum_contains(point_ego, ego_from_camera: np.ndarray, fx, fy, cx, cy, width, height) -> bool:
    """Half-space frustum test built from the image-corner rays."""
    cam_from_ego = np.linalg.inv(ego_from_camera)
    p = cam_from_ego[:3, :3] @ np.asarray(point_ego, float) + cam_from_ego[:3, 3]
    if p[2] <= 0:
        return False
    # Corner rays in camera coords (z=1 plane); plane normals oriented so the
    # central ray is inside every half-space.
    corners = [
        np.array([(u - cx) / fx, (v - cy) / fy, 1.0])
        for u, v in ((0, 0), (width, 0), (width, height), (0, height))
    ]
    center_ray = np.mean(corners, axis=0)
    for a, b in zip(corners, corners[1:] + corners[:1]):
        normal = np.cross(b, a)
        if normal @ center_ray < 0:
            normal = -normal
        if normal @ p < 0:
            return False
    return True


def relation_oracle(src_xy, src_yaw, src_size, dst_xy, floor) -> str | None:
    """Sign-table route to the eight planar regions."""
    delta = max(floor, (src_size[0] + src_size[1]) / 4.0)
    c, s = math.cos(src_yaw), math.sin(src_yaw)
    world_to_src = np.array([[c, s], [-s, c]])
    fwd, left = world_to_src @ (np.asarray(dst_xy) - np.asarray(src_xy))
    right = -left

    def band(v: float) -> int:
        if v > delta:
            return 1
        if v < -delta:
            return -1
        return 0

    table = {
        (1, 0): "ahead_of",
        (-1, 0): "behind",
        (0, -1): "left_of",
        (0, 1): "right_of",
        (1, -1): "ahead_left_of",
        (1, 1): "ahead_right_of",
        (-1, -1): "rear_left_of",
        (-1, 1): "rear_right_of",
        (0, 0): None,
    }
    return table[(band(fwd), band(right))]


def interaction_oracle(config: dict) -> list[str]:
    """First-match decision table over precomputed pair features.

    ``config`` keys: src_xy, src_yaw, src_speed, dst_xy, dst_yaw, dst_speed,
    src_lane_changing (bool), distance_decreasing (bool), thresholds dict with
    delta_int, same_lane, eps_v.
    """
    th = config["thresholds"]
    src_xy = np.asarray(config["src_xy"], float)
    dst_xy = np.asarray(config["dst_xy"], float)
    distance = float(np.linalg.norm(src_xy - dst_xy))
    if distance >= th["delta_int"]:
        return []

    dphi = abs(math.atan2(math.sin(config["src_yaw"] - config["dst_yaw"]),
                          math.cos(config["src_yaw"] - config["dst_yaw"])))
    same_dir = dphi < math.pi / 6
    opposite = dphi > 5 * math.pi / 6
    perpendicular = abs(dphi - math.pi / 2) < math.pi / 9

    c, s = math.cos(config["dst_yaw"]), math.sin(config["dst_yaw"])
    rel = src_xy - dst_xy
    d_fwd = rel[0] * c + rel[1] * s
    d_lat = abs(rel[0] * s - rel[1] * c)
    same_lane = d_lat < th["same_lane"]
    src_speed, dst_speed = config["src_speed"], config["dst_speed"]
    src_moving = src_speed >= th["eps_v"]
    dst_moving = dst_speed >= th["eps_v"]

    features = {
        "opp_or_perp": opposite or perpendicular,
        "opposite": opposite,
        "both_moving": src_moving and dst_moving,
        "decreasing": config["distance_decreasing"],
        "close": distance < th["delta_int"] / 2,
        "ahead": d_fwd > 1.0,
        "behind": d_fwd < -1.0,
        "beside": abs(d_fwd) <= 1.0,
        "same_lane": same_lane,
        "same_dir": same_dir,
        "faster": src_speed > dst_speed + 0.5,
        "lane_changing": config["src_lane_changing"],
        "similar_speed": abs(src_speed - dst_speed) < 1.0,
    }
    rows = [
        ({"opp_or_perp": True, "opposite": True, "both_moving": True, "decreasing": True}, ["approaching"]),
        ({"opp_or_perp": True, "close": True}, ["crossing"]),
        ({"opp_or_perp": True}, []),
        ({"ahead": True, "same_lane": True, "both_moving": True, "same_dir": True}, ["lead"]),
        ({"ahead": True, "faster": True, "lane_changing": True}, ["overtake", "yielding:reciprocal"]),
        ({"ahead": True, "faster": True, "same_lane": False}, ["passing"]),
        ({"ahead": True}, []),
        ({"behind": True, "same_lane": True, "same_dir": True}, ["follow"]),
        ({"behind": True}, []),
        ({"beside": True, "same_lane": False, "similar_speed": True}, ["co_moving"]),
    ]
    for conditions, labels in rows:
        if all(features[k] == v for k, v in conditions.items()):
            return labels
    return []


def rigid_transform(rng: np.random.Generator) -> np.ndarray:
    """Random proper rigid transform of 3-space (rotation about z + lift)."""
    angle = rng.uniform(-math.pi, math.pi)
    c, s = math.cos(angle), math.sin(angle)
    m = np.eye(4)
    m[:3, :3] = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    m[:3, 3] = rng.uniform(-100, 100, 3)
    return m
