"""Ego-compensated kinematics: velocity estimation and per-object actions."""

from __future__ import annotations

import math

import numpy as np

from ..schema import STATIC_CATEGORIES, Scene, normalize_yaw
from .types import ThresholdSet

FORWARD_ANGLE = math.pi / 3
BACKWARD_ANGLE = 2 * math.pi / 3
TURN_ANGLE = math.pi / 12
U_TURN_ANGLE = math.pi / 2
# An accelerate/decelerate trend must hold across three consecutive frames,
# i.e. two consecutive speed deltas of the same sign.
SUSTAIN_DELTAS = 2


class MissingTrack(KeyError):
    pass


class ZeroDt(ValueError):
    pass


def relative_ego_transform(scene: Scene, t: int) -> np.ndarray:
    """Transform taking ego-frame coordinates at t-1 into the frame at t."""
    e_now = scene.frames[t].ego_pose
    e_prev = scene.frames[t - 1].ego_pose
    return e_now.inverse().matrix @ e_prev.matrix


def compensate_point(scene: Scene, t: int, point_prev: np.ndarray) -> np.ndarray:
    """Re-express a previous-frame ego point in the current ego frame."""
    rel = relative_ego_transform(scene, t)
    homo = np.append(np.asarray(point_prev, dtype=float), 1.0)
    return (rel @ homo)[:3]


def compensate_heading(scene: Scene, t: int, yaw_prev: float) -> float:
    """Previous heading rotated by the relative ego yaw into frame t."""
    rel = relative_ego_transform(scene, t)
    psi = math.atan2(rel[1, 0], rel[0, 0])
    return normalize_yaw(yaw_prev + psi)


def estimate_velocity(scene: Scene, t: int, track_id: str) -> np.ndarray:
    """Finite-difference velocity with ego motion removed.

    Naive position subtraction would conflate object motion with the ego's
    own movement; the previous position is first mapped into frame t.
    """
    if t < 1:
        raise MissingTrack(f"{track_id}: no frame before t={t}")
    i_now = scene.frame_of_track(track_id, t)
    i_prev = scene.frame_of_track(track_id, t - 1)
    if i_now is None or i_prev is None:
        raise MissingTrack(f"{track_id} not present in frames {t - 1} and {t}")
    dt = scene.frames[t].timestamp - scene.frames[t - 1].timestamp
    if dt == 0:
        raise ZeroDt(f"frames {t - 1}->{t}")
    c_now = scene.frames[t].objects[i_now].center
    c_prev_comp = compensate_point(scene, t, scene.frames[t - 1].objects[i_prev].center)
    return (c_now - c_prev_comp) / dt


def node_velocity(scene: Scene, t: int, i: int) -> tuple[np.ndarray, bool]:
    """Velocity for object i at frame t and whether it is trustworthy.

    Native annotation velocity wins; otherwise the estimate when the track
    appears in the previous frame; otherwise zero with known=False.
    """
    obj = scene.frames[t].objects[i]
    if obj.velocity is not None:
        return obj.velocity.copy(), True
    if obj.track_id is not None and t >= 1:
        if scene.frame_of_track(obj.track_id, t - 1) is not None:
            return estimate_velocity(scene, t, obj.track_id), True
    return np.zeros(3), False


def _speed_series(scene: Scene, track_id: str) -> dict[int, float]:
    """Known speeds per frame for a track (native or estimated)."""
    speeds: dict[int, float] = {}
    for t in range(len(scene.frames)):
        i = scene.frame_of_track(track_id, t)
        if i is None:
            continue
        v, known = node_velocity(scene, t, i)
        if known:
            speeds[t] = float(np.linalg.norm(v))
    return speeds


def _sustained_accel(speeds: dict[int, float], t: int, eps_a: float) -> str | None:
    deltas = []
    for k in range(SUSTAIN_DELTAS):
        cur, prev = t - k, t - k - 1
        if cur not in speeds or prev not in speeds:
            return None
        deltas.append(speeds[cur] - speeds[prev])
    if all(d > eps_a for d in deltas):
        return "accelerate"
    if all(d < -eps_a for d in deltas):
        return "decelerate"
    return None


def classify_actions(scene: Scene, t: int, thresholds: ThresholdSet) -> list[set[str]]:
    """Action label sets for every object in frame t; may be empty.

    The first frame of a track (and untracked objects) only receives
    stopped/category-derived labels: heading deltas and displacement need the
    previous observation.
    """
    out: list[set[str]] = []
    for i, obj in enumerate(scene.frames[t].objects):
        labels: set[str] = set()
        v, known = node_velocity(scene, t, i)
        speed = float(np.linalg.norm(v))

        if obj.category in STATIC_CATEGORIES:
            out.append({"stopped"})
            continue
        stopped = known and speed < thresholds.eps_v
        if stopped:
            labels.add("stopped")

        prev_i = (
            scene.frame_of_track(obj.track_id, t - 1)
            if obj.track_id is not None and t >= 1
            else None
        )
        if prev_i is None:
            out.append(labels)
            continue

        if known and not stopped:
            f = np.array([math.cos(obj.yaw), math.sin(obj.yaw), 0.0])
            cos_a = float(np.clip((v @ f) / speed, -1.0, 1.0))
            angle = math.acos(cos_a)
            if angle < FORWARD_ANGLE:
                labels.add("moving_forward")
            elif angle > BACKWARD_ANGLE:
                labels.add("moving_backward")

            yaw_prev = compensate_heading(scene, t, scene.frames[t - 1].objects[prev_i].yaw)
            d_theta = normalize_yaw(obj.yaw - yaw_prev)
            if abs(d_theta) > U_TURN_ANGLE:
                labels.add("u_turn")
            elif d_theta > TURN_ANGLE:
                labels.add("turn_left")
            elif d_theta < -TURN_ANGLE:
                labels.add("turn_right")

            # Lateral displacement with the drift a turn itself induces removed.
            # With a right-positive lateral axis, a left turn (d_theta > 0)
            # drifts negative, so the expected-drift term is added back.
            delta_c = obj.center - compensate_point(
                scene, t, scene.frames[t - 1].objects[prev_i].center
            )
            f_prev = np.array([math.cos(yaw_prev), math.sin(yaw_prev), 0.0])
            r_prev = np.array([math.sin(yaw_prev), -math.cos(yaw_prev), 0.0])
            d_lat = float(delta_c @ r_prev)
            d_fwd = float(delta_c @ f_prev)
            d_lat_comp = d_lat + d_fwd * math.sin(d_theta)
            if abs(d_lat_comp) > thresholds.eps_lane:
                labels.add("lane_change_right" if d_lat_comp > 0 else "lane_change_left")

        if obj.track_id is not None:
            trend = _sustained_accel(_speed_series(scene, obj.track_id), t, thresholds.eps_a)
            if trend is not None:
                labels.add(trend)
        out.append(labels)
    return out
