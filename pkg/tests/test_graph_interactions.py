from __future__ import annotations

import math

import numpy as np

from conftest import make_object, make_pose, make_scene, simple_frame
from drivegraph.graph import ThresholdSet, classify_interaction
from drivegraph.graph.types import ObjectNode
from oracles import interaction_oracle

TH = ThresholdSet()


def _node(x, y, yaw=0.0, speed=0.0, t=1, i=0, track=None):
    v = np.array([speed * math.cos(yaw), speed * math.sin(yaw), 0.0])
    return ObjectNode(
        frame_index=t,
        object_index=i,
        category="vehicle.car",
        center=np.array([x, y, 0.8]),
        size=np.array([4.4, 1.9, 1.6]),
        yaw=yaw,
        velocity=v,
        track_id=track,
    )


def _dummy_scene(n_frames=2):
    # Positions only matter for the distance trend; nodes are passed directly.
    return make_scene([simple_frame(t, []) for t in range(n_frames)])


def test_lead_same_lane_aligned_moving():
    scene = _dummy_scene()
    src = _node(15.0, 0.0, speed=6.0, i=0)
    dst = _node(10.0, 0.3, speed=6.0, i=1)
    assert classify_interaction(scene, src, dst, TH, set()) == [("lead", False)]


def test_follow_is_reverse_of_lead_geometry():
    scene = _dummy_scene()
    src = _node(10.0, 0.3, speed=6.0, i=0)
    dst = _node(15.0, 0.0, speed=6.0, i=1)
    assert classify_interaction(scene, src, dst, TH, set()) == [("follow", False)]


def test_overtake_emits_reciprocal_yielding():
    scene = _dummy_scene()
    src = _node(14.0, 3.0, speed=9.0, i=0)
    dst = _node(10.0, 0.0, speed=6.0, i=1)
    hits = classify_interaction(scene, src, dst, TH, {"lane_change_right"})
    assert ("overtake", False) in hits
    assert ("yielding", True) in hits


def test_passing_without_lane_change():
    scene = _dummy_scene()
    src = _node(14.0, 4.0, speed=9.0, i=0)
    dst = _node(10.0, 0.0, speed=6.0, i=1)
    assert classify_interaction(scene, src, dst, TH, set()) == [("passing", False)]


def test_co_moving_side_by_side():
    scene = _dummy_scene()
    src = _node(10.0, 3.5, speed=6.0, i=0)
    dst = _node(10.4, 0.0, speed=6.3, i=1)
    assert classify_interaction(scene, src, dst, TH, set()) == [("co_moving", False)]


def test_approaching_opposite_and_shrinking():
    # Track positions across two frames so the trend is computable.
    frames = []
    for t, (sx, dx) in enumerate([(30.0, 0.0), (25.0, 2.0)]):
        objects = [
            make_object(sx, 0.5, yaw=math.pi, track="a", velocity=[-8.0, 0, 0]),
            make_object(dx, 0.0, yaw=0.0, track="b", velocity=[4.0, 0, 0]),
        ]
        frames.append(simple_frame(t, objects, ego=make_pose()))
    scene = make_scene(frames)
    src = _node(25.0, 0.5, yaw=math.pi, speed=8.0, t=1, i=0, track="a")
    dst = _node(2.0, 0.0, yaw=0.0, speed=4.0, t=1, i=1, track="b")
    assert classify_interaction(scene, src, dst, TH, set()) == [("approaching", False)]


def test_crossing_perpendicular_close():
    scene = _dummy_scene()
    src = _node(8.0, 5.0, yaw=-math.pi / 2, speed=2.0, i=0)
    dst = _node(8.0, 0.0, yaw=0.0, speed=5.0, i=1)
    assert classify_interaction(scene, src, dst, TH, set()) == [("crossing", False)]


def test_beyond_pairing_radius_yields_nothing():
    scene = _dummy_scene()
    src = _node(40.0, 0.0, speed=6.0, i=0)
    dst = _node(0.0, 0.0, speed=6.0, i=1)
    assert classify_interaction(scene, src, dst, TH, set()) == []


def test_rule_table_oracle_agreement_5k():
    rng = np.random.default_rng(33)
    agreements = 0
    for k in range(5000):
        yaw_s = float(rng.uniform(-math.pi, math.pi))
        yaw_d = float(rng.uniform(-math.pi, math.pi))
        speed_s = float(rng.uniform(0, 12))
        speed_d = float(rng.uniform(0, 12))
        pos_s = rng.uniform(-25, 25, 2)
        pos_d = rng.uniform(-25, 25, 2)
        lane_changing = bool(rng.random() < 0.3)

        # Previous-frame positions chosen so the distance trend is random.
        step_s = np.array([math.cos(yaw_s), math.sin(yaw_s)]) * speed_s * 0.5
        step_d = np.array([math.cos(yaw_d), math.sin(yaw_d)]) * speed_d * 0.5
        prev_s, prev_d = pos_s - step_s, pos_d - step_d

        frames = []
        for t, (ps, pd) in enumerate([(prev_s, prev_d), (pos_s, pos_d)]):
            objects = [
                make_object(ps[0], ps[1], yaw=yaw_s, track="s",
                            velocity=step_s.tolist() + [0.0]),
                make_object(pd[0], pd[1], yaw=yaw_d, track="d",
                            velocity=step_d.tolist() + [0.0]),
            ]
            frames.append(simple_frame(t, objects, ego=make_pose()))
        scene = make_scene(frames)

        src = _node(pos_s[0], pos_s[1], yaw=yaw_s, speed=speed_s, t=1, i=0, track="s")
        dst = _node(pos_d[0], pos_d[1], yaw=yaw_d, speed=speed_d, t=1, i=1, track="d")
        actions = {"lane_change_left"} if lane_changing else set()
        got = classify_interaction(scene, src, dst, TH, actions)

        decreasing = bool(
            np.linalg.norm(pos_s - pos_d) < np.linalg.norm(prev_s - prev_d)
        )
        expected = interaction_oracle(
            {
                "src_xy": pos_s,
                "src_yaw": yaw_s,
                "src_speed": speed_s,
                "dst_xy": pos_d,
                "dst_yaw": yaw_d,
                "dst_speed": speed_d,
                "src_lane_changing": lane_changing,
                "distance_decreasing": decreasing,
                "thresholds": {"delta_int": TH.delta_int, "same_lane": TH.same_lane, "eps_v": TH.eps_v},
            }
        )
        got_labels = [lab + (":reciprocal" if rec else "") for lab, rec in got]
        assert got_labels == expected, f"config {k}: {got_labels} != {expected}"
        agreements += bool(got_labels)
    assert agreements > 400  # labels fire on a healthy share of random pairs
