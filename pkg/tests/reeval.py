"""Item re-evaluation oracle: recomputes every answer from the scene and
graph, verifies cross-view certificates from stored projections (never from
generator state), and demands exactly one satisfying option per MCA item."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from drivegraph.graph import ACTION_LABELS, EGO_INDEX, INTERACTION_LABELS, SceneGraph
from drivegraph.qa.construction import all_rotation_bins, rotation_bin
from drivegraph.qa.items import QAItem
from drivegraph.qa.templates import (
    ACTION_DISPLAY,
    ACTION_EVENT_TEXT,
    CARDINAL_RELATIONS,
    CATEGORY_DISPLAY,
    INTERACTION_DEFINITION,
    INTERACTION_DISPLAY,
    RELATION_INLINE,
    RELATION_PHRASES,
    TASKS_WITH_INTERACTION_DEFINITION,
    count_phrase,
    rotate_relation,
)
from drivegraph.schema import CATEGORIES, Scene
from oracles import frustum_contains, relation_oracle

VIEW_VIS = 0.1  # must match ThresholdSet.visibility_view
THETA_V = 0.6


def projection_cameras(scene: Scene, t: int, index: int) -> set[str]:
    """Camera set straight from stored projections."""
    return scene.frames[t].objects[index].cameras(VIEW_VIS)


def _object(scene: Scene, t: int, index: int):
    return scene.frames[t].objects[index]


def _relation_from_scene(scene: Scene, t: int, src_index: int, dst_index: int) -> str | None:
    src = _object(scene, t, src_index)
    dst = _object(scene, t, dst_index)
    return relation_oracle(src.center[:2], src.yaw, src.size, dst.center[:2], 1.0)


def _ego_relation(scene: Scene, graph: SceneGraph, t: int, dst_index: int) -> str | None:
    ego = graph.nodes[(t, EGO_INDEX)]
    dst = _object(scene, t, dst_index)
    return relation_oracle(ego.center[:2], ego.yaw, ego.size, dst.center[:2], 1.0)


def _in_frustum(scene: Scene, t: int, center) -> bool:
    for cam in scene.frames[t].cameras:
        ego_from_camera = (
            cam.extrinsic.matrix
            if cam.frame_convention == "ego_from_camera"
            else np.linalg.inv(cam.extrinsic.matrix)
        )
        k = cam.intrinsics
        if frustum_contains(
            center, ego_from_camera, k[0, 0], k[1, 1], k[0, 2], k[1, 2], *cam.image_size
        ):
            return True
    return False


def _final_state(scene: Scene, track_id: str, theta_v: float = THETA_V) -> str | None:
    final = len(scene.frames) - 1
    idx = scene.frame_of_track(track_id, final)
    if idx is None:
        return "passed by"
    obj = scene.frames[final].objects[idx]
    if not _in_frustum(scene, final, obj.center):
        return "passed by"
    if max((p.visibility for p in obj.projections), default=0.0) < theta_v:
        return "occluded"
    return None


def _first_frame_ids(scene: Scene) -> dict[str, int]:
    out = {}
    for i, obj in enumerate(scene.frames[0].objects):
        if obj.track_id is not None and obj.cameras(VIEW_VIS):
            out[obj.track_id] = i + 1
    return out


def _base_checks(item: QAItem) -> list[str]:
    problems = []
    if item.answer_type == "option":
        if len(set(item.options)) != len(item.options):
            problems.append("duplicate options")
        if not 0 <= int(item.answer) < len(item.options):
            problems.append("answer index out of range")
        binary = item.task_id in ("spatial_compatibility", "multiview_matching", "depth_awareness")
        expected_k = 2 if binary else 4
        if len(item.options) != expected_k:
            problems.append(f"expected {expected_k} options, got {len(item.options)}")
    if item.task_id in TASKS_WITH_INTERACTION_DEFINITION:
        if item.context != INTERACTION_DEFINITION:
            problems.append("interaction definition prompt missing")
    return problems


def reevaluate(item: QAItem, scene: Scene, graph: SceneGraph, pool_meta: dict[str, tuple]) -> list[str]:
    """Empty list when the item withstands independent recomputation."""
    problems = _base_checks(item)
    cert = item.constraint_certificate
    t = item.frame_span[0]
    handler = _HANDLERS[item.task_id]
    problems.extend(handler(item, scene, graph, cert, pool_meta))
    return problems


# --- per-task handlers ---------------------------------------------------------

def _check_scene_construction(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    correct = item.options[int(item.answer)]
    if not correct.startswith(f"{scene.scene_id}/{t}/bev"):
        problems.append(f"correct option {correct!r} is not this scene's map")
    own_key = pool_meta[scene.scene_id]
    for k, opt in enumerate(item.options):
        sid = opt.split("/")[0]
        if k == int(item.answer):
            continue
        if sid == scene.scene_id:
            problems.append("distractor drawn from the answer scene")
        elif pool_meta[sid] != own_key:
            problems.append(f"distractor {sid} mismatches (source, scene_type)")
    if set(cert["pool_scene_ids"]) != {o.split("/")[0] for o in item.options} - {scene.scene_id}:
        problems.append("pool certificate does not match options")
    return problems


def _check_perspective_camera_match(item, scene, graph, cert, pool_meta):
    problems = []
    correct = item.options[int(item.answer)]
    if not correct.startswith(f"{scene.scene_id}/"):
        problems.append("correct option is not this scene's front view")
    own_key = pool_meta[scene.scene_id]
    for k, opt in enumerate(item.options):
        sid = opt.split("/")[0]
        if k != int(item.answer) and sid == scene.scene_id:
            problems.append("distractor from the answer scene")
        if k != int(item.answer) and pool_meta[sid] != own_key:
            problems.append("distractor pool key mismatch")
    return problems


def _check_ego_rotation(item, scene, graph, cert, pool_meta):
    problems = []
    t1, t2 = item.frame_span
    r1 = scene.frames[t1].ego_pose.rotation
    r2 = scene.frames[t2].ego_pose.rotation
    rel = r2 @ r1.T
    theta = abs(math.atan2(rel[1, 0], rel[0, 0])) * 180.0 / math.pi
    if abs(theta - cert["theta_deg"]) > 1e-9:
        problems.append("certificate angle mismatch")
    expected = rotation_bin(theta)
    if item.options[int(item.answer)] != expected:
        problems.append(f"answer bin {item.options[int(item.answer)]!r} != {expected!r}")
    for k, opt in enumerate(item.options):
        if k != int(item.answer):
            if opt == expected or opt not in all_rotation_bins():
                problems.append("distractor bin invalid")
    return problems


def _check_camera_ordering(item, scene, graph, cert, pool_meta):
    from drivegraph.rendering import camera_order

    problems = []
    letter_map = cert["letter_map"]
    canonical = [c for c in camera_order(scene.metadata.source) if c in scene.camera_names]
    decoded = [letter_map[letter] for letter in item.options[int(item.answer)].split(" → ")]
    if decoded != canonical:
        problems.append("answer sequence does not decode to the canonical clockwise order")
    for k, opt in enumerate(item.options):
        if k != int(item.answer):
            seq = [letter_map[letter] for letter in opt.split(" → ")]
            if seq == canonical:
                problems.append("distractor also decodes correctly")
    return problems


def _check_leave_one_camera_out(item, scene, graph, cert, pool_meta):
    problems = []
    final = cert["final_frame"]
    masked = cert["masked_camera"]
    counts: dict[str, int] = {}
    for obj in scene.frames[final].objects:
        if masked in obj.cameras(VIEW_VIS):
            counts[obj.category] = counts.get(obj.category, 0) + 1
    expected = count_phrase(counts)
    if item.options[int(item.answer)] != expected:
        problems.append(f"count string {item.options[int(item.answer)]!r} != {expected!r}")
    for k, opt in enumerate(item.options):
        if k != int(item.answer) and opt == expected:
            problems.append("distractor equals the true count")
    from drivegraph.rendering import front_camera

    if masked == front_camera(scene.metadata.source):
        problems.append("front camera masked")
    return problems


def _check_multi_step(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    target_idx = cert["target_index"]
    answer_idx = cert["answer_index"]
    relation = cert["relation"]

    cams_t = projection_cameras(scene, t, target_idx)
    cams_a = projection_cameras(scene, t, answer_idx)
    if cams_t & cams_a:
        problems.append("target and answer share a camera")
    if sorted(cams_t) != cert["cameras_target"] or sorted(cams_a) != cert["cameras_answer"]:
        problems.append("camera certificate mismatch with projections")

    if _relation_from_scene(scene, t, target_idx, answer_idx) != relation:
        problems.append("stored relation fails recomputation")
    if rotate_relation(relation, cert["rotation_deg"]) != cert["transformed_relation"]:
        problems.append("rotation bookkeeping broken")
    if RELATION_INLINE[cert["transformed_relation"]] not in item.question:
        problems.append("question does not name the transformed relation")

    satisfying = 0
    for k, opt in enumerate(item.options):
        idx = int(opt.split("-")[1]) - 1
        holds = _relation_from_scene(scene, t, target_idx, idx) == relation
        if holds:
            satisfying += 1
            if k != int(item.answer):
                problems.append(f"distractor {opt} satisfies the relation")
    if satisfying != 1:
        problems.append(f"{satisfying} options satisfy the predicate")
    return problems


def _check_allocentric(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    ref_idx, tgt_idx = cert["reference_index"], cert["target_index"]
    cams_r = projection_cameras(scene, t, ref_idx)
    cams_t = projection_cameras(scene, t, tgt_idx)
    if cams_r & cams_t:
        problems.append("pair shares a camera")
    relation = _relation_from_scene(scene, t, ref_idx, tgt_idx)
    if relation != cert["relation"] or relation not in CARDINAL_RELATIONS:
        problems.append("relation recomputation mismatch")
    expected = RELATION_PHRASES[relation]
    if item.options[int(item.answer)] != expected:
        problems.append("answer phrase mismatch")
    if sorted(item.options) != sorted(RELATION_PHRASES[r] for r in CARDINAL_RELATIONS):
        problems.append("options are not the four cardinal phrases")
    return problems


def _check_spatial_compatibility(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    a, b = cert["first_index"], cert["second_index"]
    d = float(np.linalg.norm(_object(scene, t, a).center - _object(scene, t, b).center))
    if abs(d - cert["distance_m"]) > 1e-9:
        problems.append("distance certificate mismatch")
    if d >= 8.0:
        problems.append("pair beyond the 8 m eligibility radius")
    if projection_cameras(scene, t, a) & projection_cameras(scene, t, b):
        problems.append("pair shares a camera")
    expected = 0 if d > 5.0 else 1
    if int(item.answer) != expected:
        problems.append("passability answer wrong")
    return problems


def _check_multiview_matching(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    if cert["kind"] == "identity_multiview":
        cams = projection_cameras(scene, t, cert["object_index"])
        if len(cams) < 2:
            problems.append("identity certificate without two views")
        if not {cert["view_1"], cert["view_2"]} <= cams:
            problems.append("labeled views not in the projection set")
        if _object(scene, t, cert["object_index"]).track_id != cert["track_id"]:
            problems.append("track mismatch")
        if item.options[int(item.answer)] != "Yes":
            problems.append("identity item must answer Yes")
    else:
        cams_a = projection_cameras(scene, t, cert["index_a"])
        cams_b = projection_cameras(scene, t, cert["index_b"])
        if cams_a & cams_b:
            problems.append("pairwise certificate with shared camera")
        ta = _object(scene, t, cert["index_a"]).track_id
        tb = _object(scene, t, cert["index_b"]).track_id
        if ta is None or tb is None or ta == tb:
            problems.append("pairwise certificate without distinct tracks")
        if item.options[int(item.answer)] != "No":
            problems.append("pairwise item must answer No")
    return problems


def _check_depth_awareness(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    a, b = cert["first_index"], cert["second_index"]
    r1 = float(np.linalg.norm(_object(scene, t, a).center))
    r2 = float(np.linalg.norm(_object(scene, t, b).center))
    if abs(r1 - r2) <= 2.0:
        problems.append("range margin violated")
    if projection_cameras(scene, t, a) & projection_cameras(scene, t, b):
        problems.append("pair shares a camera")
    expected = 0 if r1 < r2 else 1
    if int(item.answer) != expected:
        problems.append("nearer-than answer wrong")
    return problems


def _check_relative_direction(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    relation = _ego_relation(scene, graph, t, cert["target_index"])
    if relation != cert["relation"]:
        problems.append("ego relation recomputation mismatch")
    if item.options[int(item.answer)] != RELATION_PHRASES[relation]:
        problems.append("phrase mismatch")
    phrase_set = set(RELATION_PHRASES.values())
    for k, opt in enumerate(item.options):
        if opt not in phrase_set:
            problems.append("option outside the phrase vocabulary")
        if k != int(item.answer) and opt == RELATION_PHRASES[relation]:
            problems.append("duplicate correct phrase")
    return problems


def _check_relative_distance(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    a, b = cert["first_index"], cert["second_index"]
    d = float(np.linalg.norm(_object(scene, t, a).center - _object(scene, t, b).center))
    if not 5.0 < d < 50.0:
        problems.append("distance outside (5, 50)")
    if projection_cameras(scene, t, a) & projection_cameras(scene, t, b):
        problems.append("pair shares a camera")
    size = 1 if d < 10 else 2 if d < 20 else 5
    low = int(d // size) * size
    expected = f"{low}-{low + size} meters"
    if item.options[int(item.answer)] != expected:
        problems.append(f"bin {item.options[int(item.answer)]!r} != {expected!r}")
    starts = [int(o.split("-")[0]) for o in item.options]
    if starts != sorted(starts):
        problems.append("options not sorted")
    contained = [o for o in item.options if int(o.split("-")[0]) <= d < int(o.split("-")[0]) + size]
    if len(contained) != 1:
        problems.append("true distance not in exactly one option bin")
    return problems


def _check_distance_absolute(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    a, b = cert["first_index"], cert["second_index"]
    d = float(np.linalg.norm(_object(scene, t, a).center - _object(scene, t, b).center))
    if abs(round(d, 1) - float(item.answer)) > 1e-9:
        problems.append("numeric distance mismatch")
    if item.answer <= 0:
        problems.append("distance must be positive")
    if cert.get("metric") != "distance":
        problems.append("missing RMSE metric tag")
    if projection_cameras(scene, t, a) & projection_cameras(scene, t, b):
        problems.append("pair shares a camera")
    return problems


def _check_counting_absolute(item, scene, graph, cert, pool_meta):
    problems = []
    t = item.frame_span[0]
    category = cert["category"]
    count = sum(
        1 for obj in scene.frames[t].objects if obj.category == category and obj.cameras(VIEW_VIS)
    )
    if count != int(item.answer):
        problems.append(f"recount {count} != answer {item.answer}")
    if CATEGORY_DISPLAY[category] not in item.question:
        problems.append("question does not name the category")
    if cert.get("metric") != "counting":
        problems.append("missing RMSE metric tag")
    return problems


def _check_event_ordering(item, scene, graph, cert, pool_meta):
    problems = []
    ids = _first_frame_ids(scene)
    context_end = cert["context_end"]
    t_limit = scene.frames[context_end].timestamp + cert["horizon_s"]

    valid_events = set()
    for kind in ("action", "interaction"):
        for e in graph.edges[kind]:
            te = e.src[0]
            if te <= context_end or scene.frames[te].timestamp > t_limit:
                continue
            src = graph.nodes[e.src]
            if src.track_id not in ids:
                continue
            if kind == "action":
                valid_events.add((te, f"Object-{ids[src.track_id]} {ACTION_EVENT_TEXT[e.label]}"))
            else:
                dst = graph.nodes[e.dst]
                if dst.track_id in ids:
                    valid_events.add(
                        (
                            te,
                            f"Object-{ids[src.track_id]} is "
                            f"{INTERACTION_DISPLAY[e.label]} Object-{ids[dst.track_id]}",
                        )
                    )
    cert_events = [(t, text) for t, text in cert["events"]]
    for t_e, text in cert_events:
        if not any(text == v_text and t_e >= v_t for v_t, v_text in valid_events if v_text == text):
            problems.append(f"certificate event {text!r} not in the graph window")
    times = [t for t, _ in cert_events]
    if times != sorted(times):
        problems.append("certificate events not chronological")
    expected = " → ".join(text for _, text in cert_events)
    if item.options[int(item.answer)] != expected:
        problems.append("answer sequence mismatch")
    for k, opt in enumerate(item.options):
        if k != int(item.answer) and opt == expected:
            problems.append("distractor equals correct sequence")
    return problems


def _check_trajectory_reasoning(item, scene, graph, cert, pool_meta):
    problems = []
    ids = _first_frame_ids(scene)
    track = cert["track_id"]
    if track not in ids:
        problems.append("chosen track not annotated in the first frame")
        return problems
    state = _final_state(scene, track)
    if state is None:
        problems.append("chosen track is still visible")
    elif state != cert["reason"]:
        problems.append(f"reason {cert['reason']!r} != recomputed {state!r}")
    expected = f"Object-{ids[track]}: {cert['reason']}"
    if item.options[int(item.answer)] != expected:
        problems.append("answer string mismatch")
    for k, opt in enumerate(item.options):
        if k == int(item.answer):
            continue
        name, _, reason = opt.partition(": ")
        oid = int(name.split("-")[1])
        by_id = {v: tr for tr, v in ids.items()}
        if oid in by_id and _final_state(scene, by_id[oid]) == reason:
            problems.append(f"distractor {opt!r} is also true")
    return problems


def _check_occlusion_awareness(item, scene, graph, cert, pool_meta):
    problems = []
    ids = _first_frame_ids(scene)
    occluded = sorted(
        ids[tr] for tr in ids if _final_state(scene, tr) == "occluded"
    )[:3]
    if occluded != cert["occluded_ids"]:
        problems.append(f"occluded set {cert['occluded_ids']} != recomputed {occluded}")
    expected = "None" if not occluded else ", ".join(f"Object-{i}" for i in occluded)
    if item.options[int(item.answer)] != expected:
        problems.append("answer mismatch")
    for k, opt in enumerate(item.options):
        if k != int(item.answer) and opt == expected:
            problems.append("distractor equals answer")
    return problems


def _check_object_manipulation(item, scene, graph, cert, pool_meta):
    problems = []
    t_sim = cert["sim_frame"]
    idx = scene.frame_of_track(cert["track_id"], t_sim)
    if idx is None:
        problems.append("simulated track missing at sim frame")
        return problems
    node = graph.nodes[(t_sim, idx)]
    from drivegraph.qa.temporal import classify_manipulation_outcome, simulate_displacement

    ids = _first_frame_ids(scene)
    c_sim = node.center + simulate_displacement(
        node.velocity, cert["speed_kmh"], cert["rotation_deg"], 0.5
    )
    if np.linalg.norm(c_sim - np.asarray(cert["c_sim"])) > 1e-9:
        problems.append("simulated position mismatch")
    expected = classify_manipulation_outcome(
        _SC(scene, graph), t_sim, node, c_sim, ids
    )
    if item.options[int(item.answer)] != expected:
        problems.append(f"outcome {item.options[int(item.answer)]!r} != {expected!r}")
    for k, opt in enumerate(item.options):
        if k != int(item.answer) and opt == expected:
            problems.append("distractor equals outcome")
    if str(cert["rotation_deg"]) not in item.question or str(cert["speed_kmh"]) not in item.question:
        problems.append("question does not carry the sampled parameters")
    return problems


class _SC:
    """Minimal SceneContext stand-in for reusing the outcome classifier."""

    def __init__(self, scene, graph):
        self.scene = scene
        self.graph = graph
        self.n_frames = len(scene.frames)


def _check_action_reasoning(item, scene, graph, cert, pool_meta):
    problems = []
    counts: dict[str, Counter] = {}
    for e in graph.edges["action"]:
        node = graph.nodes[e.src]
        if node.track_id is not None:
            counts.setdefault(node.track_id, Counter())[e.label] += 1
    expected_parts = []
    for k, (track, action) in enumerate(zip(cert["tracks"], cert["actions"])):
        if track not in counts:
            problems.append(f"track {track} has no actions")
            continue
        by_label = counts[track]
        best = max(by_label.items(), key=lambda kv: (kv[1], -ACTION_LABELS.index(kv[0])))[0]
        if best != action:
            problems.append(f"dominant action of {track}: {best} != {action}")
        expected_parts.append(f"Object-{k + 1}: {ACTION_DISPLAY[action]}")
    expected = ", ".join(expected_parts)
    if item.options[int(item.answer)] != expected:
        problems.append("answer string mismatch")
    for k, opt in enumerate(item.options):
        if k != int(item.answer) and opt == expected:
            problems.append("distractor equals answer")
    return problems


def _check_interaction_reasoning(item, scene, graph, cert, pool_meta):
    problems = []
    counts: dict[tuple, int] = {}
    for e in graph.edges["interaction"]:
        src, dst = graph.nodes[e.src], graph.nodes[e.dst]
        if src.track_id and dst.track_id:
            key = (src.track_id, dst.track_id, e.label)
            counts[key] = counts.get(key, 0) + 1
    key = (cert["track_a"], cert["track_b"], cert["label"])
    if counts.get(key, 0) != cert["count"]:
        problems.append("count certificate mismatch")

    track_cams: dict[str, set] = {}
    for t in range(len(scene.frames)):
        for i, obj in enumerate(scene.frames[t].objects):
            if obj.track_id:
                track_cams.setdefault(obj.track_id, set()).update(obj.cameras(VIEW_VIS))
    disjoint = not (track_cams.get(cert["track_a"], set()) & track_cams.get(cert["track_b"], set()))
    if cert["partition"] != ("disjoint" if disjoint else "same"):
        problems.append("partition certificate mismatch")

    same_partition = {
        k: n
        for k, n in counts.items()
        if (not (track_cams.get(k[0], set()) & track_cams.get(k[1], set()))) == disjoint
    }
    if any(n > cert["count"] for n in same_partition.values()):
        problems.append("a more frequent triple exists in the stored partition")

    expected = f"Object-1 is {INTERACTION_DISPLAY[cert['label']]} Object-2"
    if item.options[int(item.answer)] != expected:
        problems.append("answer string mismatch")
    display_values = set(INTERACTION_DISPLAY.values())
    for k, opt in enumerate(item.options):
        verb = opt.removeprefix("Object-1 is ").removesuffix(" Object-2")
        if verb not in display_values:
            problems.append("distractor verb outside taxonomy")
        if k != int(item.answer) and opt == expected:
            problems.append("distractor equals answer")
    return problems


_HANDLERS = {
    "scene_construction": _check_scene_construction,
    "perspective_camera_match": _check_perspective_camera_match,
    "ego_rotation": _check_ego_rotation,
    "camera_ordering": _check_camera_ordering,
    "leave_one_camera_out": _check_leave_one_camera_out,
    "multi_step_reasoning": _check_multi_step,
    "allocentric_imagination": _check_allocentric,
    "spatial_compatibility": _check_spatial_compatibility,
    "multiview_matching": _check_multiview_matching,
    "depth_awareness": _check_depth_awareness,
    "relative_direction": _check_relative_direction,
    "relative_distance": _check_relative_distance,
    "distance_absolute": _check_distance_absolute,
    "counting_absolute": _check_counting_absolute,
    "event_ordering": _check_event_ordering,
    "trajectory_reasoning": _check_trajectory_reasoning,
    "occlusion_awareness": _check_occlusion_awareness,
    "object_manipulation": _check_object_manipulation,
    "action_reasoning": _check_action_reasoning,
    "interaction_reasoning": _check_interaction_reasoning,
}


def reevaluate_corpus(items, scenes_by_id, graphs_by_id) -> dict[str, list[str]]:
    """item_id -> problems, for every item that fails."""
    pool_meta = {
        sid: (s.metadata.source, s.metadata.scene_type) for sid, s in scenes_by_id.items()
    }
    failures = {}
    for item in items:
        problems = reevaluate(
            item, scenes_by_id[item.scene_id], graphs_by_id[item.scene_id], pool_meta
        )
        if problems:
            failures[item.item_id] = problems
    return failures
