"""Temporal-reasoning family: event anticipation, persistence, occlusion,
counterfactual motion, and multi-object action/interaction recognition.

All tasks here need track ids; sources without them raise a typed
no-candidates error and are skipped by the runner.
"""

from __future__ import annotations

import math

import numpy as np

from ..calibration import project_to_camera
from ..graph import ACTION_LABELS, INTERACTION_LABELS
from .context import (
    GenerationContext,
    SceneContext,
    display_id,
    first_frame_ids,
    pick,
    tracked_visible,
    visible_nodes,
)
from .items import NoEligibleCandidates, QAItem, shuffle_with_answer
from .templates import (
    ABILITIES,
    ACTION_DISPLAY,
    ACTION_EVENT_TEXT,
    INTERACTION_DEFINITION,
    INTERACTION_DISPLAY,
    TEMPLATES,
    expand_video_prompt,
)

MANIPULATION_SPEEDS_KMH = (5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
MANIPULATION_ROTATIONS = (-90, -45, 0, 45, 90, 180)
NEARBY_RADIUS = 30.0


def _item(task_id: str, question: str, **kw) -> QAItem:
    return QAItem(task_id=task_id, ability=ABILITIES[task_id], question=question, **kw)


def _require_tracks(sc: SceneContext):
    if sc.graph.temporal_disabled:
        raise NoEligibleCandidates("track_ids", "source provides no track ids")


def _annotated_first_frame(sc: SceneContext):
    return [
        (n.object_index, f"#{display_id(n)}")
        for n in visible_nodes(sc.graph, 0)
    ]


# --- event ordering -----------------------------------------------------------

def _future_events(sc: SceneContext, cfg) -> tuple[int, list[tuple[float, int, str, int]]]:
    """(context_end, [(ego_distance, t, text, first_frame_id)]) deduplicated."""
    ids = first_frame_ids(sc.graph)
    context_end = sc.n_frames // 2 - 1
    t_limit = sc.scene.frames[context_end].timestamp + cfg.event_horizon

    visible_tracks = set()
    for t in range(context_end + 1):
        for n in tracked_visible(sc.graph, t):
            visible_tracks.add(n.track_id)
    eligible = {tr for tr in visible_tracks if tr in ids}

    seen: dict[str, tuple[float, int, str, int]] = {}
    for kind in ("action", "interaction"):
        for e in sc.graph.edges[kind]:
            t = e.src[0]
            if t <= context_end or sc.scene.frames[t].timestamp > t_limit:
                continue
            src = sc.graph.nodes[e.src]
            if src.track_id not in eligible:
                continue
            src_id = ids[src.track_id]
            if kind == "action":
                text = f"Object-{src_id} {ACTION_EVENT_TEXT[e.label]}"
            else:
                dst = sc.graph.nodes[e.dst]
                if dst.track_id not in ids:
                    continue
                text = f"Object-{src_id} is {INTERACTION_DISPLAY[e.label]} Object-{ids[dst.track_id]}"
            if text not in seen or t < seen[text][1]:
                seen[text] = (float(np.linalg.norm(src.center)), t, text, src_id)
    return context_end, sorted(seen.values(), key=lambda r: (r[0], r[1], r[2]))


def _format_sequence(events: list[tuple[float, int, str, int]]) -> str:
    ordered = sorted(events, key=lambda r: (r[1], r[3], r[2]))
    return " → ".join(text for _, _, text, _ in ordered)


def gen_event_ordering(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    _require_tracks(sc)
    context_end, events = _future_events(sc, ctx.cfg)
    if not events:
        raise NoEligibleCandidates("future_events")
    salient = events[:3]
    correct = _format_sequence(salient)

    ids = sorted({i for _, _, _, i in events} | set(first_frame_ids(sc.graph).values()))
    distractors: list[str] = []
    guard = 0
    while len(distractors) < 3 and guard < 200:
        guard += 1
        mode = int(rng.integers(0, 3))
        mutated = list(salient)
        k = int(rng.integers(0, len(mutated)))
        dist, t, text, src_id = mutated[k]
        if mode == 0 and len(mutated) >= 2:  # swap order of two events
            j = (k + 1) % len(mutated)
            mutated[k] = (dist, mutated[j][1], text, src_id)
            mutated[j] = (mutated[j][0], t, mutated[j][2], mutated[j][3])
        elif mode == 1:  # replace the verb with another taxonomy label
            if " is " in text:
                label = pick(rng, [l for l in INTERACTION_LABELS])
                head, _, tail = text.partition(" is ")
                target = tail.split("Object-")[-1]
                text = f"{head} is {INTERACTION_DISPLAY[label]} Object-{target}"
            else:
                label = pick(rng, [l for l in ACTION_LABELS])
                text = f"Object-{src_id} {ACTION_EVENT_TEXT[label]}"
            mutated[k] = (dist, t, text, src_id)
        else:  # replace the subject id
            other = pick(rng, ids)
            text = text.replace(f"Object-{src_id}", f"Object-{other}", 1)
            mutated[k] = (dist, t, text, other)
        candidate = _format_sequence(mutated)
        if candidate != correct and candidate not in distractors:
            distractors.append(candidate)
    if len(distractors) < 3:
        raise NoEligibleCandidates("event_distractors")

    frames = range(0, context_end + 1)
    refs = ctx.video_assets(sc, frames, highlight_first=_annotated_first_frame(sc), kind="events")
    question = TEMPLATES["event_ordering"]
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)
    return _item(
        "event_ordering",
        question,
        item_id="",
        prompt=expand_video_prompt(question, len(refs)),
        asset_refs=refs,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(0, context_end),
        constraint_certificate={
            "context_end": context_end,
            "horizon_s": ctx.cfg.event_horizon,
            "events": [[t, text] for _, t, text, _ in sorted(salient, key=lambda r: (r[1], r[3], r[2]))],
        },
        rng_seed=seed,
        context=INTERACTION_DEFINITION,
    )


# --- disappearance / occlusion -------------------------------------------------

def _in_any_frustum(sc: SceneContext, t: int, center) -> bool:
    frame = sc.scene.frames[t]
    return any(project_to_camera(center, cam) is not None for cam in frame.cameras)


def _final_state(sc: SceneContext, track_id: str, theta_v: float) -> str | None:
    """'passed by' | 'occluded' | None (still plainly visible)."""
    final = sc.n_frames - 1
    i = sc.scene.frame_of_track(track_id, final)
    if i is None:
        return "passed by"
    obj = sc.scene.frames[final].objects[i]
    if not _in_any_frustum(sc, final, obj.center):
        return "passed by"
    max_vis = max((p.visibility for p in obj.projections), default=0.0)
    if max_vis < theta_v:
        return "occluded"
    return None


def gen_trajectory_reasoning(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    _require_tracks(sc)
    theta_v = ctx.cfg.visibility_threshold
    ids = first_frame_ids(sc.graph)
    gone = []
    for n in tracked_visible(sc.graph, 0):
        state = _final_state(sc, n.track_id, theta_v)
        if state is not None:
            gone.append((n, state))
    if not gone:
        raise NoEligibleCandidates("disappeared_tracks")
    node, reason = gone[int(rng.integers(0, len(gone)))]
    obj_id = ids[node.track_id]
    correct = f"Object-{obj_id}: {reason}"

    opposite = "occluded" if reason == "passed by" else "passed by"
    candidates = [f"Object-{obj_id}: {opposite}"]
    still_visible = [
        ids[n.track_id]
        for n in tracked_visible(sc.graph, 0)
        if n.track_id != node.track_id and _final_state(sc, n.track_id, theta_v) is None
    ]
    for vid in sorted(still_visible):
        candidates.append(f"Object-{vid}: passed by")
        candidates.append(f"Object-{vid}: occluded")
    fake = max(ids.values(), default=0) + 1
    while len([c for c in candidates if c != correct]) < 3:
        candidates.append(f"Object-{fake}: passed by")
        fake += 1
    unique = [c for c in dict.fromkeys(candidates) if c != correct]
    distractors = [unique[int(k)] for k in rng.choice(len(unique), size=3, replace=False)]

    frames = range(0, sc.n_frames)
    refs = ctx.video_assets(sc, frames, highlight_first=_annotated_first_frame(sc), kind="traj")
    question = TEMPLATES["trajectory_reasoning"]
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)
    return _item(
        "trajectory_reasoning",
        question,
        item_id="",
        prompt=expand_video_prompt(question, len(refs)),
        asset_refs=refs,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(0, sc.n_frames - 1),
        constraint_certificate={
            "track_id": node.track_id,
            "object_id": obj_id,
            "reason": reason,
            "visibility_threshold": theta_v,
        },
        rng_seed=seed,
    )


def gen_occlusion_awareness(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    _require_tracks(sc)
    theta_v = ctx.cfg.visibility_threshold
    ids = first_frame_ids(sc.graph)
    occluded, fully_visible = [], []
    for n in tracked_visible(sc.graph, 0):
        state = _final_state(sc, n.track_id, theta_v)
        if state == "occluded":
            occluded.append(ids[n.track_id])
        elif state is None:
            fully_visible.append(ids[n.track_id])
    occluded = sorted(occluded)[: ctx.cfg.max_listed]
    correct = "None" if not occluded else ", ".join(f"Object-{i}" for i in occluded)

    candidates: list[str] = []
    if occluded:
        candidates.append("None")
    pool = sorted(fully_visible)
    for vid in pool:
        candidates.append(f"Object-{vid}")
    for a, b in zip(pool, pool[1:]):
        candidates.append(f"Object-{a}, Object-{b}")
    if occluded and fully_visible:
        candidates.append(
            ", ".join(f"Object-{i}" for i in sorted(occluded[:1] + pool[:1]))
        )
    fake = max(ids.values(), default=0) + 1
    while len([c for c in dict.fromkeys(candidates) if c != correct]) < 3:
        candidates.append(f"Object-{fake}")
        fake += 1
    unique = [c for c in dict.fromkeys(candidates) if c != correct]
    distractors = [unique[int(k)] for k in rng.choice(len(unique), size=3, replace=False)]

    frames = range(0, sc.n_frames)
    refs = ctx.video_assets(sc, frames, highlight_first=_annotated_first_frame(sc), kind="occl")
    question = TEMPLATES["occlusion_awareness"]
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)
    return _item(
        "occlusion_awareness",
        question,
        item_id="",
        prompt=expand_video_prompt(question, len(refs)),
        asset_refs=refs,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(0, sc.n_frames - 1),
        constraint_certificate={
            "occluded_ids": occluded,
            "visibility_threshold": theta_v,
        },
        rng_seed=seed,
    )


# --- counterfactual motion ------------------------------------------------------

def simulate_displacement(velocity, speed_kmh: float, rotation_deg: float, dt: float):
    """Unit velocity direction rotated in the plane, scaled to the new speed."""
    v = np.asarray(velocity, float)
    planar = np.array([v[0], v[1]])
    norm = float(np.linalg.norm(planar))
    direction = planar / norm
    angle = math.radians(rotation_deg)
    c, s = math.cos(angle), math.sin(angle)
    rotated = np.array([c * direction[0] - s * direction[1], s * direction[0] + c * direction[1]])
    step = rotated * (speed_kmh / 3.6) * dt
    return np.array([step[0], step[1], 0.0])


def classify_manipulation_outcome(sc: SceneContext, t_sim: int, node, c_sim, ids) -> str:
    frame = sc.scene.frames[t_sim]
    cams_before = set(node.cameras)
    cams_after = {
        cam.camera_name
        for cam in frame.cameras
        if project_to_camera(c_sim, cam) is not None
    }
    if not cams_after:
        return "Disappears from all cameras"
    if cams_before != cams_after:
        exited = sorted(cams_before - cams_after)
        entered = sorted(cams_after - cams_before)
        if exited and entered:
            return f"Disappear from {exited[0]} then appear in {entered[0]}"
        if entered:
            return f"Appear in {entered[0]}"
        return f"Moving in {sorted(cams_after)[0]}"
    t_next = min(t_sim + 1, sc.n_frames - 1)
    best = None
    for other in visible_nodes(sc.graph, t_next):
        if other.track_id == node.track_id or other.track_id not in ids:
            continue
        d = float(np.linalg.norm(other.center - c_sim))
        if d < NEARBY_RADIUS and (best is None or d < best[0]):
            best = (d, other)
    if best is not None:
        side = "left" if c_sim[1] > best[1].center[1] else "right"
        return f"Moving on the {side} side of Object-{ids[best[1].track_id]}"
    return f"Moving in {sorted(cams_after)[0]}"


def gen_object_manipulation(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    _require_tracks(sc)
    if sc.n_frames < 2:
        raise NoEligibleCandidates("clip_length")
    t_sim = sc.n_frames - 2
    ids = first_frame_ids(sc.graph)
    eps_v = sc.graph.thresholds.eps_v
    moving = [
        n
        for n in tracked_visible(sc.graph, t_sim)
        if n.velocity_known and n.speed > eps_v and n.track_id in ids
    ]
    if not moving:
        raise NoEligibleCandidates("moving_tracked_object")
    node = moving[int(rng.integers(0, len(moving)))]
    speed = int(pick(rng, list(MANIPULATION_SPEEDS_KMH)))
    rotation = int(pick(rng, list(MANIPULATION_ROTATIONS)))
    c_sim = node.center + simulate_displacement(node.velocity, speed, rotation, ctx.cfg.manipulation_dt)
    correct = classify_manipulation_outcome(sc, t_sim, node, c_sim, ids)

    cameras = sorted(sc.scene.camera_names)
    candidates = ["Disappears from all cameras"]
    for cam in cameras[:3]:
        candidates.append(f"Appear in {cam}")
        candidates.append(f"Moving in {cam}")
    if "side of" in correct:
        flipped = correct.replace("left", "£").replace("right", "left").replace("£", "right")
        candidates.insert(0, flipped)
    unique = [c for c in dict.fromkeys(candidates) if c != correct]
    distractors = [unique[int(k)] for k in rng.choice(len(unique), size=3, replace=False)]

    obj_id = ids[node.track_id]
    frames = range(0, t_sim + 1)
    refs = ctx.video_assets(sc, frames, highlight_first=_annotated_first_frame(sc), kind="manip")
    question = TEMPLATES["object_manipulation"].format(
        target=f"Object-{obj_id}", degrees=rotation, speed=speed
    )
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)
    return _item(
        "object_manipulation",
        question,
        item_id="",
        prompt=expand_video_prompt(question, len(refs)),
        asset_refs=refs,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(0, t_sim),
        constraint_certificate={
            "track_id": node.track_id,
            "object_id": obj_id,
            "sim_frame": t_sim,
            "speed_kmh": speed,
            "rotation_deg": rotation,
            "c_sim": [float(v) for v in c_sim],
            "cameras_before": sorted(node.cameras),
        },
        rng_seed=seed,
        context="",
    )


# --- action / interaction recognition -------------------------------------------

def dominant_actions(sc: SceneContext) -> dict[str, str]:
    """track_id -> most frequent action label over the clip (fixed-order ties)."""
    counts: dict[str, dict[str, int]] = {}
    for e in sc.graph.edges["action"]:
        node = sc.graph.nodes[e.src]
        if node.track_id is None:
            continue
        counts.setdefault(node.track_id, {}).setdefault(e.label, 0)
        counts[node.track_id][e.label] += 1
    out = {}
    for track, by_label in counts.items():
        best = max(by_label.items(), key=lambda kv: (kv[1], -ACTION_LABELS.index(kv[0])))
        out[track] = best[0]
    return out


def gen_action_reasoning(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    _require_tracks(sc)
    ids = first_frame_ids(sc.graph)
    dominant = dominant_actions(sc)
    nodes0 = {n.track_id: n for n in tracked_visible(sc.graph, 0)}
    candidates = [tr for tr in sorted(dominant) if tr in ids and tr in nodes0]
    if len(candidates) < 3:
        raise NoEligibleCandidates("three_tracked_objects", f"{len(candidates)} < 3")

    order = [candidates[int(k)] for k in rng.permutation(len(candidates))]
    chosen = [order[0]]
    for tr in order[1:]:
        if len(chosen) == 3:
            break
        if all(not (nodes0[tr].cameras & nodes0[c].cameras) for c in chosen):
            chosen.append(tr)
    for tr in order:
        if len(chosen) == 3:
            break
        if tr not in chosen:
            chosen.append(tr)
    chosen.sort(key=lambda tr: ids[tr])

    actions = [dominant[tr] for tr in chosen]
    correct = ", ".join(
        f"Object-{k + 1}: {ACTION_DISPLAY[a]}" for k, a in enumerate(actions)
    )

    distractors: list[str] = []
    guard = 0
    while len(distractors) < 3 and guard < 100:
        guard += 1
        mutated = list(actions)
        if rng.random() < 0.5:
            mutated = [mutated[-1]] + mutated[:-1]  # rotate assignments
        else:
            k = int(rng.integers(0, 3))
            mutated[k] = pick(rng, [a for a in ACTION_LABELS if a != mutated[k]])
        candidate = ", ".join(
            f"Object-{k + 1}: {ACTION_DISPLAY[a]}" for k, a in enumerate(mutated)
        )
        if candidate != correct and candidate not in distractors:
            distractors.append(candidate)
    if len(distractors) < 3:
        raise NoEligibleCandidates("action_distractors")

    highlight = [
        (nodes0[tr].object_index, f"({k + 1})") for k, tr in enumerate(chosen)
    ]
    frames = range(0, sc.n_frames)
    refs = ctx.video_assets(sc, frames, highlight_first=highlight, kind="actions")
    question = TEMPLATES["action_reasoning"]
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)
    return _item(
        "action_reasoning",
        question,
        item_id="",
        prompt=expand_video_prompt(question, len(refs)),
        asset_refs=refs,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(0, sc.n_frames - 1),
        constraint_certificate={
            "tracks": chosen,
            "actions": actions,
            "camera_sets": [sorted(nodes0[tr].cameras) for tr in chosen],
        },
        rng_seed=seed,
    )


def gen_interaction_reasoning(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    _require_tracks(sc)
    track_cams: dict[str, set[str]] = {}
    for t in range(sc.n_frames):
        for n in tracked_visible(sc.graph, t):
            track_cams.setdefault(n.track_id, set()).update(n.cameras)

    counts: dict[tuple[str, str, str], int] = {}
    for e in sc.graph.edges["interaction"]:
        src = sc.graph.nodes[e.src]
        dst = sc.graph.nodes[e.dst]
        if src.track_id is None or dst.track_id is None:
            continue
        key = (src.track_id, dst.track_id, e.label)
        counts[key] = counts.get(key, 0) + 1
    if not counts:
        raise NoEligibleCandidates("interaction_pairs")

    disjoint, same = {}, {}
    for key, n in counts.items():
        a, b, _ = key
        bucket = disjoint if not (track_cams.get(a, set()) & track_cams.get(b, set())) else same
        bucket[key] = n
    prefer_disjoint = bool(rng.random() < ctx.cfg.p_diff_camera)
    pool = disjoint if (prefer_disjoint and disjoint) or not same else same
    # Highest count wins; ties break to the lexicographically smallest triple.
    track_a, track_b, label = sorted(pool, key=lambda key: (-pool[key], key))[0]
    count = pool[(track_a, track_b, label)]

    nodes0 = {n.track_id: n for n in tracked_visible(sc.graph, 0)}
    ids = first_frame_ids(sc.graph)
    if track_a not in nodes0 or track_b not in nodes0:
        raise NoEligibleCandidates("pair_not_annotated_first_frame")

    correct = f"Object-1 is {INTERACTION_DISPLAY[label]} Object-2"
    others = [l for l in INTERACTION_LABELS if l != label]
    distractors = [
        f"Object-1 is {INTERACTION_DISPLAY[others[int(k)]]} Object-2"
        for k in rng.choice(len(others), size=3, replace=False)
    ]

    highlight = [(nodes0[track_a].object_index, "(1)"), (nodes0[track_b].object_index, "(2)")]
    frames = range(0, sc.n_frames)
    refs = ctx.video_assets(sc, frames, highlight_first=highlight, kind="inter")
    question = TEMPLATES["interaction_reasoning"].format(first="Object-1", second="Object-2")
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)
    return _item(
        "interaction_reasoning",
        question,
        item_id="",
        prompt=expand_video_prompt(question, len(refs)),
        asset_refs=refs,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(0, sc.n_frames - 1),
        constraint_certificate={
            "track_a": track_a,
            "track_b": track_b,
            "label": label,
            "count": count,
            "cameras_a": sorted(track_cams.get(track_a, set())),
            "cameras_b": sorted(track_cams.get(track_b, set())),
            "partition": "disjoint" if (track_a, track_b, label) in disjoint else "same",
        },
        rng_seed=seed,
        context=INTERACTION_DEFINITION,
    )
