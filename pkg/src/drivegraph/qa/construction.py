"""Scene-construction family: tasks probing whether a coherent top-down
picture of the rig and scene can be assembled from the camera views."""

from __future__ import annotations

import math

import numpy as np

from ..rendering import camera_order, front_camera
from .context import GenerationContext, SceneContext, pick
from .items import NoEligibleCandidates, QAItem, shuffle_with_answer
from .templates import ABILITIES, TEMPLATES, count_phrase, expand_video_prompt


def _item(task_id: str, question: str, **kw) -> QAItem:
    return QAItem(task_id=task_id, ability=ABILITIES[task_id], question=question, **kw)


def gen_scene_construction(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    scene = sc.scene
    matches = ctx.pool_matches(scene)
    if len(matches) < 3:
        raise NoEligibleCandidates("pool_same_source_scene_type", f"{len(matches)} < 3")
    distractor_ids = [matches[int(k)] for k in rng.choice(len(matches), size=3, replace=False)]

    frame = sc.keyframe
    grid_ref = ctx.multiview_asset(sc, frame, [], "stitched")
    correct_ref = ctx.bev_asset(sc, frame)
    option_refs = [correct_ref]
    for sid in distractor_ids:
        other = ctx.by_id[sid]
        option_refs.append(ctx.bev_asset(other, other.keyframe))

    options, answer = shuffle_with_answer(option_refs, 0, rng)
    return _item(
        "scene_construction",
        TEMPLATES["scene_construction"],
        item_id="",
        prompt=TEMPLATES["scene_construction"],
        asset_refs=[grid_ref] + options,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=scene.scene_id,
        frame_span=(frame, frame),
        constraint_certificate={
            "pool_scene_ids": distractor_ids,
            "source": scene.metadata.source,
            "scene_type": scene.metadata.scene_type,
        },
        rng_seed=seed,
    )


def gen_perspective_camera_match(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    scene = sc.scene
    matches = ctx.pool_matches(scene)
    if len(matches) < 3:
        raise NoEligibleCandidates("pool_same_source_scene_type", f"{len(matches)} < 3")
    distractor_ids = [matches[int(k)] for k in rng.choice(len(matches), size=3, replace=False)]

    frame = sc.keyframe
    bev_ref = ctx.bev_asset(sc, frame)
    front = front_camera(scene.metadata.source)
    correct_ref = ctx.camera_tile_asset(sc, frame, front)
    option_refs = [correct_ref]
    for sid in distractor_ids:
        other = ctx.by_id[sid]
        option_refs.append(
            ctx.camera_tile_asset(other, other.keyframe, front_camera(other.scene.metadata.source))
        )

    options, answer = shuffle_with_answer(option_refs, 0, rng)
    return _item(
        "perspective_camera_match",
        TEMPLATES["perspective_camera_match"],
        item_id="",
        prompt=TEMPLATES["perspective_camera_match"],
        asset_refs=[bev_ref] + options,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=scene.scene_id,
        frame_span=(frame, frame),
        constraint_certificate={"pool_scene_ids": distractor_ids, "front_camera": front},
        rng_seed=seed,
    )


ROTATION_BIN_EDGES = (0, 15, 30, 45, 60, 75, 90, 120, 150, 180)


def rotation_bin(theta_deg: float) -> str:
    edges = ROTATION_BIN_EDGES
    for lo, hi in zip(edges, edges[1:]):
        if lo <= theta_deg < hi:
            return f"{lo}-{hi} degrees"
    return f"{edges[-2]}-{edges[-1]} degrees"


def all_rotation_bins() -> list[str]:
    edges = ROTATION_BIN_EDGES
    return [f"{lo}-{hi} degrees" for lo, hi in zip(edges, edges[1:])]


def gen_ego_rotation(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    gap = ctx.cfg.frame_gap
    if gap >= sc.n_frames:
        raise NoEligibleCandidates("frame_gap", f"gap {gap} >= {sc.n_frames} frames")
    t1 = int(rng.integers(0, sc.n_frames - gap))
    t2 = t1 + gap
    r1 = sc.scene.frames[t1].ego_pose.rotation
    r2 = sc.scene.frames[t2].ego_pose.rotation
    rel = r2 @ r1.T
    theta_deg = abs(math.atan2(rel[1, 0], rel[0, 0])) * 180.0 / math.pi
    correct = rotation_bin(theta_deg)

    remaining = [b for b in all_rotation_bins() if b != correct]
    distractors = [remaining[int(k)] for k in rng.choice(len(remaining), size=3, replace=False)]
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)

    front = front_camera(sc.scene.metadata.source)
    refs = [ctx.camera_tile_asset(sc, t1, front), ctx.camera_tile_asset(sc, t2, front)]
    return _item(
        "ego_rotation",
        TEMPLATES["ego_rotation"],
        item_id="",
        prompt=TEMPLATES["ego_rotation"],
        asset_refs=refs,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(t1, t2),
        constraint_certificate={"t1": t1, "t2": t2, "theta_deg": theta_deg},
        rng_seed=seed,
    )


def gen_camera_ordering(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    canonical = [c for c in camera_order(sc.scene.metadata.source) if c in sc.scene.camera_names]
    n = len(canonical)
    perm = [int(k) for k in rng.permutation(n)]
    shuffled = [canonical[k] for k in perm]
    grid_ref = ctx.grid_asset(sc, sc.keyframe, shuffled, kind="letter_grid_" + "".join(map(str, perm)))

    letters = [chr(ord("A") + k) for k in range(n)]
    letter_of = {cam: letters[idx] for idx, cam in enumerate(shuffled)}
    correct = " → ".join(letter_of[cam] for cam in canonical)

    distractors: list[str] = []
    while len(distractors) < 3:
        candidate = " → ".join(letters[int(k)] for k in rng.permutation(n))
        if candidate != correct and candidate not in distractors:
            distractors.append(candidate)
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)
    return _item(
        "camera_ordering",
        TEMPLATES["camera_ordering"],
        item_id="",
        prompt=TEMPLATES["camera_ordering"],
        asset_refs=[grid_ref],
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(sc.keyframe, sc.keyframe),
        constraint_certificate={
            "letter_map": {letters[idx]: cam for idx, cam in enumerate(shuffled)},
            "canonical_order": canonical,
        },
        rng_seed=seed,
    )


def gen_leave_one_camera_out(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    n = ctx.cfg.sequence_length
    if n > sc.n_frames:
        raise NoEligibleCandidates("sequence_length", f"{n} > {sc.n_frames} frames")
    start = int(rng.integers(0, sc.n_frames - n + 1))
    final = start + n - 1
    front = front_camera(sc.scene.metadata.source)
    non_front = [c for c in sc.scene.camera_names if c != front]
    masked = pick(rng, sorted(non_front))

    threshold = sc.graph.thresholds.visibility_view
    counts_by_camera: dict[str, dict[str, int]] = {c: {} for c in sc.scene.camera_names}
    for obj in sc.scene.frames[final].objects:
        for cam_name in obj.cameras(threshold):
            bucket = counts_by_camera[cam_name]
            bucket[obj.category] = bucket.get(obj.category, 0) + 1
    correct = count_phrase(counts_by_camera[masked])

    candidates: list[str] = []
    for cam_name in sorted(counts_by_camera):
        if cam_name != masked:
            candidates.append(count_phrase(counts_by_camera[cam_name]))
    for category, n_cat in sorted(counts_by_camera[masked].items()):
        perturbed = dict(counts_by_camera[masked])
        perturbed[category] = n_cat + 1
        candidates.append(count_phrase(perturbed))
        reduced = dict(counts_by_camera[masked])
        reduced[category] = n_cat - 1
        candidates.append(count_phrase(reduced))
    k = 1
    while len({c for c in candidates if c != correct}) < 3:
        candidates.append(count_phrase({"vehicle.car": k}))
        k += 1
    unique = []
    for c in candidates:
        if c != correct and c not in unique:
            unique.append(c)
    distractors = [unique[int(i)] for i in rng.choice(len(unique), size=3, replace=False)]

    refs = ctx.masked_sequence_assets(sc, start, n, masked)
    question = TEMPLATES["leave_one_camera_out"]
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)
    return _item(
        "leave_one_camera_out",
        question,
        item_id="",
        prompt=expand_video_prompt(question, n),
        asset_refs=refs,
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(start, final),
        constraint_certificate={
            "masked_camera": masked,
            "final_frame": final,
            "counts": dict(sorted(counts_by_camera[masked].items())),
        },
        rng_seed=seed,
    )
