"""Relational-understanding family: cross-view identity, metric geometry, and
perspective-taking questions built from the relation graph.

Every pairwise task enforces the cross-view constraint (disjoint camera sets,
or two views of one track for identity questions) and records the camera
evidence in the item certificate.
"""

from __future__ import annotations

import numpy as np

from ..graph import EGO_INDEX, classify_relation
from ..schema import CATEGORIES
from .context import (
    GenerationContext,
    SceneContext,
    disjoint_camera_pairs,
    display_id,
    pick,
    tracked_visible,
    visible_nodes,
)
from .items import NoEligibleCandidates, QAItem, shuffle_with_answer
from .templates import (
    ABILITIES,
    CARDINAL_RELATIONS,
    CATEGORY_DISPLAY,
    INTERACTION_DEFINITION,
    RELATION_INLINE,
    RELATION_PHRASES,
    TEMPLATES,
    rotate_relation,
)

EGO_ACTIONS = {
    "decelerating": 0,
    "accelerating": 0,
    "moving forward": 0,
    "turning left": 90,
    "turning right": -90,
}
EGO_INTERACTIONS = {"following": 0, "approaching": 180}


def _item(task_id: str, question: str, **kw) -> QAItem:
    return QAItem(task_id=task_id, ability=ABILITIES[task_id], question=question, **kw)


def _cert_cameras(node) -> list[str]:
    return sorted(node.cameras)


def gen_multi_step_reasoning(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    t = sc.keyframe
    nodes = {n.object_index: n for n in visible_nodes(sc.graph, t)}
    candidates = []
    for e in sc.graph.edges["relation"]:
        if e.src[0] != t or e.src[1] == EGO_INDEX or e.dst[1] == EGO_INDEX:
            continue
        target = nodes.get(e.src[1])
        answer = nodes.get(e.dst[1])
        if target is None or answer is None:
            continue
        if target.cameras & answer.cameras:
            continue
        candidates.append((target, answer, e.label))
    if not candidates:
        raise NoEligibleCandidates("disjoint_camera_relation_pair")
    target, answer_node, relation = candidates[int(rng.integers(0, len(candidates)))]

    ego_action = pick(rng, sorted(EGO_ACTIONS))
    interaction = pick(rng, sorted(EGO_INTERACTIONS))
    rotation = (EGO_ACTIONS[ego_action] + EGO_INTERACTIONS[interaction]) % 360
    transformed = rotate_relation(relation, rotation)

    distractor_pool = [
        n
        for n in nodes.values()
        if n.object_index not in (target.object_index, answer_node.object_index)
        and classify_relation(target, n, sc.graph.thresholds) != relation
    ]
    if len(distractor_pool) < 3:
        raise NoEligibleCandidates("distractor_pool", "fewer than 3 non-conflicting objects")
    picks = [distractor_pool[int(k)] for k in rng.choice(len(distractor_pool), size=3, replace=False)]

    option_nodes = [answer_node] + picks
    options = [f"Object-{display_id(n)}" for n in option_nodes]
    options, answer = shuffle_with_answer(options, 0, rng)

    highlight = [(target.object_index, f"#{display_id(target)}")] + [
        (n.object_index, f"#{display_id(n)}") for n in option_nodes
    ]
    ref = ctx.multiview_asset(sc, t, highlight, f"multistep_{seed % 10_000}")
    question = TEMPLATES["multi_step_reasoning"].format(
        ego_action=ego_action,
        interaction=interaction,
        target=f"Object-{display_id(target)}",
        relation=RELATION_INLINE[transformed],
    )
    return _item(
        "multi_step_reasoning",
        question,
        item_id="",
        prompt=question,
        asset_refs=[ref],
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(t, t),
        constraint_certificate={
            "target_index": target.object_index,
            "answer_index": answer_node.object_index,
            "relation": relation,
            "rotation_deg": rotation,
            "transformed_relation": transformed,
            "cameras_target": _cert_cameras(target),
            "cameras_answer": _cert_cameras(answer_node),
        },
        rng_seed=seed,
        context=INTERACTION_DEFINITION,
    )


def gen_allocentric_imagination(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    t = sc.keyframe
    nodes = {n.object_index: n for n in visible_nodes(sc.graph, t)}
    candidates = []
    for e in sc.graph.edges["relation"]:
        if e.src[0] != t or e.src[1] == EGO_INDEX or e.dst[1] == EGO_INDEX:
            continue
        if e.label not in CARDINAL_RELATIONS:
            continue
        a, b = nodes.get(e.src[1]), nodes.get(e.dst[1])
        if a is None or b is None or (a.cameras & b.cameras):
            continue
        candidates.append((a, b, e.label))
    if not candidates:
        raise NoEligibleCandidates("disjoint_camera_cardinal_pair")
    ref_node, target_node, relation = candidates[int(rng.integers(0, len(candidates)))]

    phrases = [RELATION_PHRASES[r] for r in CARDINAL_RELATIONS]
    correct = RELATION_PHRASES[relation]
    options, answer = shuffle_with_answer(phrases, phrases.index(correct), rng)

    highlight = [(ref_node.object_index, "(1)"), (target_node.object_index, "(2)")]
    ref = ctx.multiview_asset(sc, t, highlight, f"allocentric_{seed % 10_000}")
    question = TEMPLATES["allocentric_imagination"].format(reference="Object-1", target="Object-2")
    return _item(
        "allocentric_imagination",
        question,
        item_id="",
        prompt=question,
        asset_refs=[ref],
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(t, t),
        constraint_certificate={
            "reference_index": ref_node.object_index,
            "target_index": target_node.object_index,
            "relation": relation,
            "cameras_reference": _cert_cameras(ref_node),
            "cameras_target": _cert_cameras(target_node),
        },
        rng_seed=seed,
    )


def gen_spatial_compatibility(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    t = sc.keyframe
    pairs = [
        (a, b, float(np.linalg.norm(a.center - b.center)))
        for a, b in disjoint_camera_pairs(visible_nodes(sc.graph, t))
        if a.object_index < b.object_index
    ]
    pairs = [(a, b, d) for a, b, d in pairs if d < 8.0]
    if not pairs:
        raise NoEligibleCandidates("pair_within_8m")
    a, b, d = pairs[int(rng.integers(0, len(pairs)))]
    can_pass = d > 5.0

    highlight = [(a.object_index, "(1)"), (b.object_index, "(2)")]
    ref = ctx.multiview_asset(sc, t, highlight, f"compat_{seed % 10_000}")
    question = TEMPLATES["spatial_compatibility"].format(first="Object-1", second="Object-2")
    return _item(
        "spatial_compatibility",
        question,
        item_id="",
        prompt=question,
        asset_refs=[ref],
        options=["Yes", "No"],
        answer=0 if can_pass else 1,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(t, t),
        constraint_certificate={
            "first_index": a.object_index,
            "second_index": b.object_index,
            "distance_m": d,
            "cameras_a": _cert_cameras(a),
            "cameras_b": _cert_cameras(b),
        },
        rng_seed=seed,
    )


def gen_multiview_matching(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    t = sc.keyframe
    nodes = tracked_visible(sc.graph, t)
    multi_view = [n for n in nodes if len(n.cameras) >= 2]
    same = bool(rng.random() < ctx.cfg.p_same) and bool(multi_view)

    if same:
        node = multi_view[int(rng.integers(0, len(multi_view)))]
        cams = sorted(node.cameras)
        c1 = cams[int(rng.integers(0, len(cams)))]
        c2 = pick(rng, [c for c in cams if c != c1])
        highlight = [(node.object_index, "(1)", c1), (node.object_index, "(2)", c2)]
        certificate = {
            "kind": "identity_multiview",
            "track_id": node.track_id,
            "object_index": node.object_index,
            "cameras": cams,
            "view_1": c1,
            "view_2": c2,
        }
        answer = 0
    else:
        pairs = [
            (a, b)
            for a, b in disjoint_camera_pairs(nodes)
            if a.object_index < b.object_index
        ]
        if not pairs:
            raise NoEligibleCandidates("disjoint_camera_track_pair")
        a, b = pairs[int(rng.integers(0, len(pairs)))]
        highlight = [(a.object_index, "(1)"), (b.object_index, "(2)")]
        certificate = {
            "kind": "pairwise_disjoint",
            "track_a": a.track_id,
            "track_b": b.track_id,
            "index_a": a.object_index,
            "index_b": b.object_index,
            "cameras_a": _cert_cameras(a),
            "cameras_b": _cert_cameras(b),
        }
        answer = 1

    ref = ctx.multiview_asset(sc, t, highlight, f"matching_{seed % 10_000}")
    question = TEMPLATES["multiview_matching"].format(first="Object-1", second="Object-2")
    return _item(
        "multiview_matching",
        question,
        item_id="",
        prompt=question,
        asset_refs=[ref],
        options=["Yes", "No"],
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(t, t),
        constraint_certificate=certificate,
        rng_seed=seed,
    )


def gen_depth_awareness(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    t = sc.keyframe
    margin = ctx.cfg.depth_margin
    pairs = []
    for a, b in disjoint_camera_pairs(visible_nodes(sc.graph, t)):
        r1 = float(np.linalg.norm(a.center))
        r2 = float(np.linalg.norm(b.center))
        if abs(r1 - r2) > margin:
            pairs.append((a, b, r1, r2))
    if not pairs:
        raise NoEligibleCandidates("range_margin_pair", f"no pair with |r1-r2| > {margin}")
    a, b, r1, r2 = pairs[int(rng.integers(0, len(pairs)))]

    highlight = [(a.object_index, "(1)"), (b.object_index, "(2)")]
    ref = ctx.multiview_asset(sc, t, highlight, f"depth_{seed % 10_000}")
    question = TEMPLATES["depth_awareness"].format(first="Object-1", second="Object-2")
    return _item(
        "depth_awareness",
        question,
        item_id="",
        prompt=question,
        asset_refs=[ref],
        options=["Yes", "No"],
        answer=0 if r1 < r2 else 1,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(t, t),
        constraint_certificate={
            "first_index": a.object_index,
            "second_index": b.object_index,
            "range_1": r1,
            "range_2": r2,
            "cameras_a": _cert_cameras(a),
            "cameras_b": _cert_cameras(b),
        },
        rng_seed=seed,
    )


def gen_relative_direction(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    t = sc.keyframe
    nodes = {n.object_index: n for n in visible_nodes(sc.graph, t)}
    ego_edges = [
        e
        for e in sc.graph.edges["relation"]
        if e.src == (t, EGO_INDEX) and e.dst[1] in nodes
    ]
    if not ego_edges:
        raise NoEligibleCandidates("ego_relation_edge")
    edge = ego_edges[int(rng.integers(0, len(ego_edges)))]
    target = nodes[edge.dst[1]]
    correct = RELATION_PHRASES[edge.label]

    others = [p for r, p in RELATION_PHRASES.items() if r != edge.label]
    distractors = [others[int(k)] for k in rng.choice(len(others), size=3, replace=False)]
    options, answer = shuffle_with_answer([correct] + distractors, 0, rng)

    ref = ctx.multiview_asset(sc, t, [(target.object_index, "(1)")], f"reldir_{seed % 10_000}")
    question = TEMPLATES["relative_direction"].format(target="Object-1")
    return _item(
        "relative_direction",
        question,
        item_id="",
        prompt=question,
        asset_refs=[ref],
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(t, t),
        constraint_certificate={"target_index": target.object_index, "relation": edge.label},
        rng_seed=seed,
    )


def distance_bin(d: float) -> tuple[int, int]:
    size = 1 if d < 10 else 2 if d < 20 else 5
    low = int(d // size) * size
    return low, size


def _distance_pair(sc: SceneContext, rng):
    t = sc.keyframe
    pairs = []
    for a, b in disjoint_camera_pairs(visible_nodes(sc.graph, t)):
        if a.object_index >= b.object_index:
            continue
        d = float(np.linalg.norm(a.center - b.center))
        if 5.0 < d < 50.0:
            pairs.append((a, b, d))
    if not pairs:
        raise NoEligibleCandidates("pair_5_to_50m")
    return t, pairs[int(rng.integers(0, len(pairs)))]


def gen_relative_distance(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    t, (a, b, d) = _distance_pair(sc, rng)
    low, size = distance_bin(d)
    correct = f"{low}-{low + size} meters"
    options = [correct]
    for offset in (-2, -1, 1, 2):
        lo = low + offset * size
        if lo >= 0 and len(options) < ctx.cfg.k_options:
            options.append(f"{lo}-{lo + size} meters")
    options.sort(key=lambda s: int(s.split("-")[0]))
    answer = options.index(correct)

    highlight = [(a.object_index, "(1)"), (b.object_index, "(2)")]
    ref = ctx.multiview_asset(sc, t, highlight, f"reldist_{seed % 10_000}")
    question = TEMPLATES["relative_distance"].format(first="Object-1", second="Object-2")
    return _item(
        "relative_distance",
        question,
        item_id="",
        prompt=question,
        asset_refs=[ref],
        options=options,
        answer=answer,
        answer_type="option",
        scene_id=sc.scene_id,
        frame_span=(t, t),
        constraint_certificate={
            "first_index": a.object_index,
            "second_index": b.object_index,
            "distance_m": d,
            "bin": [low, low + size],
            "cameras_a": _cert_cameras(a),
            "cameras_b": _cert_cameras(b),
        },
        rng_seed=seed,
    )


def gen_distance_absolute(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    t, (a, b, d) = _distance_pair(sc, rng)
    highlight = [(a.object_index, "(1)"), (b.object_index, "(2)")]
    ref = ctx.multiview_asset(sc, t, highlight, f"absdist_{seed % 10_000}")
    question = TEMPLATES["distance_absolute"].format(first="Object-1", second="Object-2")
    return _item(
        "distance_absolute",
        question,
        item_id="",
        prompt=question,
        asset_refs=[ref],
        options=None,
        answer=round(d, 1),
        answer_type="numeric",
        scene_id=sc.scene_id,
        frame_span=(t, t),
        constraint_certificate={
            "first_index": a.object_index,
            "second_index": b.object_index,
            "distance_m": d,
            "cameras_a": _cert_cameras(a),
            "cameras_b": _cert_cameras(b),
            "metric": "distance",
        },
        rng_seed=seed,
    )


def gen_counting_absolute(ctx: GenerationContext, sc: SceneContext, rng, seed: int) -> QAItem:
    t = sc.keyframe
    category = pick(rng, [c for c in CATEGORIES if c != "other"])
    count = sum(1 for n in visible_nodes(sc.graph, t) if n.category == category)
    ref = ctx.multiview_asset(sc, t, [], "stitched")
    question = TEMPLATES["counting_absolute"].format(category=CATEGORY_DISPLAY[category])
    return _item(
        "counting_absolute",
        question,
        item_id="",
        prompt=question,
        asset_refs=[ref],
        options=None,
        answer=count,
        answer_type="numeric",
        scene_id=sc.scene_id,
        frame_span=(t, t),
        constraint_certificate={"category": category, "count": count, "metric": "counting"},
        rng_seed=seed,
    )
