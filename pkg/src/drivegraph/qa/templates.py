"""Fixed question templates and label-to-text maps for the 20 tasks.

Template strings are the byte-authoritative source for the corpus question
field; generators fill the named placeholders and never edit the wording.
"""

from __future__ import annotations

TEMPLATES = {
    "scene_construction": (
        "Given the current driving scene, construct a top-down perspective map "
        "of the scene and select the correct map. <image>"
    ),
    "perspective_camera_match": (
        "Given the top-down perspective map of a driving scene, identify which "
        "front camera view corresponds to this map.<image>"
    ),
    "ego_rotation": (
        "The ego vehicle is moving through the scene. Given two front camera "
        "images from timestamp T1 and timestamp T2, what is the approximate "
        "rotation angle of the ego vehicle between these two timestamps? "
        "Timestamp T1: <image> Timestamp T2: <image>"
    ),
    "camera_ordering": (
        "Given a shuffled set of camera views arranged around an autonomous "
        "vehicle, determine the correct spatial ordering of the cameras. <image> "
        "The shuffled camera views are labeled A, B, C, D, etc. in the image "
        "above. Identify the correct clockwise ordering starting from the Front "
        "camera."
    ),
    "leave_one_camera_out": (
        "Given this video sequence where one camera view is masked after the "
        "first frame, based on the video sequence, what objects are present in "
        "that masked camera view in the final frame? <video>"
    ),
    "multi_step_reasoning": (
        "Given the current driving scene. If the ego vehicle is {ego_action} "
        "and {interaction} {target}. What is the object {relation} of yourself? <image>"
    ),
    "allocentric_imagination": (
        "Given the current driving scene. Imagine you are {reference}. Where is "
        "{target} compared to you? <image>"
    ),
    "spatial_compatibility": (
        "Given the current driving scene. Can you drive through between "
        "{first} and {second}?<image>"
    ),
    "multiview_matching": (
        "Given the current driving scene. Are {first} and {second} the same object? <image>"
    ),
    "depth_awareness": (
        "Given the current driving scene, is {first} nearer to us than {second}? <image>"
    ),
    "relative_direction": (
        "Given the current driving scene, where is {target} compared to us? <image>"
    ),
    "relative_distance": (
        "Given the current driving scene, what is the approximate distance "
        "between {first} and {second}? <image>"
    ),
    "distance_absolute": (
        "Given the current driving scene, estimate the approximate distance "
        "between {first} and {second}? Provide your answer as a single "
        "numerical value in meters (e.g., 15.5). <image>"
    ),
    "counting_absolute": (
        "Given the current driving scene, how many {category} objects are "
        "visible across all camera views? Provide your answer as a single "
        "numerical value (e.g., 3). <image>"
    ),
    "event_ordering": (
        "Given this video sequence, what is the correct order of events in the "
        "next 3 seconds? <video>"
    ),
    "trajectory_reasoning": (
        "Given this video sequence with annotation on the first frame. Which "
        "object was present earlier but is no longer visible, and why? <video>"
    ),
    "occlusion_awareness": (
        "Given this video sequence with annotation on the first frame. Are "
        "there any objects occluded in the final frame? What are they? <video>"
    ),
    "object_manipulation": (
        "Given this video sequence, what if {target} rotates {degrees} degrees "
        "(note: current ego front camera is at +90 degrees) and continues with "
        "velocity: {speed} km/h, what would be the trajectory of it in the "
        "next 0.5 seconds? <video>"
    ),
    "action_reasoning": (
        "Given this video sequence, what are the actions of the three "
        "highlighted objects? <video>"
    ),
    "interaction_reasoning": (
        "Given this video sequence, what is the interaction between {first} "
        "and {second}? <video>"
    ),
}

ABILITIES = {
    "scene_construction": "Const",
    "perspective_camera_match": "Const",
    "ego_rotation": "Const",
    "camera_ordering": "Const",
    "leave_one_camera_out": "Const",
    "multi_step_reasoning": "Unders",
    "allocentric_imagination": "Unders",
    "spatial_compatibility": "Unders",
    "multiview_matching": "Unders",
    "depth_awareness": "Unders",
    "relative_direction": "Unders",
    "relative_distance": "Unders",
    "distance_absolute": "Unders",
    "counting_absolute": "Unders",
    "event_ordering": "Reas",
    "trajectory_reasoning": "Reas",
    "occlusion_awareness": "Reas",
    "object_manipulation": "Reas",
    "action_reasoning": "Reas",
    "interaction_reasoning": "Reas",
}

TASK_IDS = tuple(TEMPLATES)

# Tasks whose prompt carries the interaction definitions verbatim.
INTERACTION_DEFINITION = """Know that the definition of interactions are:
- LEAD: Object-1 is leading Object-2
- FOLLOW: Object-1 is following Object-2
- OVERTAKE: Object-1 is overtaking the lane of Object-2
- PASSING: Object-1 is passing the lane of Object-2 in the same direction
- CO_MOVING: Object-1 is co-moving with Object-2 in the same direction
- APPROACHING: Object-1 is approaching Object-2 in the opposite direction
- CROSSING: Object-1 is crossing the lane of Object-2 in the opposite direction
- YIELDING: Object-1 is yielding to Object-2; Object-1 is stopped while Object-2 is moving"""

TASKS_WITH_INTERACTION_DEFINITION = (
    "interaction_reasoning",
    "event_ordering",
    "multi_step_reasoning",
)

# Spatial relation -> egocentric phrase (a bijection over the eight labels).
RELATION_PHRASES = {
    "ahead_of": "in front of you",
    "behind": "behind you",
    "left_of": "on your left",
    "right_of": "on your right",
    "ahead_left_of": "ahead and to your left",
    "ahead_right_of": "ahead and to your right",
    "rear_left_of": "behind and to your left",
    "rear_right_of": "behind and to your right",
}
CARDINAL_RELATIONS = ("ahead_of", "behind", "left_of", "right_of")

# Relation wording used inside the multi-step question body.
RELATION_INLINE = {
    "ahead_of": "ahead",
    "behind": "behind",
    "left_of": "left",
    "right_of": "right",
    "ahead_left_of": "ahead left",
    "ahead_right_of": "ahead right",
    "rear_left_of": "rear left",
    "rear_right_of": "rear right",
}

# Compass bearing of each relation, degrees clockwise from forward.
RELATION_BEARING = {
    "ahead_of": 0,
    "ahead_right_of": 45,
    "right_of": 90,
    "rear_right_of": 135,
    "behind": 180,
    "rear_left_of": 225,
    "left_of": 270,
    "ahead_left_of": 315,
}
BEARING_RELATION = {v: k for k, v in RELATION_BEARING.items()}


def rotate_relation(label: str, degrees: int) -> str:
    """Relabel a relation after the observer's heading rotates by ``degrees``
    counterclockwise: bearings shift clockwise by the same amount."""
    return BEARING_RELATION[(RELATION_BEARING[label] + degrees) % 360]


ACTION_EVENT_TEXT = {
    "stopped": "stops",
    "moving_forward": "moves forward",
    "moving_backward": "moves backward",
    "turn_left": "turns left",
    "turn_right": "turns right",
    "u_turn": "makes a u-turn",
    "lane_change_left": "changes lanes to the left",
    "lane_change_right": "changes lanes to the right",
    "accelerate": "accelerates",
    "decelerate": "decelerates",
}

ACTION_DISPLAY = {
    "stopped": "stopped",
    "moving_forward": "moving forward",
    "moving_backward": "moving backward",
    "turn_left": "turning left",
    "turn_right": "turning right",
    "u_turn": "making a u-turn",
    "lane_change_left": "changing lanes left",
    "lane_change_right": "changing lanes right",
    "accelerate": "accelerating",
    "decelerate": "decelerating",
}

INTERACTION_DISPLAY = {
    "lead": "leading",
    "follow": "following",
    "overtake": "overtaking",
    "passing": "passing",
    "co_moving": "co-moving with",
    "approaching": "approaching",
    "crossing": "crossing",
    "yielding": "yielding to",
}

CATEGORY_DISPLAY = {
    "vehicle.car": "car",
    "vehicle.truck": "truck",
    "pedestrian": "pedestrian",
    "cyclist": "cyclist",
    "traffic_cone": "traffic cone",
    "barrier": "barrier",
    "other": "object",
}


def count_phrase(counts: dict[str, int]) -> str:
    """"2 cars, 1 pedestrian" in fixed category order; "None" when empty."""
    from ..schema import CATEGORIES

    parts = []
    for category in CATEGORIES:
        n = counts.get(category, 0)
        if n > 0:
            name = CATEGORY_DISPLAY[category]
            parts.append(f"{n} {name}{'s' if n > 1 else ''}")
    return ", ".join(parts) if parts else "None"


def expand_video_prompt(question: str, n_frames: int) -> str:
    frames = " ".join(f"Frame {i}: <image>" for i in range(1, n_frames + 1))
    return question.replace("<video>", frames)
