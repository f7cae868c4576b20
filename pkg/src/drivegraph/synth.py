"""Deterministic synthetic scene pool for desk-scale pipeline runs.

Real dataset readers are out of scope; this module fabricates scenes in the
reference convention with a cast designed so every task generator finds
eligible candidates: convoy pairs in disjoint cameras, multi-view tracks on
camera seams, near pairs for passability, oncoming/crossing traffic, an
occluded parked car, a track that leaves the annotation range, a lane-changing
overtaker, and assorted parked clutter. Scenes are then rotated *out* of the
reference convention per source and written uncalibrated, so the pipeline's
calibration stage has real work to do.

Usage: ``python -m drivegraph.synth --out pool/ --scenes 24 --seed 7``
"""

from __future__ import annotations

import math
import zlib
from pathlib import Path

import numpy as np

from .calibration import SOURCE_ALPHA, rotate_scene
from .rendering import CAMERA_ORDERS
from .schema import (
    CameraCalibration,
    Frame,
    ObjectAnnotation,
    Pose,
    Projection,
    Scene,
    SceneMetadata,
    TIME_OF_DAY_LABELS,
    WEATHER_LABELS,
    normalize_yaw,
    serialize,
)
from .calibration import project_to_camera

IMAGE_SIZE = (1600, 900)
CAMERA_HEIGHT = 1.6
N_FRAMES = 12
DT = 0.5

# Native metadata availability per source (scene_type is never native).
NATIVE_WEATHER = {"once", "truckscenes", "waymo"}
NATIVE_TIME = {"nuscenes", "once", "truckscenes", "waymo"}
NATIVE_VELOCITY = {"nuscenes", "waymo", "truckscenes", "once"}

SIZES = {
    "vehicle.car": (4.4, 1.9, 1.6),
    "vehicle.truck": (8.2, 2.5, 3.3),
    "pedestrian": (0.7, 0.7, 1.75),
    "cyclist": (1.8, 0.6, 1.7),
    "traffic_cone": (0.4, 0.4, 1.1),
    "barrier": (2.2, 0.5, 1.0),
}

DEFAULT_SOURCE_MIX = (
    ("nuscenes", 6),
    ("waymo", 5),
    ("av2", 5),
    ("truckscenes", 4),
    ("once", 4),
)


def _rig(source: str):
    names = CAMERA_ORDERS[source]
    n = len(names)
    spacing = 2 * math.pi / n
    half_fov = 0.625 * spacing  # horizontal half-FOV; adjacent views overlap
    fx = (IMAGE_SIZE[0] / 2) / math.tan(half_fov)
    yaws = [normalize_yaw(-k * spacing) for k in range(n)]
    return names, yaws, spacing, fx


def _camera_calibrations(source: str) -> list[CameraCalibration]:
    names, yaws, _, fx = _rig(source)
    w, h = IMAGE_SIZE
    convention = "camera_from_ego" if source in ("waymo", "truckscenes") else "ego_from_camera"
    cams = []
    for name, psi in zip(names, yaws):
        # Camera axes in ego coords: x=right, y=down, z=optical (forward).
        r = np.array(
            [
                [math.sin(psi), 0.0, math.cos(psi)],
                [-math.cos(psi), 0.0, math.sin(psi)],
                [0.0, -1.0, 0.0],
            ]
        )
        m = np.eye(4)
        m[:3, :3] = r
        m[:3, 3] = [0.0, 0.0, CAMERA_HEIGHT]
        ego_from_camera = Pose(m)
        extrinsic = ego_from_camera if convention == "ego_from_camera" else ego_from_camera.inverse()
        k = np.array([[fx, 0.0, w / 2], [0.0, fx, h / 2], [0.0, 0.0, 1.0]])
        cams.append(
            CameraCalibration(
                camera_name=name,
                intrinsics=k,
                extrinsic=extrinsic,
                frame_convention=convention,
                image_size=IMAGE_SIZE,
            )
        )
    return cams


class _Actor:
    def __init__(self, track, category, ego_xy=None, world_path=None, yaw_world=None,
                 visibility=None, present=None):
        self.track = track
        self.category = category
        self.size = SIZES[category]
        self.ego_xy = ego_xy  # t -> (x, y) in ego frame, or constant tuple
        self.world_path = world_path  # t -> world xy
        self.yaw_world = yaw_world  # t -> world yaw (world actors only)
        self.visibility = visibility or (lambda t: 1.0)
        self.present = present or (lambda t, ego_x: -28.0 <= ego_x <= 65.0)


def _polar(r: float, az: float) -> tuple[float, float]:
    return (r * math.cos(az), r * math.sin(az))


def _build_cast(source: str, rng: np.random.Generator, scene_idx: int) -> list[_Actor]:
    _, yaws, spacing, _ = _rig(source)
    cast: list[_Actor] = []

    # Convoy: lead ahead in the front camera, follower behind; lead pulls away
    # with a sustained acceleration in the second half.
    lead_x0 = 11.0 + rng.uniform(0, 4)
    lead_y = rng.uniform(-0.3, 0.3)

    def lead_xy(t, x0=lead_x0, y=lead_y):
        gain = 0.35 * max(0, t - 5) ** 2
        return (x0 + gain, y)

    cast.append(_Actor("lead", "vehicle.car", ego_xy=lead_xy))
    follower_x = -9.0 - rng.uniform(0, 3)
    cast.append(_Actor("follower", "vehicle.car", ego_xy=lambda t, x=follower_x: (x, 0.0)))

    # Seam riders: constant offsets on the boundary azimuth between adjacent
    # cameras, guaranteeing multi-view tracks; side-by-side so they co-move.
    seam = spacing / 2
    r_seam = 8.5 + rng.uniform(0, 3)
    cast.append(_Actor("seam_right", "vehicle.car", ego_xy=lambda t, p=_polar(r_seam, -seam): p))
    cast.append(_Actor("seam_left", "vehicle.car", ego_xy=lambda t, p=_polar(r_seam, seam): p))

    # Passability pair in mutually exclusive camera wedges; alternate scenes
    # land on the yes (d > 5 m) and no side of the rule.
    want_pass = scene_idx % 2 == 0
    d_target = rng.uniform(5.7, 7.4) if want_pass else rng.uniform(3.4, 4.6)
    gap = spacing  # azimuth between front center and its left neighbor center
    r_a = 0.9 * d_target / math.sin(gap) if math.sin(gap) > 1e-6 else d_target
    r_a = max(2.6, r_a)
    disc = d_target**2 - (r_a * math.sin(gap)) ** 2
    r_b = r_a * math.cos(gap) + math.sqrt(max(disc, 0.04))
    cast.append(_Actor("near_a", "cyclist", ego_xy=lambda t, p=_polar(r_a, 0.0): p))
    cast.append(_Actor("near_b", "pedestrian", ego_xy=lambda t, p=_polar(max(r_b, 1.6), gap): p))

    # Parked depth/distance anchors in distinct exclusive wedges.
    r_c = 13.0 + rng.uniform(0, 6)
    r_d = 22.0 + rng.uniform(0, 8)
    cast.append(_Actor("dist_right", "vehicle.car", ego_xy=lambda t, p=_polar(r_c, yaws[1]): p))
    cast.append(
        _Actor("dist_left", "vehicle.truck", ego_xy=lambda t, p=_polar(r_d, yaws[-1]): p)
    )
    return cast


def _world_cast(rng: np.random.Generator, ego_pos, ego_yaw, ego_speed) -> list[_Actor]:
    """Actors scripted in world coordinates against the frame-0 ego pose."""
    cast: list[_Actor] = []
    p0, psi0 = ego_pos(0), ego_yaw(0)
    fwd = np.array([math.cos(psi0), math.sin(psi0)])
    left = np.array([-math.sin(psi0), math.cos(psi0)])

    # Oncoming car in the adjacent lane; drops out of annotation range after
    # passing so the final frame no longer contains it.
    on_start = p0 + (45 + rng.uniform(0, 10)) * fwd + 3.5 * left
    on_speed = 7.5

    def oncoming(t, s=on_start):
        return s - on_speed * DT * t * fwd

    cast.append(
        _Actor(
            "oncoming",
            "vehicle.car",
            world_path=oncoming,
            yaw_world=lambda t: normalize_yaw(psi0 + math.pi),
            present=lambda t, ego_x: ego_x > -18.0,
        )
    )

    # Pedestrian crossing perpendicular ahead.
    cross_anchor = p0 + (20 + rng.uniform(0, 5)) * fwd + 8.0 * left

    def crossing(t, s=cross_anchor):
        return s - 1.6 * DT * t * left

    cast.append(
        _Actor(
            "crossing_ped",
            "pedestrian",
            world_path=crossing,
            yaw_world=lambda t: normalize_yaw(psi0 - math.pi / 2),
        )
    )

    # Parked car that becomes mostly hidden near the end of the clip.
    occ_pos = p0 + (26 + rng.uniform(0, 4)) * fwd + 4.5 * left
    cast.append(
        _Actor(
            "occluded_car",
            "vehicle.car",
            world_path=lambda t, s=occ_pos: s,
            yaw_world=lambda t: psi0,
            visibility=lambda t: 0.85 if t < 8 else 0.3,
        )
    )

    # Cyclist that turns left mid-clip.
    turn_start = p0 + (16 + rng.uniform(0, 3)) * fwd + 6.0 * left
    turn_states = [(np.array(turn_start, dtype=float), psi0)]
    for t in range(1, N_FRAMES):
        pos, yaw = turn_states[-1]
        yaw_next = yaw + (0.3 if 5 <= t <= 9 else 0.0)
        step = 4.0 * DT * np.array([math.cos(yaw_next), math.sin(yaw_next)])
        turn_states.append((pos + step, yaw_next))
    cast.append(
        _Actor(
            "turner",
            "cyclist",
            world_path=lambda t, st=turn_states: st[t][0],
            yaw_world=lambda t, st=turn_states: normalize_yaw(st[t][1]),
        )
    )

    # Cone row on the right shoulder.
    for k in range(3):
        cone = p0 + (12 + 3 * k) * fwd - 4.5 * left
        cast.append(
            _Actor(
                f"cone_{k}",
                "traffic_cone",
                world_path=lambda t, s=cone: s,
                yaw_world=lambda t: psi0,
            )
        )

    # Overtaker: starts behind in the left lane, runs faster, swings right
    # across a lane boundary as it clears the follower.
    ov_start = p0 - 16.0 * fwd + 3.4 * left
    ov_speed = ego_speed + 3.2

    def ov_path(t, s=ov_start):
        lateral = 3.4 if t < 6 else (2.1 if t == 6 else 0.8)
        return s + ov_speed * DT * t * fwd + (lateral - 3.4) * left

    cast.append(
        _Actor(
            "overtaker",
            "vehicle.car",
            world_path=ov_path,
            yaw_world=lambda t: psi0,
        )
    )
    return cast


def build_reference_scene(source: str, scene_idx: int, seed: int) -> Scene:
    """One scene in the reference convention (calibrated=True)."""
    rng = np.random.default_rng(zlib.crc32(f"{source}-{scene_idx}".encode()) ^ seed)
    ego_speed = 6.5 + rng.uniform(0, 2.5)
    yaw_rate = float(rng.choice([0.06, 0.1, 0.15])) if scene_idx % 3 == 2 else 0.0
    psi0 = rng.uniform(-math.pi, math.pi)
    origin = rng.uniform(-200, 200, size=2)

    ego_yaws = [normalize_yaw(psi0 + yaw_rate * t) for t in range(N_FRAMES)]
    ego_positions = [np.array([origin[0], origin[1], 0.0])]
    for t in range(1, N_FRAMES):
        step = ego_speed * DT * np.array([math.cos(ego_yaws[t - 1]), math.sin(ego_yaws[t - 1]), 0.0])
        ego_positions.append(ego_positions[-1] + step)

    def ego_pos(t):
        return ego_positions[t][:2]

    def ego_yaw(t):
        return ego_yaws[t]

    cast = _build_cast(source, rng, scene_idx) + _world_cast(rng, ego_pos, ego_yaw, ego_speed)
    cameras = _camera_calibrations(source)
    with_tracks = source != "once"
    native_velocity = source in NATIVE_VELOCITY

    # Resolve every actor to per-frame world position/yaw, then to ego frame.
    world_xy: dict[str, list[np.ndarray | None]] = {}
    world_yaw: dict[str, list[float]] = {}
    for actor in cast:
        xs = []
        for t in range(N_FRAMES):
            if actor.world_path is not None:
                wxy = np.asarray(actor.world_path(t), dtype=float)
            else:
                ex, ey = actor.ego_xy(t)
                c, s = math.cos(ego_yaws[t]), math.sin(ego_yaws[t])
                wxy = ego_positions[t][:2] + np.array([c * ex - s * ey, s * ex + c * ey])
            xs.append(wxy)
        ys = []
        for t in range(N_FRAMES):
            if actor.world_path is not None:
                wyaw = actor.yaw_world(t)
            else:
                # Heading follows the actual world displacement so formation
                # riders on a curved ego path do not read as lane changes.
                t0, t1 = (t, t + 1) if t + 1 < N_FRAMES else (t - 1, t)
                step = xs[t1] - xs[t0]
                wyaw = math.atan2(step[1], step[0]) if np.linalg.norm(step) > 1e-9 else ego_yaws[t]
            ys.append(normalize_yaw(wyaw))
        world_xy[actor.track] = xs
        world_yaw[actor.track] = ys

    frames = []
    for t in range(N_FRAMES):
        m = np.eye(4)
        c, s = math.cos(ego_yaws[t]), math.sin(ego_yaws[t])
        m[:3, :3] = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        m[:3, 3] = ego_positions[t]
        ego_pose = Pose(m)
        ego_from_world = ego_pose.inverse()

        objects = []
        for actor in cast:
            wxy = world_xy[actor.track][t]
            center = ego_from_world.apply(np.array([wxy[0], wxy[1], actor.size[2] / 2]))
            if not actor.present(t, center[0]) or abs(center[1]) > 36.0:
                continue
            yaw_ego = normalize_yaw(world_yaw[actor.track][t] - ego_yaws[t])

            velocity = None
            if native_velocity:
                t_prev, t_next = (t - 1, t) if t >= 1 else (0, 1)
                v_world = (world_xy[actor.track][t_next] - world_xy[actor.track][t_prev]) / DT
                v3 = np.array([v_world[0], v_world[1], 0.0])
                velocity = ego_from_world.rotation @ v3

            projections = []
            vis = actor.visibility(t)
            for cam in cameras:
                pix = project_to_camera(center, cam)
                if pix is None:
                    continue
                projections.append(
                    Projection(cam.camera_name, _project_box(center, actor.size, yaw_ego, cam), vis)
                )
            objects.append(
                ObjectAnnotation(
                    category=actor.category,
                    center=center,
                    size=np.array(actor.size),
                    yaw=yaw_ego,
                    track_id=actor.track if with_tracks else None,
                    velocity=velocity,
                    projections=projections,
                )
            )
        frames.append(
            Frame(
                frame_index=t,
                timestamp=t * DT,
                ego_pose=ego_pose,
                cameras=_camera_calibrations(source),
                objects=objects,
                image_refs={
                    cam.camera_name: f"placeholder://{source}-{scene_idx:03d}/{t}/{cam.camera_name}"
                    for cam in cameras
                },
            )
        )

    provenance = {}
    weather = time_of_day = None
    if source in NATIVE_WEATHER:
        weather = str(rng.choice([w for w in WEATHER_LABELS if w != "other"]))
        provenance["weather"] = "source_native"
    if source in NATIVE_TIME:
        time_of_day = str(rng.choice(TIME_OF_DAY_LABELS))
        provenance["time_of_day"] = "source_native"
    metadata = SceneMetadata(
        source=source,
        ego_type="truck" if source == "truckscenes" else "car",
        weather=weather,
        time_of_day=time_of_day,
        provenance=provenance,
    )

    lanes = _lane_polylines(ego_positions, ego_yaws)
    return Scene(
        scene_id=f"{source}-{scene_idx:03d}",
        metadata=metadata,
        frames=frames,
        calibrated=True,
        lanes=lanes,
    )


def _project_box(center, size, yaw, cam) -> tuple[float, float, float, float]:
    """2D box of the 3D box in a camera, clipped to the image."""
    l, wdt, h = size
    c, s = math.cos(yaw), math.sin(yaw)
    pts = []
    for dx in (-l / 2, l / 2):
        for dy in (-wdt / 2, wdt / 2):
            for dz in (-h / 2, h / 2):
                pts.append(center + np.array([c * dx - s * dy, s * dx + c * dy, dz]))
    k = cam.intrinsics
    w, hh = cam.image_size
    us, vs = [], []
    cam_from_ego = cam.camera_from_ego()
    for p in pts:
        pc = cam_from_ego.apply(p)
        if pc[2] <= 0.1:
            continue
        us.append(k[0, 0] * pc[0] / pc[2] + k[0, 2])
        vs.append(k[1, 1] * pc[1] / pc[2] + k[1, 2])
    if not us:
        cx = project_to_camera(center, cam)
        us, vs = [cx[0] - 8, cx[0] + 8], [cx[1] - 8, cx[1] + 8]
    x1 = float(np.clip(min(us), 0, w - 1))
    x2 = float(np.clip(max(us), 0, w - 1))
    y1 = float(np.clip(min(vs), 0, hh - 1))
    y2 = float(np.clip(max(vs), 0, hh - 1))
    return (x1, y1, max(x2, x1 + 1.0), max(y2, y1 + 1.0))


def _lane_polylines(ego_positions, ego_yaws) -> list[np.ndarray]:
    lanes = []
    for offset in (-5.4, -1.8, 1.8, 5.4):
        pts = []
        for t in range(len(ego_positions)):
            x, y = ego_positions[t][:2]
            psi = ego_yaws[t]
            nx, ny = -math.sin(psi), math.cos(psi)
            pts.append([x + offset * nx, y + offset * ny])
        # extend beyond the clip so lanes span the BEV extent
        psi0, psin = ego_yaws[0], ego_yaws[-1]
        first = np.array(pts[0]) - 45 * np.array([math.cos(psi0), math.sin(psi0)])
        last = np.array(pts[-1]) + 45 * np.array([math.cos(psin), math.sin(psin)])
        lanes.append(np.array([first.tolist()] + pts + [last.tolist()]))
    return lanes


def build_pool(n_scenes: int = 24, seed: int = 7) -> list[Scene]:
    """Scenes in the reference convention, sources cycled per the default mix."""
    order: list[str] = []
    while len(order) < n_scenes:
        for source, count in DEFAULT_SOURCE_MIX:
            order.extend([source] * count)
    scenes = [build_reference_scene(source, idx, seed) for idx, source in enumerate(order[:n_scenes])]
    return scenes


def write_pool(out_dir: str | Path, n_scenes: int = 24, seed: int = 7) -> list[Path]:
    """Write uncalibrated source-convention documents, one scene per file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for scene in build_pool(n_scenes, seed):
        alpha = SOURCE_ALPHA[scene.metadata.source]
        raw = rotate_scene(scene, -alpha, calibrated=False)
        path = out / f"{scene.scene_id}.scene.json"
        path.write_text(serialize(raw), encoding="utf-8")
        paths.append(path)
    return paths


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Write a synthetic scene pool")
    parser.add_argument("--out", required=True)
    parser.add_argument("--scenes", type=int, default=24)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    paths = write_pool(args.out, args.scenes, args.seed)
    print(f"wrote {len(paths)} scenes to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
