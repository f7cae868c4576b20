"""Canonical interchange data model for multi-view driving scenes.

One scene per UTF-8 document. A document is a single line of canonical JSON
(sorted keys, compact separators) so that scene files double as records in
line-delimited pools. All angles are radians, distances meters, timestamps
seconds. ``format_version`` is mandatory and currently pinned to "1".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = "1"

SOURCES = ("nuscenes", "waymo", "av2", "truckscenes", "once")
CATEGORIES = (
    "vehicle.car",
    "vehicle.truck",
    "pedestrian",
    "cyclist",
    "traffic_cone",
    "barrier",
    "other",
)
# Categories that never move on their own; they are labeled stopped regardless
# of any (noisy) velocity estimate.
STATIC_CATEGORIES = frozenset({"traffic_cone", "barrier"})

WEATHER_LABELS = ("cloudy", "rain", "snow", "hail", "overcast", "clear", "sunny", "other")
TIME_OF_DAY_LABELS = ("daytime", "nighttime", "twilight")
SCENE_TYPE_LABELS = (
    "cross_intersection",
    "t_intersection",
    "y_intersection",
    "skewed_intersection",
    "multi_leg_intersection",
    "straight_road",
    "s_curve_road",
)
EGO_TYPES = ("car", "truck")
PROVENANCE_LEVELS = ("source_native", "inferred", "human_verified")
METADATA_FIELDS = ("weather", "time_of_day", "scene_type")

FRAME_CONVENTIONS = ("ego_from_camera", "camera_from_ego")


class SchemaError(ValueError):
    """Structural problem in a scene document; ``path`` names the offender."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class InvariantError(ValueError):
    """A well-formed document violating a domain invariant."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def normalize_yaw(theta: float) -> float:
    """Wrap an angle to [-pi, pi] via atan2 (total and branch-free)."""
    return math.atan2(math.sin(theta), math.cos(theta))


@dataclass
class Pose:
    """4x4 homogeneous transform, row-major, translation in meters."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise InvariantError("pose", f"expected 4x4 matrix, got {m.shape}")
        r = m[:3, :3]
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-6) or abs(np.linalg.det(r) - 1.0) > 1e-6:
            raise InvariantError("pose", "rotation block is not orthonormal with det +1")
        if not np.array_equal(m[3], np.array([0.0, 0.0, 0.0, 1.0])):
            raise InvariantError("pose", "bottom row must be exactly [0,0,0,1]")
        self.matrix = m

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:3, 3]

    def inverse(self) -> "Pose":
        r = self.rotation.T
        t = -r @ self.translation
        m = np.eye(4)
        m[:3, :3] = r
        m[:3, 3] = t
        return Pose(m)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation


@dataclass
class CameraCalibration:
    camera_name: str
    intrinsics: np.ndarray  # 3x3, pixels
    extrinsic: Pose
    frame_convention: str  # explicit; no implicit default
    image_size: tuple[int, int]  # (width, height) px

    def __post_init__(self):
        k = np.asarray(self.intrinsics, dtype=float)
        if k.shape != (3, 3):
            raise InvariantError(f"camera[{self.camera_name}].intrinsics", "expected 3x3")
        if k[2, 2] != 1.0:
            raise InvariantError(f"camera[{self.camera_name}].intrinsics", "K[2][2] must be 1")
        if k[0, 0] <= 0 or k[1, 1] <= 0:
            raise InvariantError(f"camera[{self.camera_name}].intrinsics", "focal entries must be > 0")
        if self.frame_convention not in FRAME_CONVENTIONS:
            raise InvariantError(
                f"camera[{self.camera_name}].frame_convention",
                f"must be one of {FRAME_CONVENTIONS}",
            )
        self.intrinsics = k
        self.image_size = (int(self.image_size[0]), int(self.image_size[1]))

    def camera_from_ego(self) -> Pose:
        if self.frame_convention == "camera_from_ego":
            return self.extrinsic
        return self.extrinsic.inverse()


@dataclass
class Projection:
    camera_name: str
    box2d: tuple[float, float, float, float]  # x1, y1, x2, y2 px
    visibility: float  # unobstructed fraction in [0, 1]

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise InvariantError(f"projection[{self.camera_name}].visibility", "must be in [0,1]")


@dataclass
class ObjectAnnotation:
    category: str
    center: np.ndarray  # ego frame, meters
    size: np.ndarray  # length, width, height, meters
    yaw: float  # radians in [-pi, pi]
    track_id: str | None = None
    velocity: np.ndarray | None = None  # m/s, ego frame
    projections: list[Projection] = field(default_factory=list)

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise SchemaError("object.category", f"unknown category {self.category!r}")
        self.center = np.asarray(self.center, dtype=float)
        self.size = np.asarray(self.size, dtype=float)
        if self.center.shape != (3,):
            raise SchemaError("object.center", "expected 3-vector")
        if self.size.shape != (3,) or np.any(self.size <= 0):
            raise InvariantError("object.size", "all extents must be > 0")
        if not -math.pi <= self.yaw <= math.pi:
            raise InvariantError("object.yaw", f"yaw {self.yaw} outside [-pi, pi]")
        if self.velocity is not None:
            self.velocity = np.asarray(self.velocity, dtype=float)
            if self.velocity.shape != (3,):
                raise SchemaError("object.velocity", "expected 3-vector")
        names = [p.camera_name for p in self.projections]
        if len(names) != len(set(names)):
            raise InvariantError("object.projections", "camera_name repeated")

    def cameras(self, min_visibility: float = 0.0) -> set[str]:
        return {p.camera_name for p in self.projections if p.visibility >= min_visibility}

    def projection_for(self, camera_name: str) -> Projection | None:
        for p in self.projections:
            if p.camera_name == camera_name:
                return p
        return None


@dataclass
class Frame:
    frame_index: int
    timestamp: float
    ego_pose: Pose  # world-from-ego
    cameras: list[CameraCalibration]
    objects: list[ObjectAnnotation]
    image_refs: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.frame_index < 0:
            raise InvariantError(f"frame[{self.frame_index}]", "frame_index must be >= 0")
        cam_names = {c.camera_name for c in self.cameras}
        for oi, obj in enumerate(self.objects):
            for p in obj.projections:
                if p.camera_name not in cam_names:
                    raise InvariantError(
                        f"frame[{self.frame_index}].objects[{oi}].projections",
                        f"unknown camera {p.camera_name!r}",
                    )

    def camera(self, name: str) -> CameraCalibration:
        for c in self.cameras:
            if c.camera_name == name:
                return c
        raise KeyError(name)

    @property
    def camera_names(self) -> list[str]:
        return [c.camera_name for c in self.cameras]


@dataclass
class SceneMetadata:
    source: str
    ego_type: str = "car"
    weather: str | None = None
    time_of_day: str | None = None
    scene_type: str | None = None
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.source not in SOURCES:
            raise SchemaError("metadata.source", f"unknown source {self.source!r}")
        if self.ego_type not in EGO_TYPES:
            raise SchemaError("metadata.ego_type", f"unknown ego_type {self.ego_type!r}")
        checks = (
            ("weather", self.weather, WEATHER_LABELS),
            ("time_of_day", self.time_of_day, TIME_OF_DAY_LABELS),
            ("scene_type", self.scene_type, SCENE_TYPE_LABELS),
        )
        for name, value, allowed in checks:
            if value is not None and value not in allowed:
                raise SchemaError(f"metadata.{name}", f"unknown label {value!r}")
            if value is not None and name not in self.provenance:
                raise InvariantError(f"metadata.provenance.{name}", "provenance required for set field")
        for name, level in self.provenance.items():
            if name not in METADATA_FIELDS:
                raise SchemaError(f"metadata.provenance.{name}", "unknown metadata field")
            if level not in PROVENANCE_LEVELS:
                raise SchemaError(f"metadata.provenance.{name}", f"unknown provenance {level!r}")

    def get(self, name: str) -> str | None:
        return getattr(self, name)


@dataclass
class Scene:
    scene_id: str
    metadata: SceneMetadata
    frames: list[Frame]
    calibrated: bool = False
    lanes: list[np.ndarray] = field(default_factory=list)  # world-frame polylines, Nx2

    def __post_init__(self):
        if not self.frames:
            raise InvariantError("frames", "scene must have at least one frame")
        cam_sets = [tuple(sorted(f.camera_names)) for f in self.frames]
        if len(set(cam_sets)) != 1:
            raise InvariantError("frames", "all frames must share the camera name set")
        for prev, cur in zip(self.frames, self.frames[1:]):
            if cur.timestamp <= prev.timestamp:
                raise InvariantError(
                    f"frames[{cur.frame_index}].timestamp",
                    "timestamps must strictly increase",
                )
        self.lanes = [np.asarray(l, dtype=float) for l in self.lanes]

    @property
    def camera_names(self) -> list[str]:
        return self.frames[0].camera_names

    def frame_of_track(self, track_id: str, t: int) -> int | None:
        """Index of ``track_id`` within frame ``t``'s object list, or None."""
        for i, obj in enumerate(self.frames[t].objects):
            if obj.track_id == track_id:
                return i
        return None

    def has_track_ids(self) -> bool:
        return any(o.track_id is not None for f in self.frames for o in f.objects)


# --- document validation (independent of object construction) ---------------

class ValidationIssue:
    __slots__ = ("path", "message", "kind")

    def __init__(self, path: str, message: str, kind: str):
        self.path = path
        self.message = message
        self.kind = kind  # "schema" | "invariant"

    def __repr__(self):
        return f"{self.path}: {self.message}"


def validate_document(doc) -> list[ValidationIssue]:
    """Check a raw scene document against the format without constructing it.

    Returns issues with the offending path; empty means valid. The parser must
    reject exactly the documents this rejects.
    """
    errors: list[ValidationIssue] = []

    def _err(path: str, msg: str, kind: str = "schema") -> None:
        errors.append(ValidationIssue(path, msg, kind))

    if not isinstance(doc, dict):
        return [ValidationIssue("$", "document must be an object", "schema")]
    if doc.get("format_version") != FORMAT_VERSION:
        _err("format_version", f"must be {FORMAT_VERSION!r}")
    if not isinstance(doc.get("scene_id"), str) or not doc.get("scene_id"):
        _err("scene_id", "must be a non-empty string")
    if not isinstance(doc.get("calibrated"), bool):
        _err("calibrated", "must be a boolean")

    meta = doc.get("metadata")
    if not isinstance(meta, dict):
        _err("metadata", "must be an object")
        meta = {}
    if meta.get("source") not in SOURCES:
        _err("metadata.source", "unknown source")
    if meta.get("ego_type", "car") not in EGO_TYPES:
        _err("metadata.ego_type", "unknown ego_type")
    prov = meta.get("provenance", {})
    if not isinstance(prov, dict):
        _err("metadata.provenance", "must be an object")
        prov = {}
    for name, allowed in (
        ("weather", WEATHER_LABELS),
        ("time_of_day", TIME_OF_DAY_LABELS),
        ("scene_type", SCENE_TYPE_LABELS),
    ):
        value = meta.get(name)
        if value is not None:
            if value not in allowed:
                _err(f"metadata.{name}", f"unknown label {value!r}")
            elif name not in prov:
                _err(f"metadata.provenance.{name}", "provenance required", "invariant")
    for name, level in prov.items():
        if name not in METADATA_FIELDS:
            _err(f"metadata.provenance.{name}", "unknown metadata field")
        elif level not in PROVENANCE_LEVELS:
            _err(f"metadata.provenance.{name}", "unknown provenance level")

    frames = doc.get("frames")
    if not isinstance(frames, list) or not frames:
        _err("frames", "must be a non-empty array")
        frames = []

    cam_sets = set()
    last_ts = None
    for fi, fr in enumerate(frames):
        fp = f"frames[{fi}]"
        if not isinstance(fr, dict):
            _err(fp, "must be an object")
            continue
        if not isinstance(fr.get("frame_index"), int) or fr.get("frame_index", -1) < 0:
            _err(f"{fp}.frame_index", "must be an integer >= 0")
        ts = fr.get("timestamp")
        if not isinstance(ts, (int, float)) or isinstance(ts, bool):
            _err(f"{fp}.timestamp", "must be a number")
        else:
            if last_ts is not None and ts <= last_ts:
                _err(f"{fp}.timestamp", "timestamps must strictly increase", "invariant")
            last_ts = ts
        if not _valid_pose_rows(fr.get("ego_pose")):
            _err(f"{fp}.ego_pose", "must be a valid 4x4 pose", "invariant")

        cameras = fr.get("cameras")
        names = []
        if not isinstance(cameras, list):
            _err(f"{fp}.cameras", "must be an array")
            cameras = []
        for ci, cam in enumerate(cameras):
            cp = f"{fp}.cameras[{ci}]"
            if not isinstance(cam, dict):
                _err(cp, "must be an object")
                continue
            if not isinstance(cam.get("camera_name"), str):
                _err(f"{cp}.camera_name", "must be a string")
            else:
                names.append(cam["camera_name"])
            k = cam.get("intrinsics")
            if not _valid_matrix(k, 3):
                _err(f"{cp}.intrinsics", "must be a 3x3 matrix")
            else:
                if k[2][2] != 1:
                    _err(f"{cp}.intrinsics", "K[2][2] must be 1", "invariant")
                if k[0][0] <= 0 or k[1][1] <= 0:
                    _err(f"{cp}.intrinsics", "focal entries must be > 0", "invariant")
            if not _valid_pose_rows(cam.get("extrinsic")):
                _err(f"{cp}.extrinsic", "must be a valid 4x4 pose", "invariant")
            if cam.get("frame_convention") not in FRAME_CONVENTIONS:
                _err(f"{cp}.frame_convention", "must be explicit")
            size = cam.get("image_size")
            if (
                not isinstance(size, list)
                or len(size) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in size)
            ):
                _err(f"{cp}.image_size", "must be [width, height] of positive ints")
        cam_sets.add(tuple(sorted(names)))

        objects = fr.get("objects")
        if not isinstance(objects, list):
            _err(f"{fp}.objects", "must be an array")
            objects = []
        for oi, obj in enumerate(objects):
            op = f"{fp}.objects[{oi}]"
            if not isinstance(obj, dict):
                _err(op, "must be an object")
                continue
            if obj.get("category") not in CATEGORIES:
                _err(f"{op}.category", "unknown category")
            if not _valid_vector(obj.get("center"), 3):
                _err(f"{op}.center", "must be a 3-vector")
            size = obj.get("size")
            if not _valid_vector(size, 3):
                _err(f"{op}.size", "must be a 3-vector")
            elif any(v <= 0 for v in size):
                _err(f"{op}.size", "extents must be > 0", "invariant")
            yaw = obj.get("yaw")
            if not isinstance(yaw, (int, float)) or isinstance(yaw, bool):
                _err(f"{op}.yaw", "must be a number")
            elif not -math.pi <= yaw <= math.pi:
                _err(f"{op}.yaw", "must be in [-pi, pi]", "invariant")
            if obj.get("velocity") is not None and not _valid_vector(obj["velocity"], 3):
                _err(f"{op}.velocity", "must be a 3-vector")
            tid = obj.get("track_id")
            if tid is not None and not isinstance(tid, str):
                _err(f"{op}.track_id", "must be a string")
            projections = obj.get("projections", [])
            if not isinstance(projections, list):
                _err(f"{op}.projections", "must be an array")
                projections = []
            seen = set()
            for pi, proj in enumerate(projections):
                pp = f"{op}.projections[{pi}]"
                if not isinstance(proj, dict):
                    _err(pp, "must be an object")
                    continue
                cname = proj.get("camera_name")
                if not isinstance(cname, str):
                    _err(f"{pp}.camera_name", "must be a string")
                else:
                    if cname in seen:
                        _err(f"{pp}.camera_name", "camera repeated", "invariant")
                    seen.add(cname)
                    if names and cname not in names:
                        _err(f"{pp}.camera_name", "not a frame camera", "invariant")
                if not _valid_vector(proj.get("box2d"), 4):
                    _err(f"{pp}.box2d", "must be [x1,y1,x2,y2]")
                vis = proj.get("visibility")
                if not isinstance(vis, (int, float)) or isinstance(vis, bool) or not 0 <= vis <= 1:
                    _err(f"{pp}.visibility", "must be in [0,1]", "invariant")

    if len(cam_sets) > 1:
        _err("frames", "all frames must share the camera name set", "invariant")

    lanes = doc.get("lanes", [])
    if not isinstance(lanes, list):
        _err("lanes", "must be an array")
    else:
        for li, lane in enumerate(lanes):
            if not isinstance(lane, list) or any(not _valid_vector(p, 2) for p in lane):
                _err(f"lanes[{li}]", "must be an array of [x,y] points")
    return errors


def _valid_vector(v, n: int) -> bool:
    return (
        isinstance(v, list)
        and len(v) == n
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
    )


def _valid_matrix(m, n: int) -> bool:
    return isinstance(m, list) and len(m) == n and all(_valid_vector(row, n) for row in m)


def _valid_pose_rows(m) -> bool:
    if not _valid_matrix(m, 4):
        return False
    arr = np.asarray(m, dtype=float)
    r = arr[:3, :3]
    if not np.allclose(r @ r.T, np.eye(3), atol=1e-6) or abs(np.linalg.det(r) - 1.0) > 1e-6:
        return False
    return bool(np.array_equal(arr[3], np.array([0.0, 0.0, 0.0, 1.0])))


# --- parse / serialize -------------------------------------------------------

def parse_canonical(data: bytes | str) -> Scene:
    """Parse one canonical scene document, validating every invariant."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from exc
    errors = validate_document(doc)
    if errors:
        first = errors[0]
        cls = SchemaError if first.kind == "schema" else InvariantError
        raise cls(first.path, first.message)
    return _scene_from_doc(doc)


def _scene_from_doc(doc: dict) -> Scene:
    frames = []
    for fr in doc["frames"]:
        cameras = [
            CameraCalibration(
                camera_name=c["camera_name"],
                intrinsics=np.asarray(c["intrinsics"], dtype=float),
                extrinsic=Pose(np.asarray(c["extrinsic"], dtype=float)),
                frame_convention=c["frame_convention"],
                image_size=(c["image_size"][0], c["image_size"][1]),
            )
            for c in fr["cameras"]
        ]
        objects = [
            ObjectAnnotation(
                category=o["category"],
                center=np.asarray(o["center"], dtype=float),
                size=np.asarray(o["size"], dtype=float),
                yaw=float(o["yaw"]),
                track_id=o.get("track_id"),
                velocity=None if o.get("velocity") is None else np.asarray(o["velocity"], dtype=float),
                projections=[
                    Projection(p["camera_name"], tuple(p["box2d"]), float(p["visibility"]))
                    for p in o.get("projections", [])
                ],
            )
            for o in fr["objects"]
        ]
        frames.append(
            Frame(
                frame_index=fr["frame_index"],
                timestamp=fr["timestamp"],
                ego_pose=Pose(np.asarray(fr["ego_pose"], dtype=float)),
                cameras=cameras,
                objects=objects,
                image_refs=dict(fr.get("image_refs", {})),
            )
        )
    meta = doc["metadata"]
    metadata = SceneMetadata(
        source=meta["source"],
        ego_type=meta.get("ego_type", "car"),
        weather=meta.get("weather"),
        time_of_day=meta.get("time_of_day"),
        scene_type=meta.get("scene_type"),
        provenance=dict(meta.get("provenance", {})),
    )
    return Scene(
        scene_id=doc["scene_id"],
        metadata=metadata,
        frames=frames,
        calibrated=doc["calibrated"],
        lanes=[np.asarray(l, dtype=float) for l in doc.get("lanes", [])],
    )


def scene_to_document(scene: Scene) -> dict:
    meta: dict = {"source": scene.metadata.source, "ego_type": scene.metadata.ego_type}
    for name in METADATA_FIELDS:
        value = scene.metadata.get(name)
        if value is not None:
            meta[name] = value
    meta["provenance"] = dict(sorted(scene.metadata.provenance.items()))
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "scene_id": scene.scene_id,
        "calibrated": scene.calibrated,
        "metadata": meta,
        "frames": [
            {
                "frame_index": f.frame_index,
                "timestamp": f.timestamp,
                "ego_pose": f.ego_pose.matrix.tolist(),
                "cameras": [
                    {
                        "camera_name": c.camera_name,
                        "intrinsics": c.intrinsics.tolist(),
                        "extrinsic": c.extrinsic.matrix.tolist(),
                        "frame_convention": c.frame_convention,
                        "image_size": [c.image_size[0], c.image_size[1]],
                    }
                    for c in f.cameras
                ],
                "objects": [_object_to_doc(o) for o in f.objects],
                "image_refs": dict(sorted(f.image_refs.items())),
            }
            for f in scene.frames
        ],
    }
    if scene.lanes:
        doc["lanes"] = [lane.tolist() for lane in scene.lanes]
    return doc


def _object_to_doc(o: ObjectAnnotation) -> dict:
    rec: dict = {
        "category": o.category,
        "center": o.center.tolist(),
        "size": o.size.tolist(),
        "yaw": o.yaw,
        "track_id": o.track_id,
        "projections": [
            {"camera_name": p.camera_name, "box2d": list(p.box2d), "visibility": p.visibility}
            for p in o.projections
        ],
    }
    if o.velocity is not None:
        rec["velocity"] = o.velocity.tolist()
    return rec


def dumps_canonical(obj: dict) -> str:
    """Canonical single-line JSON rendering used by every file format here."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def serialize(scene: Scene) -> str:
    return dumps_canonical(scene_to_document(scene)) + "\n"


def canonicalize(data: bytes | str) -> str:
    """Re-render a raw document in canonical form without schema knowledge."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return dumps_canonical(json.loads(data)) + "\n"
