"""Rasterized views consumed by QA generation and the review service.

Everything renders to PIL images with deterministic bytes: no timestamps, no
antialiasing randomness, fixed palette. BEV maps draw straight from boxes and
optional lane polylines; camera tiles fall back to a synthetic placeholder so
the whole pipeline runs with zero real images.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageDraw

from .schema import Frame, Scene

# Clockwise tile/order per source, starting from the front camera.
CAMERA_ORDERS = {
    "nuscenes": (
        "CAM_FRONT",
        "CAM_FRONT_RIGHT",
        "CAM_BACK_RIGHT",
        "CAM_BACK",
        "CAM_BACK_LEFT",
        "CAM_FRONT_LEFT",
    ),
    "waymo": ("FRONT", "FRONT_RIGHT", "SIDE_RIGHT", "SIDE_LEFT", "FRONT_LEFT"),
    "av2": (
        "ring_front_center",
        "ring_front_right",
        "ring_side_right",
        "ring_rear_right",
        "ring_rear_left",
        "ring_side_left",
        "ring_front_left",
    ),
    "truckscenes": ("CAMERA_FRONT", "CAMERA_RIGHT", "CAMERA_BACK", "CAMERA_LEFT"),
    "once": (
        "cam_front",
        "cam_front_right",
        "cam_side_right",
        "cam_back_right",
        "cam_back_left",
        "cam_side_left",
        "cam_front_left",
    ),
}

CATEGORY_COLORS = {
    "vehicle.car": (66, 135, 245),
    "vehicle.truck": (31, 79, 160),
    "pedestrian": (235, 117, 50),
    "cyclist": (49, 163, 84),
    "traffic_cone": (230, 190, 35),
    "barrier": (130, 130, 130),
    "other": (150, 110, 180),
}
EGO_COLOR = (220, 40, 40)
HIGHLIGHT_COLOR = (255, 0, 200)
LANE_COLOR = (90, 90, 90)
BACKGROUND = (245, 245, 245)
MASK_FILL = (40, 40, 40)

TILE_SIZE = (400, 225)


class MissingImage(FileNotFoundError):
    pass


def camera_order(source: str) -> tuple[str, ...]:
    return CAMERA_ORDERS[source]


def front_camera(source: str) -> str:
    return CAMERA_ORDERS[source][0]


@dataclass
class BevStyle:
    extent: float = 40.0  # half-width, meters
    resolution: float = 8.0  # px per meter
    show_lanes: bool = True
    highlight: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if self.extent <= 0 or self.resolution <= 0:
            raise ValueError("extent and resolution must be positive")

    @property
    def size_px(self) -> int:
        return int(round(2 * self.extent * self.resolution))


def _bev_px(x: float, y: float, style: BevStyle) -> tuple[float, float]:
    # Ego-forward (+x) rendered rightward, ego-left (+y) upward.
    half = style.extent * style.resolution
    return (half + x * style.resolution, half - y * style.resolution)


def _box_corners(center: np.ndarray, size: np.ndarray, yaw: float) -> np.ndarray:
    half_l, half_w = size[0] / 2.0, size[1] / 2.0
    corners = np.array(
        [[half_l, half_w], [half_l, -half_w], [-half_l, -half_w], [-half_l, half_w]]
    )
    c, s = np.cos(yaw), np.sin(yaw)
    rot = np.array([[c, -s], [s, c]])
    return corners @ rot.T + center[:2]


def render_bev(scene: Scene, frame_index: int, style: BevStyle | None = None) -> Image.Image:
    """Top-down raster of one frame: ego marker centered, boxes oriented."""
    style = style or BevStyle()
    frame = scene.frames[frame_index]
    img = Image.new("RGB", (style.size_px, style.size_px), BACKGROUND)
    draw = ImageDraw.Draw(img)

    if style.show_lanes and scene.lanes:
        world_from_ego = frame.ego_pose
        ego_from_world = world_from_ego.inverse()
        for lane in scene.lanes:
            pts = []
            for wx, wy in lane:
                p = ego_from_world.apply(np.array([wx, wy, 0.0]))
                pts.append(_bev_px(p[0], p[1], style))
            if len(pts) >= 2:
                draw.line(pts, fill=LANE_COLOR, width=2)

    highlight = set(style.highlight)
    for i, obj in enumerate(frame.objects):
        corners = _box_corners(obj.center, obj.size, obj.yaw)
        pts = [_bev_px(x, y, style) for x, y in corners]
        color = CATEGORY_COLORS.get(obj.category, CATEGORY_COLORS["other"])
        draw.polygon(pts, fill=color)
        if (frame_index, i) in highlight:
            draw.polygon(pts, outline=HIGHLIGHT_COLOR, width=3)
            anchor = _bev_px(obj.center[0], obj.center[1], style)
            draw.text((anchor[0] + 4, anchor[1] + 4), f"#{i + 1}", fill=HIGHLIGHT_COLOR)

    # Ego marker: triangle pointing along +x (rightward on screen).
    cx, cy = _bev_px(0.0, 0.0, style)
    r = max(4.0, 2.2 * style.resolution / 2)
    draw.polygon(
        [(cx + r, cy), (cx - r * 0.7, cy - r * 0.6), (cx - r * 0.7, cy + r * 0.6)],
        fill=EGO_COLOR,
    )
    return img


def placeholder_tile(scene_id: str, frame_index: int, camera_name: str) -> Image.Image:
    """Deterministic checker tile standing in for a real camera image."""
    w, h = TILE_SIZE
    seed = zlib.crc32(f"{scene_id}/{frame_index}/{camera_name}".encode())
    shade = 140 + (seed % 60)
    img = Image.new("RGB", (w, h), (shade, shade, shade))
    draw = ImageDraw.Draw(img)
    step = 25
    for yy in range(0, h, step):
        for xx in range(0, w, step):
            if ((xx // step) + (yy // step)) % 2 == 0:
                tone = 120 + ((seed >> 3) % 50)
                draw.rectangle([xx, yy, xx + step - 1, yy + step - 1], fill=(tone, tone, tone + 10))
    draw.text((6, 6), camera_name, fill=(20, 20, 20))
    return img


def _load_tile(scene: Scene, frame: Frame, camera_name: str, placeholder: bool) -> Image.Image:
    ref = frame.image_refs.get(camera_name)
    if ref and not ref.startswith("placeholder://"):
        try:
            img = Image.open(ref).convert("RGB")
            return img.resize(TILE_SIZE, Image.NEAREST)
        except FileNotFoundError:
            if not placeholder:
                raise MissingImage(ref)
    elif ref is None and not placeholder:
        raise MissingImage(f"{scene.scene_id}/{frame.frame_index}/{camera_name}")
    return placeholder_tile(scene.scene_id, frame.frame_index, camera_name)


@dataclass
class ComposedView:
    image: Image.Image
    tiles: dict[str, tuple[int, int]]  # camera -> top-left px in the composite
    overlays: dict[str, list[tuple[float, float, float, float]]]  # camera -> tile-space boxes


def _grid_shape(n: int) -> tuple[int, int]:
    cols = (n + 1) // 2
    rows = 2 if n > 1 else 1
    return rows, cols


def render_multiview(
    scene: Scene,
    frame_index: int,
    highlight: list[tuple] | None = None,
    placeholder: bool = True,
) -> ComposedView:
    """Camera grid in canonical clockwise order with labeled 2D-box overlays.

    ``highlight`` entries are ``(object_index, label)`` or
    ``(object_index, label, camera_name)``; without a camera restriction the
    overlay appears in exactly the cameras the object's stored projections
    name.
    """
    frame = scene.frames[frame_index]
    order = [c for c in camera_order(scene.metadata.source) if c in frame.camera_names]
    rows, cols = _grid_shape(len(order))
    tw, th = TILE_SIZE
    img = Image.new("RGB", (cols * tw, rows * th), (0, 0, 0))
    tiles: dict[str, tuple[int, int]] = {}
    overlays: dict[str, list[tuple[float, float, float, float]]] = {c: [] for c in order}

    for idx, cam_name in enumerate(order):
        ox, oy = (idx % cols) * tw, (idx // cols) * th
        tile = _load_tile(scene, frame, cam_name, placeholder)
        draw = ImageDraw.Draw(tile)
        calib = frame.camera(cam_name)
        sx = tw / calib.image_size[0]
        sy = th / calib.image_size[1]
        for entry in highlight or []:
            obj_index, label = entry[0], entry[1]
            only_camera = entry[2] if len(entry) > 2 else None
            if only_camera is not None and only_camera != cam_name:
                continue
            proj = frame.objects[obj_index].projection_for(cam_name)
            if proj is None:
                continue
            x1, y1, x2, y2 = proj.box2d
            rect = (x1 * sx, y1 * sy, x2 * sx, y2 * sy)
            draw.rectangle(rect, outline=HIGHLIGHT_COLOR, width=2)
            draw.text((rect[0] + 2, max(0, rect[1] - 12)), label, fill=HIGHLIGHT_COLOR)
            overlays[cam_name].append(rect)
        draw.text((6, th - 16), cam_name, fill=(250, 250, 250))
        img.paste(tile, (ox, oy))
        tiles[cam_name] = (ox, oy)
    return ComposedView(image=img, tiles=tiles, overlays=overlays)


def compose_camera_grid(
    scene: Scene,
    frame_index: int,
    shuffled: list[str],
    placeholder: bool = True,
) -> tuple[Image.Image, dict[str, str]]:
    """Tiles in the given shuffled order stamped A, B, C, ...

    Returns the composite plus the letter -> camera lookup used to compute the
    answer sequence.
    """
    frame = scene.frames[frame_index]
    rows, cols = _grid_shape(len(shuffled))
    tw, th = TILE_SIZE
    img = Image.new("RGB", (cols * tw, rows * th), (0, 0, 0))
    lookup: dict[str, str] = {}
    for idx, cam_name in enumerate(shuffled):
        letter = chr(ord("A") + idx)
        lookup[letter] = cam_name
        tile = _load_tile(scene, frame, cam_name, placeholder)
        draw = ImageDraw.Draw(tile)
        draw.rectangle([0, 0, 26, 20], fill=(255, 255, 255))
        draw.text((8, 4), letter, fill=(0, 0, 0))
        img.paste(tile, ((idx % cols) * tw, (idx // cols) * th))
    return img, lookup


def mask_camera_sequence(
    scene: Scene,
    start: int,
    count: int,
    masked_camera: str,
    placeholder: bool = True,
) -> list[Image.Image]:
    """Composites for frames start..start+count-1; frame 0 unmasked, the rest
    have the chosen tile replaced by a solid fill naming the camera."""
    if count < 2:
        raise ValueError("sequence needs at least 2 frames")
    images = []
    for k in range(count):
        view = render_multiview(scene, start + k, highlight=None, placeholder=placeholder)
        if k > 0:
            ox, oy = view.tiles[masked_camera]
            tw, th = TILE_SIZE
            draw = ImageDraw.Draw(view.image)
            draw.rectangle([ox, oy, ox + tw - 1, oy + th - 1], fill=MASK_FILL)
            draw.text((ox + tw // 2 - 40, oy + th // 2 - 6), f"{masked_camera} masked", fill=(255, 255, 255))
        images.append(view.image)
    return images


def save_png(img: Image.Image, path) -> None:
    img.save(path, format="PNG")
