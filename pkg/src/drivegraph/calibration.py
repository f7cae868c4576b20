"""Source-to-reference coordinate alignment and camera projection.

Reference convention: z-up, yaw measured counterclockwise from +x in the
ground plane (so an object's forward vector is [cos(yaw), sin(yaw), 0]).
Each source carries a fixed angular offset to that convention; aligning a
scene rotates box centers and yaws by R(alpha) and right-multiplies camera
extrinsics and ego poses by the inverse of the embedded rotation.
"""

from __future__ import annotations

import math

import numpy as np

from .schema import (
    CameraCalibration,
    Frame,
    ObjectAnnotation,
    Pose,
    Projection,
    Scene,
    normalize_yaw,
)

# Angular offset (radians) between each source's convention and the reference.
SOURCE_ALPHA = {
    "nuscenes": 0.0,
    "av2": math.pi / 2,
    "waymo": math.pi / 2,
    "once": math.pi,
    "truckscenes": 3 * math.pi / 4,
}


class AlreadyCalibrated(RuntimeError):
    pass


def rotation_z(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_z4(alpha: float) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = rotation_z(alpha)
    return m


def calibrate_scene(scene: Scene, alpha: float) -> Scene:
    """Rotate a scene into the reference convention by ``alpha`` radians.

    Pure: returns a new Scene. Object velocities are rotated along with
    centers so kinematics stay expressed in the rotated ego frame.
    """
    if scene.calibrated:
        raise AlreadyCalibrated(scene.scene_id)
    return rotate_scene(scene, alpha, calibrated=True)


def rotate_scene(scene: Scene, alpha: float, *, calibrated: bool) -> Scene:
    """Apply the convention rotation and stamp the calibrated flag."""
    r3 = rotation_z(alpha)
    r4_inv = rotation_z4(-alpha)

    def shift_yaw(theta: float) -> float:
        # Wrap only when needed so alpha=0 is bitwise identity.
        shifted = theta + alpha
        return shifted if -math.pi <= shifted <= math.pi else normalize_yaw(shifted)

    frames = []
    for f in scene.frames:
        objects = [
            ObjectAnnotation(
                category=o.category,
                center=r3 @ o.center,
                size=o.size.copy(),
                yaw=shift_yaw(o.yaw),
                track_id=o.track_id,
                velocity=None if o.velocity is None else r3 @ o.velocity,
                projections=[Projection(p.camera_name, p.box2d, p.visibility) for p in o.projections],
            )
            for o in f.objects
        ]
        cameras = []
        for c in f.cameras:
            if c.frame_convention == "camera_from_ego":
                extrinsic = Pose(c.extrinsic.matrix @ r4_inv)
            else:  # ego_from_camera: new ego coords are R * old ego coords
                extrinsic = Pose(rotation_z4(alpha) @ c.extrinsic.matrix)
            cameras.append(
                CameraCalibration(
                    camera_name=c.camera_name,
                    intrinsics=c.intrinsics.copy(),
                    extrinsic=extrinsic,
                    frame_convention=c.frame_convention,
                    image_size=c.image_size,
                )
            )
        frames.append(
            Frame(
                frame_index=f.frame_index,
                timestamp=f.timestamp,
                ego_pose=Pose(f.ego_pose.matrix @ r4_inv),
                cameras=cameras,
                objects=objects,
                image_refs=dict(f.image_refs),
            )
        )
    return Scene(
        scene_id=scene.scene_id,
        metadata=scene.metadata,
        frames=frames,
        calibrated=calibrated,
        lanes=[lane.copy() for lane in scene.lanes],
    )


def project_to_camera(point: np.ndarray, calib: CameraCalibration) -> tuple[float, float] | None:
    """Project an ego-frame point; None when behind the camera or off-image."""
    p_cam = calib.camera_from_ego().apply(np.asarray(point, dtype=float))
    z = p_cam[2]
    if z <= 0.0:
        return None
    k = calib.intrinsics
    u = k[0, 0] * (p_cam[0] / z) + k[0, 2]
    v = k[1, 1] * (p_cam[1] / z) + k[1, 2]
    w, h = calib.image_size
    if not (0.0 <= u < w and 0.0 <= v < h):
        return None
    return (float(u), float(v))
