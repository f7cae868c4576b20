from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from drivegraph import synth
from drivegraph.graph import ThresholdSet, build_graph
from drivegraph.schema import (
    CameraCalibration,
    Frame,
    ObjectAnnotation,
    Pose,
    Projection,
    Scene,
    SceneMetadata,
)

POOL_SEED = 7
POOL_SIZE = 24


def make_pose(x=0.0, y=0.0, z=0.0, yaw=0.0) -> Pose:
    c, s = math.cos(yaw), math.sin(yaw)
    m = np.eye(4)
    m[:3, :3] = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    m[:3, 3] = [x, y, z]
    return Pose(m)


def make_camera(name="CAM_FRONT", yaw=0.0, fx=1000.0, size=(1600, 900)) -> CameraCalibration:
    r = np.array(
        [
            [math.sin(yaw), 0.0, math.cos(yaw)],
            [-math.cos(yaw), 0.0, math.sin(yaw)],
            [0.0, -1.0, 0.0],
        ]
    )
    m = np.eye(4)
    m[:3, :3] = r
    m[:3, 3] = [0.0, 0.0, 1.6]
    k = np.array([[fx, 0.0, size[0] / 2], [0.0, fx, size[1] / 2], [0.0, 0.0, 1.0]])
    return CameraCalibration(
        camera_name=name,
        intrinsics=k,
        extrinsic=Pose(m),
        frame_convention="ego_from_camera",
        image_size=size,
    )


def make_object(x, y, yaw=0.0, category="vehicle.car", track=None, size=(4.4, 1.9, 1.6),
                velocity=None, projections=()):
    return ObjectAnnotation(
        category=category,
        center=np.array([x, y, size[2] / 2]),
        size=np.array(size),
        yaw=yaw,
        track_id=track,
        velocity=None if velocity is None else np.asarray(velocity, float),
        projections=list(projections),
    )


def make_scene(frames, source="nuscenes", calibrated=True, scene_id="test-scene", **meta):
    return Scene(
        scene_id=scene_id,
        metadata=SceneMetadata(source=source, **meta),
        frames=frames,
        calibrated=calibrated,
    )


def simple_frame(t, objects, cameras=None, ego=None, dt=0.5):
    return Frame(
        frame_index=t,
        timestamp=t * dt,
        ego_pose=ego or make_pose(),
        cameras=cameras if cameras is not None else [make_camera()],
        objects=objects,
    )


@pytest.fixture(scope="session")
def reference_pool() -> list[Scene]:
    return synth.build_pool(POOL_SIZE, seed=POOL_SEED)


@pytest.fixture(scope="session")
def reference_scene(reference_pool) -> Scene:
    return reference_pool[0]


@pytest.fixture(scope="session")
def reference_graphs(reference_pool):
    thresholds = ThresholdSet()
    return {s.scene_id: build_graph(s, thresholds) for s in reference_pool}


@pytest.fixture(scope="session")
def raw_pool_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("pool")
    synth.write_pool(out, POOL_SIZE, seed=POOL_SEED)
    return out
