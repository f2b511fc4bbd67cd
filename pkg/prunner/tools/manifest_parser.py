#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
This module provides access to the scene manifest parser.

A manifest is one JSON document:
{"scene_id": str,
 "frames": [{"timestamp_us": int, "image_path": str,
             "ego": {"x": f, "y": f, "z": f, "yaw": f},
             "camera": {"fx": f, "fy": f, "cx": f, "cy": f,
                        "cam_from_ego": {"t": [f, f, f], "q_wxyz": [f, f, f, f]}}}]}
"""

import json
import logging
import os
from pathlib import Path

from prunner.exceptions import DataError
from prunner.planconfigs.scene_configuration import (CameraCalibration, Frame, SceneManifest,
                                                     KEYFRAME_DT, KEYFRAME_DT_TOLERANCE)
from prunner.tools.detection3d import CameraIntrinsics
from prunner.tools.kinematics import NonFiniteInput, Pose2D

LOGGER = logging.getLogger(__name__)


class ManifestNotFound(DataError):

    """
    Raised when a manifest file does not exist or cannot be read
    """


class ManifestParse(DataError):

    """
    Raised when a manifest is not valid JSON or misses / mistypes a field
    """

    def __init__(self, message, line=None, field=None, frame_index=None):
        super(ManifestParse, self).__init__(message)
        self.line = line
        self.field = field
        self.frame_index = frame_index


class ManifestInvalid(DataError):

    """
    Raised when a parsed manifest violates an invariant
    """

    def __init__(self, reason):
        super(ManifestInvalid, self).__init__(reason)
        self.reason = reason


def _get(node, key, context, frame_index=None):
    """
    Returns node[key], raising ManifestParse naming the missing field otherwise
    """
    if not isinstance(node, dict) or key not in node:
        where = " of frame {}".format(frame_index) if frame_index is not None else ""
        raise ManifestParse("Missing field '{}'{}".format(context + key, where),
                            field=context + key, frame_index=frame_index)
    return node[key]


def _number(node, key, context, frame_index):
    value = _get(node, key, context, frame_index)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ManifestParse("Field '{}' of frame {} is not a number".format(context + key, frame_index),
                            field=context + key, frame_index=frame_index)
    return float(value)


def _numbers(node, key, context, frame_index, count):
    values = _get(node, key, context, frame_index)
    if not isinstance(values, list) or len(values) != count:
        raise ManifestParse("Field '{}' of frame {} must hold {} numbers".format(context + key, frame_index, count),
                            field=context + key, frame_index=frame_index)
    return [_number({key: v}, key, context, frame_index) for v in values]


class ManifestParser(object):

    """
    Pure static class providing access to parser methods for scene manifests (*.json)
    """

    @staticmethod
    def load_manifest(path):
        """
        Loads and eagerly validates a scene manifest
        """
        path = Path(path)
        try:
            with open(path, 'r', encoding='utf-8') as fd:
                text = fd.read()
        except (OSError, UnicodeDecodeError) as e:
            raise ManifestNotFound("Cannot read manifest {}: {}".format(path, e))

        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ManifestParse("Manifest {} is not valid JSON (line {}): {}".format(path, e.lineno, e.msg),
                                line=e.lineno)

        scene = ManifestParser.parse_manifest(document, root=path.parent)
        LOGGER.debug("Loaded scene %s with %d frames from %s", scene.scene_id, len(scene), path)
        return scene

    @staticmethod
    def parse_manifest(document, root=None):
        """
        Builds a SceneManifest from an already decoded JSON document
        """
        scene_id = _get(document, 'scene_id', '')
        if not isinstance(scene_id, str) or not scene_id:
            raise ManifestParse("Field 'scene_id' must be a non-empty string", field='scene_id')
        frame_nodes = _get(document, 'frames', '')
        if not isinstance(frame_nodes, list):
            raise ManifestParse("Field 'frames' must be a list", field='frames')

        frames = tuple(ManifestParser.parse_frame(node, index) for index, node in enumerate(frame_nodes))
        ManifestParser.validate(scene_id, frames)
        return SceneManifest(scene_id=scene_id, frames=frames, root=root)

    @staticmethod
    def parse_frame(node, index):
        """
        Builds a Frame from its JSON node
        """
        timestamp = _get(node, 'timestamp_us', '', index)
        if isinstance(timestamp, bool) or not isinstance(timestamp, int):
            raise ManifestParse("Field 'timestamp_us' of frame {} is not an integer".format(index),
                                field='timestamp_us', frame_index=index)
        image_path = _get(node, 'image_path', '', index)
        if not isinstance(image_path, str) or not image_path:
            raise ManifestInvalid("Frame {} has an empty image_path".format(index))

        ego = _get(node, 'ego', '', index)
        camera = _get(node, 'camera', '', index)
        cam_from_ego = _get(camera, 'cam_from_ego', 'camera.', index)

        try:
            pose = Pose2D(x=_number(ego, 'x', 'ego.', index),
                          y=_number(ego, 'y', 'ego.', index),
                          yaw=_number(ego, 'yaw', 'ego.', index))
            intrinsics = CameraIntrinsics(fx=_number(camera, 'fx', 'camera.', index),
                                          fy=_number(camera, 'fy', 'camera.', index),
                                          cx=_number(camera, 'cx', 'camera.', index),
                                          cy=_number(camera, 'cy', 'camera.', index))
            calibration = CameraCalibration(
                intrinsics=intrinsics,
                translation=_numbers(cam_from_ego, 't', 'camera.cam_from_ego.', index, 3),
                rotation_wxyz=_numbers(cam_from_ego, 'q_wxyz', 'camera.cam_from_ego.', index, 4))
        except (ValueError, NonFiniteInput) as e:
            raise ManifestInvalid("Frame {}: {}".format(index, e))

        return Frame(timestamp=timestamp,
                     image_path=image_path,
                     ego=pose,
                     camera=calibration,
                     z=_number(ego, 'z', 'ego.', index))

    @staticmethod
    def validate(scene_id, frames):
        """
        Checks the scene-level invariants
        """
        if not frames:
            raise ManifestInvalid("Scene {} has no frames".format(scene_id))
        for index in range(1, len(frames)):
            delta = frames[index].timestamp - frames[index - 1].timestamp
            if delta <= 0:
                raise ManifestInvalid("non-monotonic timestamps (scene {}, frame {})".format(scene_id, index))
            if abs(delta * 1e-6 - KEYFRAME_DT) > KEYFRAME_DT_TOLERANCE:
                raise ManifestInvalid("irregular frame spacing of {:.3f} s (scene {}, frame {})".format(
                    delta * 1e-6, scene_id, index))

    @staticmethod
    def serialize_manifest(scene):
        """
        Inverse of parse_manifest: returns the JSON document of a scene
        """
        frames = []
        for frame in scene.frames:
            camera = frame.camera
            frames.append({
                "timestamp_us": frame.timestamp,
                "image_path": frame.image_path,
                "ego": {"x": frame.ego.x, "y": frame.ego.y, "z": frame.z, "yaw": frame.ego.yaw},
                "camera": {
                    "fx": camera.intrinsics.fx,
                    "fy": camera.intrinsics.fy,
                    "cx": camera.intrinsics.cx,
                    "cy": camera.intrinsics.cy,
                    "cam_from_ego": {"t": list(camera.translation), "q_wxyz": list(camera.rotation_wxyz)}
                }
            })
        return {"scene_id": scene.scene_id, "frames": frames}

    @staticmethod
    def dump_manifest(scene, path):
        """
        Writes a scene to a manifest file
        """
        with open(path, 'w', encoding='utf-8') as fd:
            json.dump(ManifestParser.serialize_manifest(scene), fd, indent=4)

    @staticmethod
    def load_scenes(directory):
        """
        Loads every manifest (*.json) of a directory, sorted by scene_id
        """
        directory = Path(directory)
        if not directory.is_dir():
            raise ManifestNotFound("Scene directory {} does not exist".format(directory))
        scenes = [ManifestParser.load_manifest(os.path.join(directory, name))
                  for name in sorted(os.listdir(directory)) if name.endswith('.json')]
        scenes.sort(key=lambda scene: scene.scene_id)
        ids = [scene.scene_id for scene in scenes]
        duplicates = sorted({scene_id for scene_id in ids if ids.count(scene_id) > 1})
        if duplicates:
            raise ManifestInvalid("Duplicated scene ids: {}".format(", ".join(duplicates)))
        return scenes
