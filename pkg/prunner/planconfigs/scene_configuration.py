#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
This module provides the key configuration parameters of a recorded driving scene:
the keyframes, the ego pose of each keyframe and the front camera calibration.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from pyquaternion import Quaternion

from prunner.tools.detection3d import CameraIntrinsics
from prunner.tools.kinematics import Pose2D

# Keyframes are annotated at 2 Hz
KEYFRAME_DT = 0.5
KEYFRAME_DT_TOLERANCE = 0.05
QUATERNION_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class CameraCalibration(object):

    """
    Front camera calibration: pinhole intrinsics and the rigid transform
    mapping ego-frame points into the camera frame (p_cam = R(q) p_ego + t)
    """

    intrinsics: CameraIntrinsics
    translation: Tuple[float, float, float]
    rotation_wxyz: Tuple[float, float, float, float]

    def __post_init__(self):
        object.__setattr__(self, 'translation', tuple(float(v) for v in self.translation))
        object.__setattr__(self, 'rotation_wxyz', tuple(float(v) for v in self.rotation_wxyz))
        if len(self.translation) != 3 or len(self.rotation_wxyz) != 4:
            raise ValueError("cam_from_ego needs 3 translation and 4 quaternion values")
        if not all(math.isfinite(v) for v in self.translation + self.rotation_wxyz):
            raise ValueError("cam_from_ego holds NaN or infinite values")
        norm = math.sqrt(sum(v * v for v in self.rotation_wxyz))
        if not abs(norm - 1.0) <= QUATERNION_NORM_TOLERANCE:
            raise ValueError("cam_from_ego quaternion is not unit (norm={})".format(norm))

    @property
    def quaternion(self):
        """
        Rotation part of cam_from_ego
        """
        return Quaternion(*self.rotation_wxyz)

    def ego_to_camera(self, points):
        """
        Transforms (N, 3) ego-frame points into the camera frame
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return points.dot(self.quaternion.rotation_matrix.T) + np.array(self.translation)

    def camera_to_ego(self, points):
        """
        Transforms (N, 3) camera-frame points into the ego frame
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return (points - np.array(self.translation)).dot(self.quaternion.rotation_matrix)


@dataclass(frozen=True)
class Frame(object):

    """
    One keyframe of a scene
    """

    timestamp: int
    image_path: str
    ego: Pose2D
    camera: CameraCalibration
    z: float = 0.0

    def __post_init__(self):
        if not self.image_path:
            raise ValueError("image_path must not be empty")


@dataclass(frozen=True)
class SceneManifest(object):

    """
    A scene: its identifier and its keyframes ordered by timestamp.
    root is the directory image paths are relative to.
    """

    scene_id: str
    frames: Tuple[Frame, ...]
    root: Optional[Path] = field(default=None, compare=False)

    def __len__(self):
        return len(self.frames)

    def image_file(self, index):
        """
        Absolute path of the image of frame index
        """
        path = Path(self.frames[index].image_path)
        if self.root is not None and not path.is_absolute():
            path = self.root / path
        return path
