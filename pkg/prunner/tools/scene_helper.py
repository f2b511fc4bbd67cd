#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Summary of useful helper functions for scenes: the inputs a planner
sees at an anchor keyframe and the ground truth it is scored against.
"""

from dataclasses import dataclass
from typing import Tuple

from prunner.exceptions import DataError
from prunner.planconfigs.scene_configuration import KEYFRAME_DT
from prunner.tools.kinematics import Trajectory, differentiate_trajectory, to_ego_frame

# 5 s of history at 2 Hz
HISTORY_SAMPLES = 10
MAX_FRAMES = 10


class InsufficientHistory(DataError):

    """
    Raised when an anchor has fewer than HISTORY_SAMPLES past keyframes
    """


class InsufficientFuture(DataError):

    """
    Raised when an anchor has fewer future keyframes than the horizon needs
    """


@dataclass(frozen=True)
class EgoHistory(object):

    """
    Past speed [m/s] and curvature [1/m], oldest first, plus the values at the anchor
    """

    dt: float
    speed: Tuple[float, ...]
    curvature: Tuple[float, ...]
    current_speed: float
    current_curvature: float

    def __post_init__(self):
        object.__setattr__(self, 'speed', tuple(float(v) for v in self.speed))
        object.__setattr__(self, 'curvature', tuple(float(v) for v in self.curvature))
        if len(self.speed) != HISTORY_SAMPLES or len(self.curvature) != HISTORY_SAMPLES:
            raise ValueError("An ego history holds exactly {} samples".format(HISTORY_SAMPLES))


def future_points(horizon_s):
    """
    Number of keyframes covering horizon_s seconds
    """
    return int(round(horizon_s / KEYFRAME_DT))


def ego_history(scene, anchor_index):
    """
    Differentiates the global ego positions of the HISTORY_SAMPLES keyframes
    before the anchor, and the anchor itself.

    :param scene: SceneManifest
    :param anchor_index: index of the anchor keyframe
    :return: EgoHistory
    """
    if anchor_index < HISTORY_SAMPLES:
        raise InsufficientHistory("Scene {}: frame {} has {} past keyframes, {} needed".format(
            scene.scene_id, anchor_index, max(anchor_index, 0), HISTORY_SAMPLES))
    if anchor_index >= len(scene):
        raise InsufficientFuture("Scene {}: frame {} does not exist".format(scene.scene_id, anchor_index))

    window = scene.frames[anchor_index - HISTORY_SAMPLES:anchor_index + 1]
    profile, _ = differentiate_trajectory([(frame.ego.x, frame.ego.y) for frame in window], KEYFRAME_DT)

    return EgoHistory(dt=KEYFRAME_DT,
                      speed=profile.speed[:-1],
                      curvature=profile.curvature[:-1],
                      current_speed=profile.speed[-1],
                      current_curvature=profile.curvature[-1])


def ground_truth_future(scene, anchor_index, horizon_s=5):
    """
    Ego-frame positions of the keyframes following the anchor, the origin being point 0

    :param scene: SceneManifest
    :param anchor_index: index of the anchor keyframe
    :param horizon_s: horizon [s]
    :return: Trajectory with 2 * horizon_s + 1 points
    """
    needed = future_points(horizon_s)
    available = len(scene) - 1 - anchor_index
    if anchor_index < 0 or available < needed:
        raise InsufficientFuture("Scene {}: frame {} has {} future keyframes, {} needed".format(
            scene.scene_id, anchor_index, max(available, 0), needed))

    anchor = scene.frames[anchor_index].ego
    future = scene.frames[anchor_index + 1:anchor_index + 1 + needed]
    points = to_ego_frame([(frame.ego.x, frame.ego.y) for frame in future], anchor)

    return Trajectory(dt=KEYFRAME_DT, points=[(0.0, 0.0)] + [tuple(p) for p in points])


def select_anchor(scene, horizon_s=5):
    """
    First keyframe with a full history and a full future, None if the scene is too short
    """
    anchor = HISTORY_SAMPLES
    if anchor + future_points(horizon_s) < len(scene):
        return anchor
    return None


def frame_images(scene, anchor_index, count):
    """
    Image files of the count newest keyframes up to the anchor, oldest first

    :param count: number of images, 1 to MAX_FRAMES
    """
    if not 1 <= count <= MAX_FRAMES:
        raise ValueError("Between 1 and {} frames can be attached, got {}".format(MAX_FRAMES, count))
    first = max(0, anchor_index - count + 1)
    return [scene.image_file(index) for index in range(first, anchor_index + 1)]
