#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Monocular 3D box lifting.

A 2D detection, its estimated dimensions and its local orientation are turned
into a 7-parameter 3D box by assuming the projected box touches all four sides
of the 2D box. Camera frame: x right, y down, z forward; boxes rotate about y.

Corner order: corner i uses the sign (+ if the bit is set, - otherwise) of
bit 0 for the length axis (x), bit 1 for the height axis (y) and bit 2 for
the width axis (z) of the object frame, around the box center.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from prunner.exceptions import DataError
from prunner.tools.kinematics import normalize_angle


class InvalidDims(DataError):

    """
    Raised when box dimensions are not strictly positive
    """


class BehindCamera(DataError):

    """
    Raised when a box corner is not in front of the camera
    """


class NoValidConfiguration(DataError):

    """
    Raised when no corner-to-side configuration yields a box in front of the camera
    """


@dataclass(frozen=True)
class CameraIntrinsics(object):

    """
    Pinhole parameters [px]
    """

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.fx, self.fy, self.cx, self.cy)):
            raise ValueError("Camera intrinsics must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("Focal lengths must be positive, got fx={} fy={}".format(self.fx, self.fy))


@dataclass(frozen=True)
class Box2D(object):

    """
    Pixel-space rectangle
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("Degenerate 2D box {}".format(self.as_tuple()))

    def as_tuple(self):
        """
        Returns (x_min, y_min, x_max, y_max)
        """
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class Box3D(object):

    """
    Box in the camera frame: center t [m], dims (length, width, height) [m] and yaw [rad] about y
    """

    t: Tuple[float, float, float]
    dims: Tuple[float, float, float]
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, 't', tuple(float(v) for v in self.t))
        object.__setattr__(self, 'dims', tuple(float(v) for v in self.dims))
        _check_dims(self.dims)
        if self.t[2] <= 0:
            raise BehindCamera("Box center is behind the camera (t_z={})".format(self.t[2]))


@dataclass(frozen=True)
class Detection(object):

    """
    Output of the upstream 2D detector and 3D estimator for one object
    """

    box: Box2D
    dims: Tuple[float, float, float]
    alpha: float
    label: str = ""


@dataclass(frozen=True)
class LiftedBox(object):

    """
    3D box recovered from a detection, with its self-reported reprojection error [px]
    """

    box: Box3D
    reprojection_error: float
    label: str = ""


def _check_dims(dims):
    if len(dims) != 3 or not all(math.isfinite(d) and d > 0 for d in dims):
        raise InvalidDims("Box dimensions must be 3 positive values, got {}".format(tuple(dims)))


def _rotation_y(yaw):
    """
    Rotation matrix about the camera y axis
    """
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]], dtype=np.float64)


def _object_corners(dims):
    """
    The 8 corners of a box of dims (length, width, height) around the origin, in corner order
    """
    length, width, height = dims
    signs = np.array([[1.0 if i & 1 else -1.0,
                       1.0 if i & 2 else -1.0,
                       1.0 if i & 4 else -1.0] for i in range(8)])
    return signs * np.array([length / 2.0, height / 2.0, width / 2.0])


def box_edges():
    """
    The 12 edges of a cuboid as pairs of corner indices (corners differing by one bit)
    """
    return [(i, i | bit) for bit in (1, 2, 4) for i in range(8) if not i & bit]


def box_corners(box):
    """
    Camera-frame corners (8 x 3) of a Box3D, in corner order
    """
    rotated = _object_corners(box.dims).dot(_rotation_y(box.yaw).T)
    return rotated + np.array(box.t)


def _project(points, intrinsics):
    """
    Pinhole projection of (..., 3) camera points, returns (..., 2) pixels
    """
    u = intrinsics.fx * points[..., 0] / points[..., 2] + intrinsics.cx
    v = intrinsics.fy * points[..., 1] / points[..., 2] + intrinsics.cy
    return np.stack([u, v], axis=-1)


def _tight_box(pixels):
    """
    (x_min, y_min, x_max, y_max) of (..., 8, 2) projected corners
    """
    return np.concatenate([pixels.min(axis=-2), pixels.max(axis=-2)], axis=-1)


def project_box(box, intrinsics):
    """
    Projects a 3D box into the image.

    :param box: Box3D in the camera frame
    :param intrinsics: CameraIntrinsics
    :return: tuple (8 x 2 array of corner pixels in corner order, tight Box2D around them)
    """
    corners = box_corners(box)
    if np.any(corners[:, 2] <= 0):
        raise BehindCamera("Box at {} has corners behind the camera".format(box.t))
    pixels = _project(corners, intrinsics)
    return pixels, Box2D(*_tight_box(pixels))


def global_yaw(alpha, box, intrinsics):
    """
    Converts a local orientation (observation angle) into a yaw about the camera y axis,
    by adding the angle of the ray through the 2D box center
    """
    ray_angle = math.atan2((box.x_min + box.x_max) / 2.0 - intrinsics.cx, intrinsics.fx)
    return normalize_angle(alpha + ray_angle)


# All (x_min, y_min, x_max, y_max) side -> corner assignments, 8^4 of them
_CONFIGURATIONS = np.array(list(itertools.product(range(8), repeat=4)), dtype=np.int64)


def solve_translation(box, dims, yaw, intrinsics):
    """
    Recovers the box center from the tight 2D-3D constraint.

    Every assignment of one object corner to each side of the 2D box gives four
    equations linear in t, e.g. for the left side:
        fx * (X + t)_x + (cx - x_min) * (X + t)_z = 0
    where X is the rotated corner. Each system is solved in the least squares sense,
    boxes not fully in front of the camera are dropped and the candidate whose tight
    projection is closest to the 2D box (sum of absolute side errors) wins, the lowest
    configuration index breaking ties.

    :return: tuple (t as a 3-tuple [m], reprojection error [px])
    """
    _check_dims(dims)
    fx, fy, cx, cy = intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy
    sides = np.array(box.as_tuple(), dtype=np.float64)

    # Rows: x_min, y_min, x_max, y_max; the matrix does not depend on the configuration
    system = np.array([[fx, 0.0, cx - box.x_min],
                       [0.0, fy, cy - box.y_min],
                       [fx, 0.0, cx - box.x_max],
                       [0.0, fy, cy - box.y_max]], dtype=np.float64)

    rotated = _object_corners(dims).dot(_rotation_y(yaw).T)
    picked = rotated[_CONFIGURATIONS]  # (4096, 4, 3)
    axis = np.array([0, 1, 0, 1])
    rhs = -(system[:, :2][np.arange(4), axis] * picked[:, np.arange(4), axis] +
            system[:, 2] * picked[:, :, 2])

    solutions, _, rank, _ = np.linalg.lstsq(system, rhs.T, rcond=None)
    if rank < 3:
        raise NoValidConfiguration("Singular system for 2D box {}".format(box.as_tuple()))
    translations = solutions.T  # (4096, 3)

    corners = rotated[np.newaxis, :, :] + translations[:, np.newaxis, :]
    in_front = np.all(corners[:, :, 2] > 0, axis=1) & np.all(np.isfinite(translations), axis=1)
    if not np.any(in_front):
        raise NoValidConfiguration("No configuration puts the box in front of the camera")

    with np.errstate(divide='ignore', invalid='ignore'):
        tight = _tight_box(_project(corners, intrinsics))
    errors = np.abs(tight - sides).sum(axis=1)
    errors[~in_front] = np.inf

    best = int(np.argmin(errors))
    return tuple(float(v) for v in translations[best]), float(errors[best])


def lift_box(detection, intrinsics):
    """
    Lifts a detection into a 3D box: global yaw from the local orientation,
    then the translation from the tight 2D-3D constraint.

    :param detection: Detection
    :param intrinsics: CameraIntrinsics
    :return: LiftedBox
    """
    _check_dims(detection.dims)
    yaw = global_yaw(detection.alpha, detection.box, intrinsics)
    translation, error = solve_translation(detection.box, detection.dims, yaw, intrinsics)
    return LiftedBox(box=Box3D(t=translation, dims=tuple(detection.dims), yaw=yaw),
                     reprojection_error=error,
                     label=detection.label)
