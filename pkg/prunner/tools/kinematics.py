#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Kinematic helpers of the plan runner.

Converts between control profiles (speed and curvature sampled at a fixed
time step) and planar trajectories, and moves points between the global
frame and the ego frame anchored at a pose (x forward, y leftward, yaw CCW).
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from prunner.exceptions import DataError

# Below this speed [m/s] the curvature of a differentiated trajectory is forced to 0
STANDSTILL_SPEED = 0.05


class NonFiniteInput(DataError):

    """
    Raised when a NaN or infinite value reaches the kinematic helpers
    """


class TooFewPoints(DataError):

    """
    Raised when there are not enough points to differentiate a trajectory
    """


class InvalidProfile(DataError):

    """
    Raised when a control profile violates its invariants
    """


def normalize_angle(angle):
    """
    Wraps an angle [rad] into (-pi, pi]
    """
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def _as_points(points, name="points"):
    """
    Converts a sequence of (x, y) pairs into a (N, 2) float array, checking it is finite
    """
    array = np.asarray(points, dtype=np.float64)
    if array.size == 0:
        array = array.reshape(0, 2)
    if array.ndim != 2 or array.shape[1] != 2:
        raise ValueError("{} must be a sequence of (x, y) pairs, got shape {}".format(name, array.shape))
    if not np.all(np.isfinite(array)):
        raise NonFiniteInput("{} contain NaN or infinite values".format(name))
    return array


@dataclass(frozen=True)
class Pose2D(object):

    """
    Planar pose in the global frame: position [m] and yaw [rad] CCW from +x
    """

    x: float
    y: float
    yaw: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.yaw)):
            raise NonFiniteInput("Pose2D({}, {}, {}) is not finite".format(self.x, self.y, self.yaw))
        object.__setattr__(self, 'yaw', normalize_angle(self.yaw))


@dataclass(frozen=True)
class ControlProfile(object):

    """
    Speed [m/s] and curvature [1/m] samples, sample i being at time i * dt
    """

    dt: float
    speed: Tuple[float, ...]
    curvature: Tuple[float, ...]

    def __post_init__(self):
        speed = tuple(float(s) for s in self.speed)
        curvature = tuple(float(k) for k in self.curvature)
        if not all(math.isfinite(v) for v in speed + curvature + (float(self.dt),)):
            raise NonFiniteInput("Control profile contains NaN or infinite values")
        if self.dt <= 0:
            raise InvalidProfile("Time step must be positive, got {}".format(self.dt))
        if len(speed) != len(curvature):
            raise InvalidProfile("Speed and curvature lengths differ ({} vs {})".format(
                len(speed), len(curvature)))
        if len(speed) < 2:
            raise InvalidProfile("A control profile needs at least 2 samples, got {}".format(len(speed)))
        if any(s < 0 for s in speed):
            raise InvalidProfile("Speeds must be non-negative")
        object.__setattr__(self, 'speed', speed)
        object.__setattr__(self, 'curvature', curvature)

    def __len__(self):
        return len(self.speed)


@dataclass(frozen=True)
class Trajectory(object):

    """
    Timestamped ego-frame waypoints [m]; point i is at time i * dt and point 0 is the anchor
    """

    dt: float
    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        array = _as_points(self.points)
        if len(array) < 1:
            raise ValueError("A trajectory needs at least one point")
        object.__setattr__(self, 'points', tuple((float(x), float(y)) for x, y in array))

    def __len__(self):
        return len(self.points)

    def as_array(self):
        """
        Returns the waypoints as a (N, 2) array
        """
        return np.array(self.points, dtype=np.float64)


def integrate_trajectory(profile, theta0=0.0, origin=(0.0, 0.0)):
    """
    Integrates a control profile into a trajectory with the cumulative trapezoidal rule.

    The heading rate is curvature * speed. Headings, then the velocity components
    s_i * (cos(theta_i), sin(theta_i)), are integrated sample by sample.

    :param profile: ControlProfile to integrate
    :param theta0: initial heading [rad]
    :param origin: initial position (x0, y0) [m]
    :return: Trajectory with len(profile) points, the first one being origin
    """
    if not isinstance(profile, ControlProfile):
        raise TypeError("integrate_trajectory expects a ControlProfile")
    if not all(math.isfinite(v) for v in (theta0, origin[0], origin[1])):
        raise NonFiniteInput("Initial heading and origin must be finite")

    dt = profile.dt
    speed = np.asarray(profile.speed, dtype=np.float64)
    heading_rate = np.asarray(profile.curvature, dtype=np.float64) * speed

    headings = np.empty_like(speed)
    headings[0] = theta0
    headings[1:] = theta0 + np.cumsum(0.5 * dt * (heading_rate[:-1] + heading_rate[1:]))

    velocity_x = speed * np.cos(headings)
    velocity_y = speed * np.sin(headings)

    points = np.empty((len(speed), 2), dtype=np.float64)
    points[0] = origin
    points[1:, 0] = origin[0] + np.cumsum(0.5 * dt * (velocity_x[:-1] + velocity_x[1:]))
    points[1:, 1] = origin[1] + np.cumsum(0.5 * dt * (velocity_y[:-1] + velocity_y[1:]))

    return Trajectory(dt=dt, points=points)


def differentiate_trajectory(points, dt):
    """
    Recovers speed, curvature and heading from positions sampled every dt seconds.

    Central differences are used inside the sequence and second order one-sided
    differences at both ends. Headings are unwrapped before being differentiated
    and the curvature is 0 wherever the speed is below STANDSTILL_SPEED. Such
    standing samples keep the heading of the last moving sample.

    :param points: sequence of (x, y) [m] in a common frame, at least 3
    :param dt: time step [s]
    :return: tuple (ControlProfile, headings array [rad])
    """
    array = _as_points(points)
    if len(array) < 3:
        raise TooFewPoints("Differentiating a trajectory needs at least 3 points, got {}".format(len(array)))
    if not math.isfinite(dt):
        raise NonFiniteInput("Time step is not finite")
    if dt <= 0:
        raise InvalidProfile("Time step must be positive, got {}".format(dt))

    velocity_x = np.gradient(array[:, 0], dt, edge_order=2)
    velocity_y = np.gradient(array[:, 1], dt, edge_order=2)
    speed = np.hypot(velocity_x, velocity_y)

    moving = speed >= STANDSTILL_SPEED
    headings = np.arctan2(velocity_y, velocity_x)
    if np.any(moving):
        # Standing samples keep the heading of the last moving one, leading ones the first moving one
        last_moving = np.maximum.accumulate(np.where(moving, np.arange(len(speed)), -1))
        headings = headings[np.where(last_moving < 0, np.argmax(moving), last_moving)]
    else:
        headings = np.zeros_like(speed)
    headings = np.unwrap(headings)
    heading_rate = np.gradient(headings, dt, edge_order=2)

    curvature = np.zeros_like(speed)
    curvature[moving] = heading_rate[moving] / speed[moving]

    return ControlProfile(dt=dt, speed=speed, curvature=curvature), headings


def _rotation(yaw):
    """
    2D rotation matrix of angle yaw [rad]
    """
    cos_yaw, sin_yaw = math.cos(yaw), math.sin(yaw)
    return np.array([[cos_yaw, -sin_yaw], [sin_yaw, cos_yaw]], dtype=np.float64)


def to_ego_frame(global_points, anchor):
    """
    Expresses global points in the ego frame of the anchor pose (x forward, y leftward)

    :param global_points: sequence of (x, y) [m] in the global frame
    :param anchor: Pose2D of the ego vehicle
    :return: (N, 2) array of ego-frame points
    """
    array = _as_points(global_points, "global points")
    offset = array - np.array([anchor.x, anchor.y])
    return offset.dot(_rotation(-anchor.yaw).T)


def from_ego_frame(ego_points, anchor):
    """
    Inverse of to_ego_frame

    :param ego_points: sequence of (x, y) [m] in the ego frame of anchor
    :param anchor: Pose2D of the ego vehicle
    :return: (N, 2) array of global points
    """
    array = _as_points(ego_points, "ego points")
    return array.dot(_rotation(anchor.yaw).T) + np.array([anchor.x, anchor.y])
