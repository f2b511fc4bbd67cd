#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
SVG figures of predictions: bird's-eye views of predicted and ground truth
trajectories, and overlays of trajectories and 3D boxes on the front camera image.

Output only depends on the inputs; all coordinates are written with 2 decimals.
"""

import math
import xml.etree.ElementTree as ET

import numpy as np

from prunner.exceptions import DataError
from prunner.planconfigs.scene_configuration import CameraCalibration
from prunner.tools.detection3d import BehindCamera, Box3D, box_corners, box_edges, project_box

SVG_NAMESPACE = "http://www.w3.org/2000/svg"
XLINK_NAMESPACE = "http://www.w3.org/1999/xlink"

# BEV pixels per meter, tick spacing and margin [m]
BEV_SCALE = 10.0
TICK_SPACING = 5.0
BEV_MARGIN = 5.0

# Points closer to the image plane are not projected
MIN_DEPTH = 1e-6

PREDICTION_COLOR = "#e41a1c"
GROUND_TRUTH_COLOR = "#377eb8"
DEFAULT_BOX_COLOR = "#ff7f00"
CLASS_COLORS = {
    "car": "#ff69b4",
    "truck": "#2ca02c",
    "trailer": "#ffd700",
    "pedestrian": "#1f77b4",
    "traffic_cone": "#ffffff",
}

# Bottom face corners (y = +h/2, the camera y axis points down) in drawing order
FOOTPRINT_CORNERS = (2, 3, 7, 6)


class BadCalibration(DataError):

    """
    Raised when a frame calibration cannot be used to draw an overlay
    """


def _fmt(value):
    return "{:.2f}".format(value + 0.0)


def _points_attribute(points):
    return " ".join("{},{}".format(_fmt(u), _fmt(v)) for u, v in points)


def class_color(label):
    """
    Colour of a box class, DEFAULT_BOX_COLOR for unknown classes
    """
    key = (label or "").strip().lower().replace(" ", "_").replace("-", "_")
    return CLASS_COLORS.get(key, DEFAULT_BOX_COLOR)


def _unpack_box(item):
    """
    Accepts a Box3D or anything holding one as .box (a LiftedBox), returns (Box3D, label)
    """
    if isinstance(item, Box3D):
        return item, ""
    return item.box, getattr(item, 'label', "")


def _to_svg(root):
    return ET.tostring(root, encoding='unicode') + "\n"


def _svg_root(view_box, width, height):
    return ET.Element("svg", {
        "xmlns": SVG_NAMESPACE,
        "xmlns:xlink": XLINK_NAMESPACE,
        "version": "1.1",
        "width": _fmt(width),
        "height": _fmt(height),
        "viewBox": " ".join(_fmt(v) for v in view_box),
    })


def _sub(parent, tag, attributes=None, text=None):
    element = ET.SubElement(parent, tag, attributes or {})
    if text is not None:
        element.text = text
    return element


def _bev(points):
    """
    Ego frame (x forward, y left) to BEV drawing coordinates (forward is up)
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return np.stack([-points[:, 1], -points[:, 0]], axis=1) * BEV_SCALE


def _footprint(box, calibration):
    """
    Ego-frame (x, y) of the bottom corners of a camera-frame box
    """
    corners = box_corners(box)[list(FOOTPRINT_CORNERS)]
    if calibration is not None:
        return calibration.camera_to_ego(corners)[:, :2]
    return np.stack([corners[:, 2], -corners[:, 0]], axis=1)


def render_bev(pred, gt, objects=None, calibration=None):
    """
    Bird's-eye view of a prediction.

    :param pred: predicted Trajectory (ego frame), drawn solid
    :param gt: ground truth Trajectory (ego frame), drawn dashed
    :param objects: optional Box3D / LiftedBox list in the camera frame
    :param calibration: CameraCalibration placing the boxes in the ego frame.
        Without it the camera is taken at the ego origin looking forward.
    :return: SVG document
    """
    objects = list(objects or [])
    footprints = [(_footprint(box, calibration), label) for box, label in map(_unpack_box, objects)]

    extent = [np.zeros((1, 2)), pred.as_array(), gt.as_array()] + [points for points, _ in footprints]
    everything = np.concatenate(extent, axis=0)
    lower = np.floor((everything.min(axis=0) - BEV_MARGIN) / TICK_SPACING) * TICK_SPACING
    upper = np.ceil((everything.max(axis=0) + BEV_MARGIN) / TICK_SPACING) * TICK_SPACING

    # Drawing x is -y, drawing y is -x
    min_u, max_u = -upper[1] * BEV_SCALE, -lower[1] * BEV_SCALE
    min_v, max_v = -upper[0] * BEV_SCALE, -lower[0] * BEV_SCALE
    width, height = max_u - min_u, max_v - min_v
    root = _svg_root((min_u, min_v, width, height), width, height)

    ticks = _sub(root, "g", {"id": "ticks", "stroke": "#cccccc", "stroke-width": "1", "font-size": "10"})
    for forward in np.arange(lower[0], upper[0] + TICK_SPACING / 2, TICK_SPACING):
        v = -forward * BEV_SCALE
        _sub(ticks, "line", {"x1": _fmt(min_u), "y1": _fmt(v), "x2": _fmt(max_u), "y2": _fmt(v)})
        _sub(ticks, "text", {"x": _fmt(min_u + 2), "y": _fmt(v - 2)}, "{:g} m".format(forward + 0.0))
    for left in np.arange(lower[1], upper[1] + TICK_SPACING / 2, TICK_SPACING):
        u = -left * BEV_SCALE
        _sub(ticks, "line", {"x1": _fmt(u), "y1": _fmt(min_v), "x2": _fmt(u), "y2": _fmt(max_v)})
        _sub(ticks, "text", {"x": _fmt(u + 2), "y": _fmt(max_v - 2)}, "{:g} m".format(left + 0.0))

    if footprints:
        group = _sub(root, "g", {"id": "objects"})
        for points, label in footprints:
            _sub(group, "polygon", {"points": _points_attribute(_bev(points)), "fill": "none",
                                    "stroke": class_color(label), "stroke-width": "2"})

    _sub(root, "polyline", {"id": "ground_truth", "points": _points_attribute(_bev(gt.as_array())),
                            "fill": "none", "stroke": GROUND_TRUTH_COLOR, "stroke-width": "2",
                            "stroke-dasharray": "6,4"})
    _sub(root, "polyline", {"id": "prediction", "points": _points_attribute(_bev(pred.as_array())),
                            "fill": "none", "stroke": PREDICTION_COLOR, "stroke-width": "2"})
    _sub(root, "circle", {"id": "ego", "cx": "0.00", "cy": "0.00", "r": "5.00",
                          "fill": "#000000"})

    legend = _sub(root, "g", {"id": "legend", "font-size": "12"})
    for row, (name, color, dash) in enumerate((("prediction", PREDICTION_COLOR, None),
                                               ("ground truth", GROUND_TRUTH_COLOR, "6,4"))):
        v = min_v + 15 + 15 * row
        attributes = {"x1": _fmt(min_u + 5), "y1": _fmt(v), "x2": _fmt(min_u + 25), "y2": _fmt(v),
                      "stroke": color, "stroke-width": "2"}
        if dash:
            attributes["stroke-dasharray"] = dash
        _sub(legend, "line", attributes)
        _sub(legend, "text", {"x": _fmt(min_u + 30), "y": _fmt(v + 4)}, name)

    return _to_svg(root)


def _project_ground_points(points, calibration):
    """
    Pixels of the ego-frame trajectory points lying on the ground plane, points behind the camera dropped
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    ground = np.concatenate([points, np.zeros((len(points), 1))], axis=1)
    camera = calibration.ego_to_camera(ground)
    camera = camera[camera[:, 2] > MIN_DEPTH]
    intrinsics = calibration.intrinsics
    u = intrinsics.fx * camera[:, 0] / camera[:, 2] + intrinsics.cx
    v = intrinsics.fy * camera[:, 1] / camera[:, 2] + intrinsics.cy
    return np.stack([u, v], axis=1)


def render_overlay(frame, pred, boxes=(), image_href=None):
    """
    Trajectory and 3D boxes drawn over the front camera image.

    The image is assumed centered on the principal point, so the document
    is 2 * cx by 2 * cy pixels.

    :param frame: Frame whose image and calibration are used
    :param pred: predicted Trajectory (ego frame)
    :param boxes: Box3D / LiftedBox list in the camera frame
    :param image_href: background image reference, frame.image_path by default
    :return: SVG document
    """
    calibration = frame.camera
    if not isinstance(calibration, CameraCalibration):
        raise BadCalibration("Frame has no camera calibration")
    intrinsics = calibration.intrinsics
    width, height = 2.0 * intrinsics.cx, 2.0 * intrinsics.cy
    if not (width > 0 and height > 0 and math.isfinite(width) and math.isfinite(height)):
        raise BadCalibration("Principal point ({}, {}) does not define an image".format(intrinsics.cx,
                                                                                        intrinsics.cy))

    root = _svg_root((0.0, 0.0, width, height), width, height)
    _sub(root, "image", {"xlink:href": image_href or frame.image_path,
                         "x": "0.00", "y": "0.00", "width": _fmt(width), "height": _fmt(height)})

    pixels = _project_ground_points(pred.as_array(), calibration)
    trajectory = _sub(root, "g", {"id": "trajectory", "fill": PREDICTION_COLOR})
    if len(pixels) >= 2:
        _sub(trajectory, "polyline", {"points": _points_attribute(pixels), "fill": "none",
                                      "stroke": PREDICTION_COLOR, "stroke-width": "3"})
    for u, v in pixels:
        _sub(trajectory, "circle", {"cx": _fmt(u), "cy": _fmt(v), "r": "3.00"})

    for index, (box, label) in enumerate(map(_unpack_box, boxes)):
        try:
            corners, _ = project_box(box, intrinsics)
        except BehindCamera:
            continue
        group = _sub(root, "g", {"id": "box{}".format(index), "stroke": class_color(label), "stroke-width": "2"})
        for start, end in box_edges():
            _sub(group, "line", {"x1": _fmt(corners[start][0]), "y1": _fmt(corners[start][1]),
                                 "x2": _fmt(corners[end][0]), "y2": _fmt(corners[end][1])})

    return _to_svg(root)
