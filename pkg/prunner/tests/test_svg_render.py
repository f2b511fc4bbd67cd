#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Unit tests of the SVG figures
"""

import os
import xml.etree.ElementTree as ET
from unittest import TestCase

import numpy as np

from prunner.planconfigs.scene_configuration import Frame
from prunner.tools.detection3d import Box3D, box_corners
from prunner.tools.kinematics import Pose2D, Trajectory
from prunner.tools.manifest_parser import ManifestParser
from prunner.tools.svg_render import (CLASS_COLORS, DEFAULT_BOX_COLOR, FOOTPRINT_CORNERS, BadCalibration, class_color,
                                      render_bev, render_overlay)

SCENES = os.path.join(os.path.dirname(__file__), '..', 'data', 'scenes')
SVG = "{http://www.w3.org/2000/svg}"


def _straight(step=2.0, lateral=0.0):
    return Trajectory(dt=0.5, points=[(step * i, lateral * i) for i in range(11)])


class TestBirdsEyeView(TestCase):

    """
    Predicted and ground truth trajectories seen from above
    """

    def test_structure(self):
        document = render_bev(_straight(), _straight(lateral=0.2))
        root = ET.fromstring(document)
        self.assertEqual(root.tag, SVG + "svg")
        polylines = root.findall(SVG + "polyline")
        self.assertEqual(len(polylines), 2)
        ground_truth = [line for line in polylines if line.get("stroke-dasharray")]
        self.assertEqual([line.get("id") for line in ground_truth], ["ground_truth"])
        self.assertEqual(root.find(SVG + "circle").get("r"), "5.00")
        self.assertIsNone(root.find(SVG + "g[@id='objects']"))
        self.assertIsNone(root.find(SVG + "rect"))

    def test_forward_is_up(self):
        root = ET.fromstring(render_bev(_straight(), _straight()))
        prediction = root.find(SVG + "polyline[@id='prediction']")
        last = prediction.get("points").split()[-1]
        self.assertEqual(last, "0.00,-200.00")

    def test_objects(self):
        boxes = [Box3D(t=(0.0, 0.7, 15.0), dims=(4.5, 1.9, 1.6), yaw=0.0)]
        root = ET.fromstring(render_bev(_straight(), _straight(), boxes))
        polygons = root.findall(SVG + "g[@id='objects']/" + SVG + "polygon")
        self.assertEqual(len(polygons), 1)
        self.assertEqual(polygons[0].get("stroke"), DEFAULT_BOX_COLOR)

    def test_deterministic(self):
        self.assertEqual(render_bev(_straight(), _straight(lateral=-0.3)),
                         render_bev(_straight(), _straight(lateral=-0.3)))

    def test_class_colors(self):
        self.assertEqual(class_color("Traffic cone"), CLASS_COLORS["traffic_cone"])
        self.assertEqual(class_color("car"), "#ff69b4")
        self.assertEqual(class_color("bus"), DEFAULT_BOX_COLOR)

    def test_footprint_is_bottom_face(self):
        calibration = ManifestParser.load_manifest(os.path.join(SCENES, 'scene-0001.json')).frames[10].camera
        # Resting on the ground: the camera is 1.5 m above it, the box 1.6 m high
        box = Box3D(t=(1.0, 0.7, 15.0), dims=(4.5, 1.9, 1.6), yaw=0.4)
        bottom = calibration.camera_to_ego(box_corners(box)[list(FOOTPRINT_CORNERS)])
        np.testing.assert_allclose(bottom[:, 2], 0.0, atol=1e-9)


class TestOverlay(TestCase):

    """
    Trajectory and boxes over the front camera image
    """

    def setUp(self):
        self.frame = ManifestParser.load_manifest(os.path.join(SCENES, 'scene-0001.json')).frames[10]

    def test_structure(self):
        boxes = [Box3D(t=(2.0, 0.7, 15.0), dims=(4.5, 1.9, 1.6), yaw=0.3),
                 Box3D(t=(0.0, 0.7, 0.5), dims=(4.5, 1.9, 1.6), yaw=0.0)]
        root = ET.fromstring(render_overlay(self.frame, _straight(), boxes, image_href="frame.png"))
        intrinsics = self.frame.camera.intrinsics
        self.assertEqual(root.get("width"), "{:.2f}".format(2 * intrinsics.cx))
        self.assertEqual(root.get("height"), "{:.2f}".format(2 * intrinsics.cy))
        self.assertEqual(root.find(SVG + "image").get("{http://www.w3.org/1999/xlink}href"), "frame.png")

        # The anchor point is behind the camera, the ten others are drawn
        circles = root.findall(SVG + "g[@id='trajectory']/" + SVG + "circle")
        self.assertEqual(len(circles), 10)
        for circle in circles:
            self.assertAlmostEqual(float(circle.get("cx")), intrinsics.cx, delta=0.01)
            self.assertGreater(float(circle.get("cy")), intrinsics.cy)

        # The box straddling the camera plane is not drawn
        groups = [group for group in root.findall(SVG + "g") if group.get("id", "").startswith("box")]
        self.assertEqual(len(groups), 1)
        self.assertEqual(len(groups[0].findall(SVG + "line")), 12)

    def test_straight_path_rises_in_image(self):
        root = ET.fromstring(render_overlay(self.frame, _straight()))
        rows = [float(circle.get("cy")) for circle in root.findall(SVG + "g[@id='trajectory']/" + SVG + "circle")]
        self.assertEqual(len(rows), 10)
        for nearer, farther in zip(rows, rows[1:]):
            self.assertGreater(nearer, farther)

    def test_points_behind_are_clipped(self):
        pred = Trajectory(dt=0.5, points=[(0.0, 0.0), (-5.0, 0.0), (5.0, 0.0), (10.0, 0.0)])
        root = ET.fromstring(render_overlay(self.frame, pred))
        self.assertEqual(len(root.findall(SVG + "g[@id='trajectory']/" + SVG + "circle")), 2)

    def test_missing_calibration(self):
        frame = Frame(timestamp=0, image_path="frame.png", ego=Pose2D(0.0, 0.0, 0.0), camera=None)
        with self.assertRaises(BadCalibration):
            render_overlay(frame, _straight())
