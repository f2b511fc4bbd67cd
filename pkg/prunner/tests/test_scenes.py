#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Unit tests of the scene manifests and of the planner inputs derived from them
"""

import copy
import json
import math
import os
import tempfile
from unittest import TestCase

import numpy as np

from prunner.tools.manifest_parser import ManifestInvalid, ManifestNotFound, ManifestParse, ManifestParser
from prunner.tools.scene_helper import (HISTORY_SAMPLES, InsufficientFuture, InsufficientHistory, ego_history,
                                        frame_images, future_points, ground_truth_future, select_anchor)

SCENES = os.path.join(os.path.dirname(__file__), '..', 'data', 'scenes')


def _load(scene_id):
    return ManifestParser.load_manifest(os.path.join(SCENES, scene_id + '.json'))


def _document(scene_id='scene-0001'):
    with open(os.path.join(SCENES, scene_id + '.json'), 'r', encoding='utf-8') as fd:
        return json.load(fd)


class TestManifestParser(TestCase):

    """
    Loading and validating scene manifests
    """

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self._tmp.cleanup()

    def _write(self, document, name='scene.json'):
        path = os.path.join(self._tmp.name, name)
        with open(path, 'w', encoding='utf-8') as fd:
            if isinstance(document, str):
                fd.write(document)
            else:
                json.dump(document, fd)
        return path

    def test_load_fixture_scenes(self):
        scenes = ManifestParser.load_scenes(SCENES)
        self.assertEqual([scene.scene_id for scene in scenes],
                         ['scene-0001', 'scene-0002', 'scene-0003', 'scene-0004', 'scene-0005'])
        for scene in scenes:
            self.assertEqual(len(scene), 22)
            self.assertTrue(os.path.isfile(str(scene.image_file(0))))

    def test_quaternion_and_translation(self):
        camera = _load('scene-0001').frames[0].camera
        # Forward on the ground one meter ahead of the camera
        point = camera.ego_to_camera([[2.5, 0.0, 1.5]])[0]
        np.testing.assert_allclose(point, [0.0, 0.0, 1.0], atol=1e-9)
        np.testing.assert_allclose(camera.camera_to_ego([point])[0], [2.5, 0.0, 1.5], atol=1e-9)

    def test_missing_file(self):
        with self.assertRaises(ManifestNotFound):
            ManifestParser.load_manifest(os.path.join(self._tmp.name, 'absent.json'))
        with self.assertRaises(ManifestNotFound):
            ManifestParser.load_scenes(os.path.join(self._tmp.name, 'absent'))

    def test_invalid_json_reports_line(self):
        path = self._write('{\n  "scene_id": "x",\n  "frames": [,]\n}')
        with self.assertRaises(ManifestParse) as context:
            ManifestParser.load_manifest(path)
        self.assertEqual(context.exception.line, 3)

    def test_missing_field_names_field_and_frame(self):
        document = _document()
        del document['frames'][4]['ego']['yaw']
        with self.assertRaises(ManifestParse) as context:
            ManifestParser.load_manifest(self._write(document))
        self.assertEqual(context.exception.field, 'ego.yaw')
        self.assertEqual(context.exception.frame_index, 4)

    def test_non_monotonic_timestamps(self):
        document = _document()
        document['frames'][3]['timestamp_us'] = document['frames'][2]['timestamp_us']
        with self.assertRaises(ManifestInvalid) as context:
            ManifestParser.load_manifest(self._write(document))
        self.assertIn('non-monotonic', context.exception.reason)

    def test_irregular_spacing(self):
        document = _document()
        for frame in document['frames'][5:]:
            frame['timestamp_us'] += 100000
        with self.assertRaises(ManifestInvalid) as context:
            ManifestParser.load_manifest(self._write(document))
        self.assertIn('irregular', context.exception.reason)

    def test_spacing_within_tolerance(self):
        document = _document()
        for frame in document['frames'][5:]:
            frame['timestamp_us'] += 40000
        self.assertEqual(len(ManifestParser.load_manifest(self._write(document))), 22)

    def test_empty_scene_and_image_path(self):
        with self.assertRaises(ManifestInvalid):
            ManifestParser.load_manifest(self._write({"scene_id": "empty", "frames": []}))
        document = _document()
        document['frames'][0]['image_path'] = ""
        with self.assertRaises(ManifestInvalid):
            ManifestParser.load_manifest(self._write(document))

    def test_non_unit_quaternion(self):
        document = _document()
        document['frames'][1]['camera']['cam_from_ego']['q_wxyz'] = [1.0, 0.1, 0.0, 0.0]
        with self.assertRaises(ManifestInvalid):
            ManifestParser.load_manifest(self._write(document))

    def test_non_finite_calibration(self):
        for key, values in (('q_wxyz', [float('nan'), 0.0, 0.0, 0.0]), ('t', [0.0, float('inf'), -1.5])):
            document = _document()
            document['frames'][2]['camera']['cam_from_ego'][key] = values
            with self.assertRaises(ManifestInvalid) as context:
                ManifestParser.load_manifest(self._write(document))
            self.assertIn("Frame 2", str(context.exception))

    def test_duplicate_scene_ids(self):
        document = _document()
        self._write(document, 'a.json')
        self._write(copy.deepcopy(document), 'b.json')
        with self.assertRaises(ManifestInvalid):
            ManifestParser.load_scenes(self._tmp.name)

    def test_dump_and_reload(self):
        scene = _load('scene-0003')
        path = os.path.join(self._tmp.name, 'copy.json')
        ManifestParser.dump_manifest(scene, path)
        reloaded = ManifestParser.load_manifest(path)
        self.assertEqual(reloaded.scene_id, scene.scene_id)
        self.assertEqual([f.timestamp for f in reloaded.frames], [f.timestamp for f in scene.frames])
        for original, copied in zip(scene.frames, reloaded.frames):
            self.assertAlmostEqual(original.ego.x, copied.ego.x, delta=1e-12)
            self.assertAlmostEqual(original.ego.y, copied.ego.y, delta=1e-12)
            self.assertAlmostEqual(original.ego.yaw, copied.ego.yaw, delta=1e-12)
            self.assertEqual(original.camera, copied.camera)


class TestSceneHelper(TestCase):

    """
    Ego history, ground truth futures and anchors
    """

    def test_straight_history(self):
        history = ego_history(_load('scene-0001'), 10)
        self.assertEqual(len(history.speed), HISTORY_SAMPLES)
        np.testing.assert_allclose(history.speed, 4.0, atol=1e-3)
        np.testing.assert_allclose(history.curvature, 0.0, atol=1e-3)
        self.assertAlmostEqual(history.current_speed, 4.0, delta=1e-3)

    def test_left_arc_history(self):
        history = ego_history(_load('scene-0002'), 10)
        np.testing.assert_allclose(history.curvature, 0.05, atol=1e-2)
        self.assertAlmostEqual(history.current_curvature, 0.05, delta=1e-2)
        np.testing.assert_allclose(history.speed, 4.0, atol=0.05)

    def test_right_arc_history(self):
        history = ego_history(_load('scene-0003'), 10)
        np.testing.assert_allclose(history.curvature, -1.0 / 30.0, atol=1e-2)

    def test_stationary_history(self):
        history = ego_history(_load('scene-0005'), 10)
        self.assertEqual(history.speed, (0.0,) * HISTORY_SAMPLES)
        self.assertEqual(history.curvature, (0.0,) * HISTORY_SAMPLES)

    def test_insufficient_history(self):
        with self.assertRaises(InsufficientHistory):
            ego_history(_load('scene-0001'), 9)

    def test_ground_truth_is_ego_frame(self):
        future = ground_truth_future(_load('scene-0001'), 10, horizon_s=5)
        self.assertEqual(len(future), 11)
        self.assertEqual(future.points[0], (0.0, 0.0))
        for i, (x, y) in enumerate(future.points):
            self.assertAlmostEqual(x, 2.0 * i, delta=1e-4)
            self.assertAlmostEqual(y, 0.0, delta=1e-4)

    def test_ground_truth_turns_left(self):
        future = ground_truth_future(_load('scene-0002'), 10, horizon_s=5)
        radius, step = 20.0, 2.0 / 20.0
        for i, (x, y) in enumerate(future.points):
            self.assertAlmostEqual(x, radius * math.sin(i * step), delta=1e-3)
            self.assertAlmostEqual(y, radius * (1.0 - math.cos(i * step)), delta=1e-3)

    def test_insufficient_future(self):
        scene = _load('scene-0001')
        with self.assertRaises(InsufficientFuture):
            ground_truth_future(scene, 12, horizon_s=5)
        self.assertEqual(len(ground_truth_future(scene, 11, horizon_s=5)), 11)

    def test_select_anchor(self):
        scene = _load('scene-0004')
        self.assertEqual(future_points(5), 10)
        self.assertEqual(select_anchor(scene, 5), 10)
        self.assertIsNone(select_anchor(scene, 6))

    def test_frame_images(self):
        scene = _load('scene-0001')
        names = [os.path.basename(str(path)) for path in frame_images(scene, 10, 3)]
        self.assertEqual(names, ['008.png', '009.png', '010.png'])
        self.assertEqual(len(frame_images(scene, 10, 10)), 10)
        with self.assertRaises(ValueError):
            frame_images(scene, 10, 11)
        with self.assertRaises(ValueError):
            frame_images(scene, 10, 0)
