#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
This module provides the PlanManager implementation: it runs an agent over
scenes, scores its predictions and lifts detections into 3D boxes.
"""

from __future__ import print_function

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor

from prunner.autoagents.mllm_client import EmptyCompletion, HttpError, ImageUnreadable, TransportError
from prunner.autoagents.replay_store import ReplayMiss
from prunner.autoagents.response_parser import ResponseParseError
from prunner.exceptions import DataError
from prunner.metrics.planning_metrics import FailureCause, UnknownScene, aggregate, failed_score, score_sample
from prunner.metrics.tools.predictions_log import PredictionRecord, PredictionsLog
from prunner.tools.detection3d import (BehindCamera, Box2D, Box3D, Detection, InvalidDims, LiftedBox,
                                       NoValidConfiguration, lift_box)
from prunner.tools.scene_helper import InsufficientFuture, InsufficientHistory, ground_truth_future, select_anchor

LOGGER = logging.getLogger(__name__)

NO_RESPONSE_ERRORS = (TransportError, HttpError, EmptyCompletion, ReplayMiss, ImageUnreadable)


class DetectionParse(DataError):

    """
    Raised when a detections or boxes file line cannot be read
    """

    def __init__(self, path, line, reason):
        super(DetectionParse, self).__init__("{}:{}: {}".format(path, line, reason))
        self.path = path
        self.line = line


class PlanManager(object):

    """
    Basic plan manager class. It runs one agent over a list of scenes,
    one sample per scene at the first anchor with a full history and future.

    To use the PlanManager:
    1. Create an object via manager = PlanManager(agent)
    2. Run the agent via log, n_skipped = manager.run_scenes(scenes)
    3. Score the predictions with manager.evaluate(log, scenes, model, method)
    """

    def __init__(self, agent, horizon_s=5, workers=1, l2_mode='point'):
        self._agent = agent
        self._horizon_s = horizon_s
        self._workers = max(1, int(workers))
        self._l2_mode = l2_mode

    def _run_scene(self, scene):
        """
        Plans one scene. Returns its PredictionRecord, None if the scene is skipped
        """
        anchor = select_anchor(scene, self._horizon_s)
        if anchor is None:
            LOGGER.info("Scene %s skipped: %d frames are not enough", scene.scene_id, len(scene))
            return None

        try:
            step = self._agent(scene, anchor)
        except (InsufficientHistory, InsufficientFuture) as e:
            LOGGER.info("Scene %s skipped: %s", scene.scene_id, e)
            return None
        except ResponseParseError as e:
            LOGGER.warning("Scene %s frame %d: unusable reply (%s)", scene.scene_id, anchor, e)
            return PredictionRecord(scene.scene_id, anchor, failed=True, failure_cause=FailureCause.ParseError)
        except NO_RESPONSE_ERRORS as e:
            LOGGER.error("Scene %s frame %d: no reply (%s)", scene.scene_id, anchor, e)
            return PredictionRecord(scene.scene_id, anchor, failed=True, failure_cause=FailureCause.NoResponse)

        return PredictionRecord(scene.scene_id, anchor, points=step.trajectory.points)

    def run_scenes(self, scenes):
        """
        Runs the agent over all scenes with a bounded pool of workers.

        :return: tuple (PredictionsLog ordered by (scene_id, sample_index), number of skipped scenes)
        """
        start = time.time()
        with ThreadPoolExecutor(max_workers=self._workers) as executor:
            results = list(executor.map(self._run_scene, scenes))

        records = [record for record in results if record is not None]
        n_skipped = len(results) - len(records)
        LOGGER.info("Planned %d scenes (%d skipped) in %.1f s", len(records), n_skipped, time.time() - start)
        return PredictionsLog(records), n_skipped

    def evaluate(self, log, scenes, model, method):
        """
        Scores a predictions log against the ground truth of the scenes.
        Scenes without any anchor count as skipped.

        :return: EvalReport
        """
        return evaluate_predictions(log, scenes, model, method, self._horizon_s, self._l2_mode)


def evaluate_predictions(log, scenes, model, method, horizon_s=5, l2_mode='point'):
    """
    Scores every record of a predictions log.

    :return: EvalReport
    """
    by_id = {scene.scene_id: scene for scene in scenes}
    scores = []
    for record in log:
        scene = by_id.get(record.scene_id)
        if scene is None:
            raise UnknownScene(record.scene_id)
        if record.failed:
            scores.append(failed_score(record.scene_id, record.sample_index, record.failure_cause))
            continue
        gt = ground_truth_future(scene, record.sample_index, horizon_s)
        scores.append(score_sample(record.trajectory(), gt, record.scene_id, record.sample_index, l2_mode))

    n_skipped = sum(1 for scene in scenes if select_anchor(scene, horizon_s) is None)
    return aggregate(scores, model, method=method, n_skipped=n_skipped)


def _read_jsonl(path):
    try:
        with open(path, 'r', encoding='utf-8') as fd:
            lines = fd.readlines()
    except OSError as e:
        raise DetectionParse(path, 0, e.strerror or str(e))
    for number, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            yield number, json.loads(line)
        except json.JSONDecodeError as e:
            raise DetectionParse(path, number, e.msg)


def lift_detections(path, scene):
    """
    Lifts every detection of a JSONL file into a 3D box. A detection line reads
    {"frame": int, "box2d": [x_min, y_min, x_max, y_max], "dims_lwh": [l, w, h], "alpha": f, "class": str}
    and uses the intrinsics of its frame. Detections that cannot be lifted are dropped.

    :return: list of (frame index, LiftedBox)
    """
    lifted = []
    for number, entry in _read_jsonl(path):
        try:
            frame = int(entry["frame"])
            if frame < 0:
                raise IndexError("negative frame index")
            detection = Detection(box=Box2D(*[float(v) for v in entry["box2d"]]),
                                  dims=tuple(float(v) for v in entry["dims_lwh"]),
                                  alpha=float(entry["alpha"]),
                                  label=str(entry.get("class", "")))
            intrinsics = scene.frames[frame].camera.intrinsics
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise DetectionParse(path, number, "invalid detection ({})".format(e))

        try:
            lifted.append((frame, lift_box(detection, intrinsics)))
        except (InvalidDims, BehindCamera, NoValidConfiguration) as e:
            LOGGER.warning("%s:%d: detection dropped (%s)", path, number, e)
    return lifted


def write_boxes(path, scene_id, lifted):
    """
    Writes lifted boxes as JSONL, one
    {"scene_id", "frame", "t", "dims_lwh", "yaw", "reprojection_error", "class"} per line
    """
    with open(path, 'w', encoding='utf-8') as fd:
        for frame, item in lifted:
            fd.write(json.dumps({
                "scene_id": scene_id,
                "frame": frame,
                "t": list(item.box.t),
                "dims_lwh": list(item.box.dims),
                "yaw": item.box.yaw,
                "reprojection_error": item.reprojection_error,
                "class": item.label,
            }) + "\n")


def read_boxes(path):
    """
    Reads a file written by write_boxes.

    :return: dict (scene_id, frame) -> list of LiftedBox
    """
    boxes = {}
    for number, entry in _read_jsonl(path):
        try:
            key = (str(entry["scene_id"]), int(entry["frame"]))
            item = LiftedBox(box=Box3D(t=entry["t"], dims=entry["dims_lwh"], yaw=float(entry["yaw"])),
                             reprojection_error=float(entry.get("reprojection_error", 0.0)),
                             label=str(entry.get("class", "")))
        except (KeyError, IndexError, TypeError, ValueError, DataError) as e:
            raise DetectionParse(path, number, "invalid box ({})".format(e))
        boxes.setdefault(key, []).append(item)
    return boxes


def output_path(directory, name):
    """
    Path of an output file, creating its directory
    """
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, name)
