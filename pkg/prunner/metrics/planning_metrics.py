#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Open-loop planning metrics.

A predicted trajectory is compared to the ground truth at the 1 s, 2 s and
3 s horizons. A prediction is a failure when it is more than
FAILURE_DISTANCE meters away from the ground truth within the first second,
or when the model gave no usable answer.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from prunner.exceptions import DataError

FAILURE_DISTANCE = 10.0
HORIZONS = (1, 2, 3)
L2_MODES = ('point', 'ade')

REPORT_COLUMNS = ["Method", "Model", "L2 (m) 1s", "L2 (m) 2s", "L2 (m) 3s", "L2 (m) avg", "Failure rate (%)"]


class LengthMismatch(DataError):

    """
    Raised when the compared trajectories differ in length or time step, or are too short
    """


class BadAnchor(DataError):

    """
    Raised when a trajectory does not start at the ego-frame origin
    """


class EmptyInput(DataError):

    """
    Raised when aggregating no scores
    """


class UnknownScene(DataError):

    """
    Raised when a prediction refers to a scene that is not loaded
    """

    def __init__(self, scene_id):
        super(UnknownScene, self).__init__("Unknown scene_id '{}'".format(scene_id))
        self.scene_id = scene_id


class FailureCause(Enum):

    """
    Why a sample failed
    """

    NoFailure = "None"
    ParseError = "ParseError"
    DivergedOver10m = "DivergedOver10m"
    NoResponse = "NoResponse"


@dataclass(frozen=True)
class SceneScore(object):

    """
    Score of one prediction sample; failed samples carry no L2 values
    """

    scene_id: str
    sample_index: int
    l2_1s: Optional[float] = None
    l2_2s: Optional[float] = None
    l2_3s: Optional[float] = None
    failed: bool = False
    failure_cause: FailureCause = FailureCause.NoFailure

    def __post_init__(self):
        if self.failed != (self.failure_cause is not FailureCause.NoFailure):
            raise ValueError("failed must be set exactly when there is a failure cause")
        present = [value is not None for value in self.l2s]
        if self.failed and any(present):
            raise ValueError("Failed samples carry no L2 values")
        if not self.failed and not all(present):
            raise ValueError("Successful samples carry all L2 values")

    @property
    def l2s(self):
        return (self.l2_1s, self.l2_2s, self.l2_3s)

    @property
    def l2_avg(self):
        """
        Mean of the three horizons, None for failed samples
        """
        if self.failed:
            return None
        return math.fsum(self.l2s) / len(HORIZONS)

    def to_dict(self):
        return {
            "scene_id": self.scene_id,
            "sample_index": self.sample_index,
            "l2_1s": self.l2_1s,
            "l2_2s": self.l2_2s,
            "l2_3s": self.l2_3s,
            "failed": self.failed,
            "failure_cause": self.failure_cause.value,
        }


def failed_score(scene_id, sample_index, cause):
    """
    SceneScore of a sample which failed for cause
    """
    return SceneScore(scene_id=scene_id, sample_index=sample_index, failed=True, failure_cause=cause)


def score_sample(pred, gt, scene_id="", sample_index=0, l2_mode='point'):
    """
    Scores a predicted trajectory against the ground truth.

    In point mode the L2 at h seconds is the distance at index 2h, in ade mode
    it is the mean distance over indices 1 to 2h.

    :param pred: predicted Trajectory, point 0 at the origin
    :param gt: ground truth Trajectory, point 0 at the origin
    :return: SceneScore
    """
    if l2_mode not in L2_MODES:
        raise ValueError("l2_mode must be one of {}, got {}".format(L2_MODES, l2_mode))
    if abs(pred.dt - gt.dt) > 1e-9:
        raise LengthMismatch("Time steps differ ({} vs {})".format(pred.dt, gt.dt))
    if len(pred) != len(gt):
        raise LengthMismatch("Trajectories have {} and {} points".format(len(pred), len(gt)))

    steps = [int(round(h / pred.dt)) for h in HORIZONS]
    if len(pred) <= steps[-1]:
        raise LengthMismatch("Trajectories need {} points, got {}".format(steps[-1] + 1, len(pred)))

    pred_points = pred.as_array()
    gt_points = gt.as_array()
    for name, points in (("prediction", pred_points), ("ground truth", gt_points)):
        if np.any(np.abs(points[0]) > 1e-9):
            raise BadAnchor("The {} starts at {} instead of the origin".format(name, tuple(points[0])))

    distances = np.linalg.norm(pred_points - gt_points, axis=1)
    if np.any(distances[1:steps[0] + 1] > FAILURE_DISTANCE):
        return failed_score(scene_id, sample_index, FailureCause.DivergedOver10m)

    if l2_mode == 'point':
        values = [float(distances[step]) for step in steps]
    else:
        values = [float(np.mean(distances[1:step + 1])) for step in steps]

    return SceneScore(scene_id=scene_id, sample_index=sample_index,
                      l2_1s=values[0], l2_2s=values[1], l2_3s=values[2])


@dataclass(frozen=True)
class EvalReport(object):

    """
    Aggregated scores of one model. Means are None when every sample failed.
    """

    model: str
    method: str
    n_samples: int
    n_skipped: int
    n_failed: int
    l2_1s_mean: Optional[float]
    l2_2s_mean: Optional[float]
    l2_3s_mean: Optional[float]
    l2_avg: Optional[float]
    failure_rate: float
    scores: Tuple[SceneScore, ...] = ()

    def row(self):
        """
        Values in REPORT_COLUMNS order
        """
        return [self.method, self.model, self.l2_1s_mean, self.l2_2s_mean, self.l2_3s_mean, self.l2_avg,
                self.failure_rate]


def _mean(values):
    return math.fsum(values) / len(values) if values else None


def aggregate(scores, model, method="CoT", n_skipped=0):
    """
    Aggregates sample scores.

    L2 means are taken over the successful samples, the failure rate over all
    scored samples. Skipped samples are only counted.

    :return: EvalReport
    """
    scores = sorted(scores, key=lambda score: (score.scene_id, score.sample_index))
    if not scores:
        raise EmptyInput("No scored sample to aggregate")

    survivors = [score for score in scores if not score.failed]
    means = [_mean([score.l2s[i] for score in survivors]) for i in range(len(HORIZONS))]
    l2_avg = math.fsum(means) / len(means) if survivors else None
    n_failed = len(scores) - len(survivors)

    return EvalReport(model=model,
                      method=method,
                      n_samples=len(scores),
                      n_skipped=n_skipped,
                      n_failed=n_failed,
                      l2_1s_mean=means[0],
                      l2_2s_mean=means[1],
                      l2_3s_mean=means[2],
                      l2_avg=l2_avg,
                      failure_rate=100.0 * n_failed / len(scores),
                      scores=tuple(scores))
