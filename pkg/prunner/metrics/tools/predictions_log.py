#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Support class to write and query the predictions of a run.

One JSON object per line:
{"scene_id": str, "sample_index": int, "points": [[x, y], ...], "failed": bool, "failure_cause": str}
"""

import json
from dataclasses import dataclass
from typing import Tuple

from prunner.exceptions import DataError
from prunner.metrics.planning_metrics import FailureCause
from prunner.planconfigs.scene_configuration import KEYFRAME_DT
from prunner.tools.kinematics import Trajectory


class PredictionsParse(DataError):

    """
    Raised when a predictions file line cannot be read
    """

    def __init__(self, path, line, reason):
        super(PredictionsParse, self).__init__("{}:{}: {}".format(path, line, reason))
        self.path = path
        self.line = line


@dataclass(frozen=True)
class PredictionRecord(object):

    """
    Prediction of one sample. Failed records have no points.
    """

    scene_id: str
    sample_index: int
    points: Tuple[Tuple[float, float], ...] = ()
    failed: bool = False
    failure_cause: FailureCause = FailureCause.NoFailure

    def __post_init__(self):
        object.__setattr__(self, 'points', tuple((float(x), float(y)) for x, y in self.points))

    def trajectory(self, dt=KEYFRAME_DT):
        """
        Predicted Trajectory, None for failed records
        """
        if self.failed or not self.points:
            return None
        return Trajectory(dt=dt, points=self.points)

    def to_dict(self):
        return {
            "scene_id": self.scene_id,
            "sample_index": self.sample_index,
            "points": [[x, y] for x, y in self.points],
            "failed": self.failed,
            "failure_cause": self.failure_cause.value,
        }


def _record(entry):
    if not isinstance(entry, dict):
        raise ValueError("not a JSON object")
    for key in ("scene_id", "sample_index", "points", "failed", "failure_cause"):
        if key not in entry:
            raise ValueError("missing field '{}'".format(key))
    failed = entry["failed"]
    if not isinstance(failed, bool):
        raise ValueError("'failed' is not a boolean")
    cause = FailureCause(entry["failure_cause"])
    if failed != (cause is not FailureCause.NoFailure):
        raise ValueError("'failed' is {} but 'failure_cause' is '{}'".format(
            str(failed).lower(), cause.value))
    points = [(x, y) for x, y in entry["points"]]
    if not failed and not points:
        raise ValueError("a prediction which did not fail has no points")
    return PredictionRecord(scene_id=str(entry["scene_id"]),
                            sample_index=int(entry["sample_index"]),
                            points=points,
                            failed=failed,
                            failure_cause=cause)


class PredictionsLog(object):

    """
    Predictions of a run, ordered by (scene_id, sample_index)
    """

    def __init__(self, records):
        self._records = sorted(records, key=lambda record: (record.scene_id, record.sample_index))

    def __iter__(self):
        return iter(self._records)

    def __len__(self):
        return len(self._records)

    def scene_ids(self):
        """
        Scenes with at least one record
        """
        return sorted({record.scene_id for record in self._records})

    def get_record(self, scene_id, sample_index):
        """
        Record of a sample, None if absent
        """
        for record in self._records:
            if record.scene_id == scene_id and record.sample_index == sample_index:
                return record
        return None

    def write(self, path):
        """
        Writes the records as JSONL
        """
        with open(path, 'w', encoding='utf-8') as fd:
            for record in self._records:
                fd.write(json.dumps(record.to_dict()) + "\n")

    @staticmethod
    def read(path):
        """
        Reads a predictions JSONL file
        """
        records = []
        try:
            with open(path, 'r', encoding='utf-8') as fd:
                lines = fd.readlines()
        except OSError as e:
            raise PredictionsParse(path, 0, e.strerror or str(e))

        for number, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                records.append(_record(json.loads(line)))
            except (ValueError, TypeError) as e:
                raise PredictionsParse(path, number, str(e))
        return PredictionsLog(records)
