#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
This module provides the base class for all planning agents
"""

import logging
from dataclasses import dataclass
from typing import Optional

from prunner.autoagents.prompt_builder import ReasoningOutput
from prunner.autoagents.response_parser import ParsedPrediction
from prunner.tools.kinematics import ControlProfile, Trajectory, integrate_trajectory
from prunner.tools.scene_helper import EgoHistory, ego_history, frame_images, future_points

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class AgentStep(object):

    """
    Everything an agent produced for one anchor keyframe
    """

    history: EgoHistory
    prediction: ParsedPrediction
    trajectory: Trajectory
    reasoning: Optional[ReasoningOutput] = None


def integrate_prediction(history, prediction):
    """
    Integrates the predicted samples in the ego frame (heading 0, origin (0, 0)),
    the current speed and curvature being the sample at time 0.

    :return: Trajectory with len(prediction.speed) + 1 points
    """
    profile = ControlProfile(dt=history.dt,
                             speed=(history.current_speed,) + tuple(prediction.speed),
                             curvature=(history.current_curvature,) + tuple(prediction.curvature))
    return integrate_trajectory(profile, theta0=0.0, origin=(0.0, 0.0))


class AutonomousAgent(object):

    """
    Planning agent base class. All agents have to be derived from this class
    and implement run_step.
    """

    method = None

    def __init__(self, backend, horizon_s=5, frames=1):
        self.backend = backend
        self.horizon_s = horizon_s
        self.horizon_points = future_points(horizon_s)
        self.frames = frames

        # agent's initialization
        self.setup()

    def setup(self):
        """
        Initialize everything needed by the agent
        """

    def run_step(self, history, images):
        """
        Queries the model for one anchor keyframe.

        :param history: EgoHistory at the anchor
        :param images: front camera images, the anchor image last
        :return: tuple (ParsedPrediction, ReasoningOutput or None)
        """
        raise NotImplementedError("This function must be re-implemented by the agents")

    def destroy(self):
        """
        Destroy (clean-up) the agent
        """

    def __call__(self, scene, anchor_index):
        """
        Plans the future trajectory of the ego vehicle at the anchor keyframe of a scene
        """
        history = ego_history(scene, anchor_index)
        images = frame_images(scene, anchor_index, self.frames)

        prediction, reasoning = self.run_step(history, images)
        LOGGER.debug("Scene %s frame %d: speed %s curvature %s", scene.scene_id, anchor_index,
                     prediction.speed, prediction.curvature)

        return AgentStep(history=history,
                         prediction=prediction,
                         trajectory=integrate_prediction(history, prediction),
                         reasoning=reasoning)
