#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
This module provides the two stage chain-of-thought planning agent
"""

import logging

from prunner.autoagents.autonomous_agent import AutonomousAgent
from prunner.autoagents.prompt_builder import build_prediction_prompt, build_reasoning_prompt
from prunner.autoagents.response_parser import parse_prediction, parse_reasoning

LOGGER = logging.getLogger(__name__)


class CoTAgent(AutonomousAgent):

    """
    Asks for the intent, the scene description and the major objects first,
    then for the future speed and curvature given that reasoning.
    The images are attached to both requests.
    """

    method = "CoT"

    def run_step(self, history, images):
        """
        Execute one planning step.
        """
        reply = self.backend.complete(build_reasoning_prompt(history, images))
        reasoning = parse_reasoning(reply.text)
        LOGGER.debug("Intent: %s / %s, %d major objects", reasoning.intent_maneuver.name,
                     reasoning.intent_speed.name, len(reasoning.critical_objects))

        bundle = build_prediction_prompt(reasoning, history, horizon_s=self.horizon_s, images=images)
        reply = self.backend.complete(bundle)
        return parse_prediction(reply.text, self.horizon_points), reasoning
