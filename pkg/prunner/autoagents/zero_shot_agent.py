#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
This module provides the zero-shot baseline agent
"""

from prunner.autoagents.autonomous_agent import AutonomousAgent
from prunner.autoagents.prompt_builder import build_zero_shot_prompt
from prunner.autoagents.response_parser import parse_prediction


class ZeroShotAgent(AutonomousAgent):

    """
    Asks for the future speed and curvature in a single request, without reasoning
    """

    method = "Zero-shot"

    def run_step(self, history, images):
        reply = self.backend.complete(build_zero_shot_prompt(history, images, horizon_s=self.horizon_s))
        return parse_prediction(reply.text, self.horizon_points), None
