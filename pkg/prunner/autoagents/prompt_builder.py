#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Prompt bundles sent to the vision-language model.

The chain-of-thought planner asks twice: a reasoning stage returning the
"Intent Command:", "Scene Description:" and "Major Objects:" sections, then a
prediction stage which embeds those sections and asks for the future
"Speed:" and "Curvature:" lists. The zero-shot baseline skips the reasoning stage.

Templates are the UTF-8 files of the prompts/ directory. Placeholders are
written {{name}}.
"""

import mimetypes
import os
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from prunner.exceptions import DataError
from prunner.planconfigs.scene_configuration import KEYFRAME_DT
from prunner.tools.scene_helper import MAX_FRAMES, future_points

PROMPTS_DIRECTORY = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'prompts')

INTENT_HEADER = "Intent Command"
SCENE_HEADER = "Scene Description"
OBJECTS_HEADER = "Major Objects"
SECTION_HEADERS = (INTENT_HEADER, SCENE_HEADER, OBJECTS_HEADER)

_PLACEHOLDER = re.compile(r'\{\{(\w+)\}\}')


class TooManyImages(DataError):

    """
    Raised when more than MAX_FRAMES images are attached to a prompt
    """


class InvalidPromptInput(DataError):

    """
    Raised when a prompt cannot be built from its inputs
    """


class Stage(Enum):

    """
    Request kinds of the planner
    """

    Reasoning = "reasoning"
    Prediction = "prediction"


class Maneuver(Enum):

    """
    Lateral part of the intent command
    """

    Straight = "straight"
    LeftTurn = "left_turn"
    RightTurn = "right_turn"
    Unknown = "unknown"


class SpeedIntent(Enum):

    """
    Longitudinal part of the intent command
    """

    Maintain = "maintain"
    Accelerate = "accelerate"
    Decelerate = "decelerate"
    Stop = "stop"
    Unknown = "unknown"


@dataclass(frozen=True)
class CriticalObject(object):

    """
    A road user named in the Major Objects section
    """

    label: str
    location_text: str
    rationale: str

    def as_line(self):
        """
        Renders the object as a list item of the Major Objects section
        """
        head = "{}, {}".format(self.label, self.location_text) if self.location_text else self.label
        return "- {}: {}".format(head, self.rationale) if self.rationale else "- {}".format(head)


@dataclass(frozen=True)
class ReasoningOutput(object):

    """
    Structured reasoning stage reply.
    major_objects_text keeps the Major Objects section as the model wrote it.
    """

    intent: str
    intent_maneuver: Maneuver
    intent_speed: SpeedIntent
    scene_description: str
    critical_objects: Tuple[CriticalObject, ...] = ()
    major_objects_text: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'critical_objects', tuple(self.critical_objects))

    def objects_section(self):
        """
        Body of the Major Objects section
        """
        if self.major_objects_text:
            return self.major_objects_text
        return "\n".join(item.as_line() for item in self.critical_objects)

    def sections(self):
        """
        The three reasoning sections, headed, as embedded in the prediction prompt
        """
        bodies = (self.intent, self.scene_description, self.objects_section())
        return "\n\n".join("{}:\n{}".format(header, body.strip())
                           for header, body in zip(SECTION_HEADERS, bodies))


@dataclass(frozen=True)
class PromptBundle(object):

    """
    One model request: system and user texts plus attached (image path, mime type) pairs
    """

    system_text: str
    user_text: str
    images: Tuple[Tuple[str, str], ...]
    stage: Stage

    def __post_init__(self):
        object.__setattr__(self, 'images', tuple((str(path), mime) for path, mime in self.images))
        if not self.user_text:
            raise InvalidPromptInput("A prompt needs a user text")
        if self.stage is Stage.Reasoning and not self.images:
            raise InvalidPromptInput("A reasoning prompt needs at least one image")


def load_template(name):
    """
    Reads prompts/<name>.txt
    """
    with open(os.path.join(PROMPTS_DIRECTORY, name + '.txt'), 'r', encoding='utf-8') as fd:
        return fd.read()


def render_template(template, **values):
    """
    Replaces every {{name}} of a template, all placeholders must be given
    """
    def substitute(match):
        key = match.group(1)
        if key not in values:
            raise InvalidPromptInput("No value for placeholder {{{{{}}}}}".format(key))
        return str(values[key])

    return _PLACEHOLDER.sub(substitute, template)


def format_number(value):
    """
    Fixed 2-decimal rendering of prompt numbers, values rounding to zero never signed
    """
    text = "{:.2f}".format(value + 0.0)
    return "0.00" if text == "-0.00" else text


def format_list(values):
    """
    Bracketed list of 2-decimal numbers
    """
    return "[" + ", ".join(format_number(v) for v in values) + "]"


def _attachments(images):
    images = list(images)
    if len(images) > MAX_FRAMES:
        raise TooManyImages("At most {} images can be attached, got {}".format(MAX_FRAMES, len(images)))
    if not images:
        raise InvalidPromptInput("At least one image must be attached")
    attachments = []
    for path in images:
        mime, _ = mimetypes.guess_type(str(path))
        attachments.append((str(path), mime or 'application/octet-stream'))
    return attachments


def _history_values(history):
    return {
        'speed_history': format_list(history.speed),
        'curvature_history': format_list(history.curvature),
        'current_speed': format_number(history.current_speed),
        'current_curvature': format_number(history.current_curvature),
    }


def _horizon_values(horizon_s):
    points = future_points(horizon_s)
    if points < 1:
        raise InvalidPromptInput("Horizon must cover at least one keyframe, got {} s".format(horizon_s))
    return {
        'horizon_points': points,
        'horizon_seconds': "{:g}".format(points * KEYFRAME_DT),
    }


def build_reasoning_prompt(history, images):
    """
    Reasoning stage prompt: ego history plus 1 to MAX_FRAMES front camera images, oldest first

    :param history: EgoHistory at the anchor
    :param images: image files, the anchor image last
    :return: PromptBundle
    """
    attachments = _attachments(images)
    text = render_template(load_template('reasoning'), **_history_values(history))
    return PromptBundle(system_text=load_template('system').strip(),
                        user_text=text,
                        images=attachments,
                        stage=Stage.Reasoning)


def build_prediction_prompt(reasoning, history, horizon_s=5, images=()):
    """
    Prediction stage prompt embedding the reasoning sections

    :param reasoning: ReasoningOutput of the reasoning stage
    :param history: EgoHistory at the anchor
    :param horizon_s: prediction horizon [s]
    :param images: images to attach again, may be empty
    :return: PromptBundle
    """
    for header, body in zip(SECTION_HEADERS, (reasoning.intent, reasoning.scene_description,
                                              reasoning.objects_section())):
        if not body or not body.strip():
            raise InvalidPromptInput("Reasoning section '{}' is empty".format(header))

    values = _history_values(history)
    values.update(_horizon_values(horizon_s))
    values['stage1_sections'] = reasoning.sections()
    text = render_template(load_template('prediction'), **values)

    return PromptBundle(system_text=load_template('system').strip(),
                        user_text=text,
                        images=_attachments(images) if images else (),
                        stage=Stage.Prediction)


def build_zero_shot_prompt(history, images, horizon_s=5):
    """
    Single request baseline asking for the future lists directly
    """
    values = _history_values(history)
    values.update(_horizon_values(horizon_s))
    text = render_template(load_template('zero_shot'), **values)
    return PromptBundle(system_text=load_template('system').strip(),
                        user_text=text,
                        images=_attachments(images),
                        stage=Stage.Prediction)
