#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
This module turns free-text model replies into structured values.

Reasoning replies are split on their three headings, prediction replies are
searched for the bracketed "Speed:" and "Curvature:" lists. Parsing never
fails with anything but a ResponseParseError.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Tuple

from prunner.autoagents.prompt_builder import (CriticalObject, Maneuver, ReasoningOutput, SpeedIntent,
                                               INTENT_HEADER, OBJECTS_HEADER, SCENE_HEADER, SECTION_HEADERS)
from prunner.exceptions import DataError

LOGGER = logging.getLogger(__name__)

SPEED_RANGE = (0.0, 40.0)
CURVATURE_RANGE = (-0.5, 0.5)


class ResponseParseError(DataError):

    """
    Base class of the reply parsing errors
    """


class MissingSection(ResponseParseError):

    """
    Raised when a reasoning heading is absent or its section is empty
    """

    def __init__(self, name):
        super(MissingSection, self).__init__("Missing section '{}'".format(name))
        self.name = name


class MissingList(ResponseParseError):

    """
    Raised when no bracketed list follows a speed / curvature label
    """

    def __init__(self, which):
        super(MissingList, self).__init__("No {} list found".format(which))
        self.which = which


class TooFewValues(ResponseParseError):

    """
    Raised when a predicted list is shorter than the horizon
    """

    def __init__(self, which, found, needed):
        super(TooFewValues, self).__init__("The {} list has {} values, {} needed".format(which, found, needed))
        self.which = which
        self.found = found
        self.needed = needed


class NonNumericToken(ResponseParseError):

    """
    Raised when a list item is not a finite number
    """

    def __init__(self, token, which=None):
        super(NonNumericToken, self).__init__("Non numeric value {!r} in the {} list".format(token, which))
        self.token = token
        self.which = which


@dataclass(frozen=True)
class ParsedPrediction(object):

    """
    Future speed [m/s] and curvature [1/m] samples extracted from a reply
    """

    speed: Tuple[float, ...]
    curvature: Tuple[float, ...]
    raw_text: str = field(default="", compare=False, repr=False)
    truncated: bool = False


def _header_pattern(name):
    words = r'\s+'.join(name.split())
    return re.compile(r'^[ \t>#*_]*(?:\d+[.)][ \t]*)?[*_]*(' + words + r')[ \t*_]*(?::[ \t*_]*|$)',
                      re.IGNORECASE | re.MULTILINE)


_HEADERS = {name: _header_pattern(name) for name in SECTION_HEADERS}

_MANEUVER = re.compile(r'\b(left|right|straight)\b', re.IGNORECASE)
_SPEED_INTENT = re.compile(r'\b(accelerat\w*|speed(?:ing)?\s+up|decelerat\w*|slow\w*|brak\w*|stop\w*|halt\w*|'
                           r'maintain\w*|keep\w*|constant)\b', re.IGNORECASE)
_LIST_ITEM = re.compile(r'^[ \t]*(?:[-*+•]|\d+[.)])[ \t]+(.+?)[ \t]*$', re.MULTILINE)

_FENCE = re.compile(r'```[\w+-]*')
_LABELLED_LIST = re.compile(r'\b(speed|curvature)s?\b([^\[\]\n]{0,40}?)[:=]?\s*\[([^\[\]]*)\]', re.IGNORECASE)
_PAST_LABEL = re.compile(r'histor|past|previous', re.IGNORECASE)
_NUMBER = re.compile(r'[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?')
_SEPARATORS = re.compile(r'[,;\s]+')


def _as_text(text):
    if isinstance(text, (bytes, bytearray)):
        return bytes(text).decode('utf-8', errors='replace')
    if text is None:
        return ""
    return str(text)


def _split_sections(text):
    """
    Returns {heading: body} using the first occurrence of every heading
    """
    found = {}
    for name, pattern in _HEADERS.items():
        match = pattern.search(text)
        if match is None:
            raise MissingSection(name)
        found[name] = match

    sections = {}
    for name, match in found.items():
        following = [other.start() for other in found.values() if other.start() > match.start()]
        end = min(following) if following else len(text)
        body = text[match.end():end].strip().strip('*_').strip()
        if not body:
            raise MissingSection(name)
        sections[name] = body
    return sections


def _maneuver(intent):
    match = _MANEUVER.search(intent)
    if match is None:
        return Maneuver.Unknown
    return {'left': Maneuver.LeftTurn, 'right': Maneuver.RightTurn,
            'straight': Maneuver.Straight}[match.group(1).lower()]


def _speed_intent(intent):
    match = _SPEED_INTENT.search(intent)
    if match is None:
        return SpeedIntent.Unknown
    word = match.group(1).lower()
    if word.startswith('accelerat') or word.startswith('speed'):
        return SpeedIntent.Accelerate
    if word.startswith(('decelerat', 'slow', 'brak')):
        return SpeedIntent.Decelerate
    if word.startswith(('stop', 'halt')):
        return SpeedIntent.Stop
    return SpeedIntent.Maintain


def _critical_objects(section):
    objects = []
    for match in _LIST_ITEM.finditer(section):
        item = match.group(1).replace('**', '').replace('__', '')
        head, _, rationale = item.partition(':')
        label, _, location = head.partition(',')
        label = label.strip()
        if label:
            objects.append(CriticalObject(label=label, location_text=location.strip(), rationale=rationale.strip()))
    return tuple(objects)


def parse_reasoning(text):
    """
    Parses a reasoning stage reply.

    :param text: reply as str or bytes
    :return: ReasoningOutput
    """
    sections = _split_sections(_as_text(text))
    intent = sections[INTENT_HEADER]
    return ReasoningOutput(intent=intent,
                           intent_maneuver=_maneuver(intent),
                           intent_speed=_speed_intent(intent),
                           scene_description=sections[SCENE_HEADER],
                           critical_objects=_critical_objects(sections[OBJECTS_HEADER]),
                           major_objects_text=sections[OBJECTS_HEADER])


def _find_lists(text):
    """
    Body of the last non-history list of each kind
    """
    lists = {}
    for match in _LABELLED_LIST.finditer(text):
        line_start = text.rfind('\n', 0, match.start()) + 1
        label = text[line_start:match.start()] + match.group(2)
        if _PAST_LABEL.search(label):
            continue
        lists[match.group(1).lower()] = match.group(3)
    return lists


def _values(body, which):
    values = []
    for token in _SEPARATORS.split(body):
        token = token.strip('\'"`*')
        if not token:
            continue
        if not _NUMBER.fullmatch(token):
            raise NonNumericToken(token, which)
        value = float(token)
        if not math.isfinite(value):
            raise NonNumericToken(token, which)
        values.append(value)
    return values


def _clamp(values, bounds, which):
    low, high = bounds
    clamped = [min(max(v, low), high) for v in values]
    if clamped != values:
        LOGGER.warning("Clamped %s values into [%s, %s]", which, low, high)
    return tuple(v + 0.0 for v in clamped)


def parse_prediction(text, horizon_points=10):
    """
    Parses a prediction stage reply.

    Lists inside code fences are found too. Labels mentioning the history are
    ignored and when a kind appears more than once the last list is used.
    Lists longer than horizon_points are cut, shorter ones are rejected.

    :param text: reply as str or bytes
    :param horizon_points: number of future samples expected
    :return: ParsedPrediction
    """
    if horizon_points < 1:
        raise ValueError("horizon_points must be positive, got {}".format(horizon_points))
    raw_text = _as_text(text)
    lists = _find_lists(_FENCE.sub('', raw_text))

    parsed = {}
    truncated = False
    for which in ('speed', 'curvature'):
        if which not in lists:
            raise MissingList(which)
        values = _values(lists[which], which)
        if len(values) < horizon_points:
            raise TooFewValues(which, len(values), horizon_points)
        if len(values) > horizon_points:
            LOGGER.warning("Dropped %d extra %s values", len(values) - horizon_points, which)
            values = values[:horizon_points]
            truncated = True
        parsed[which] = values

    return ParsedPrediction(speed=_clamp(parsed['speed'], SPEED_RANGE, 'speed'),
                            curvature=_clamp(parsed['curvature'], CURVATURE_RANGE, 'curvature'),
                            raw_text=raw_text,
                            truncated=truncated)


def format_prediction(prediction):
    """
    Canonical reply text of a prediction, read back identically by parse_prediction
    """
    return "Speed: [{}]\nCurvature: [{}]\n".format(", ".join(repr(v) for v in prediction.speed),
                                                  ", ".join(repr(v) for v in prediction.curvature))
