#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Base exceptions of the plan runner.

Every module defines its own exceptions next to the code raising them.
They all derive from one of the classes below, which is what the command
line uses to pick the exit code.
"""


class PlanRunnerError(Exception):

    """
    Root of all plan runner exceptions
    """


class DataError(PlanRunnerError):

    """
    Exceptions caused by the input data (manifests, model replies, detections, ...)
    """


class UsageError(PlanRunnerError):

    """
    Exceptions caused by an invalid invocation or configuration
    """
