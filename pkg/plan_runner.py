#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
Welcome to the plan runner

This is the main script to be executed. It runs the chain-of-thought planner
over recorded scenes, scores stored predictions, lifts 2D detections into
3D boxes and renders prediction figures.

Exit codes: 0 on success, 1 on a usage error, 2 on a data error.
"""

from __future__ import print_function

import argparse
from argparse import RawTextHelpFormatter
import logging
import os
import sys

from prunner.autoagents.cot_agent import CoTAgent
from prunner.autoagents.mllm_client import ClientConfig, LiveBackend, RecordBackend, ReplayBackend
from prunner.autoagents.replay_store import ReplayStore
from prunner.autoagents.zero_shot_agent import ZeroShotAgent
from prunner.exceptions import DataError, UsageError
from prunner.metrics.planning_metrics import L2_MODES, UnknownScene
from prunner.metrics.tools.predictions_log import PredictionsLog
from prunner.planmanager.plan_manager import (PlanManager, evaluate_predictions, lift_detections, output_path,
                                              read_boxes, write_boxes)
from prunner.planmanager.result_writer import ResultOutputProvider
from prunner.tools.manifest_parser import ManifestParser
from prunner.tools.scene_helper import MAX_FRAMES, ground_truth_future
from prunner.tools.svg_render import render_bev, render_overlay

# Version of the plan runner
VERSION = '0.1.0'

AGENTS = {
    'cot': CoTAgent,
    'zero-shot': ZeroShotAgent,
}

# Scoring reads the trajectories up to 3 s
MIN_HORIZON = 3


class PlanRunnerArgumentParser(argparse.ArgumentParser):

    """
    Argument parser reporting invalid invocations as UsageError
    """

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError("{}: {}".format(self.prog, message))


class PlanRunner(object):

    """
    This is the core plan runner module. It executes one subcommand.

    Usage:
    plan_runner = PlanRunner(args)
    plan_runner.run()
    plan_runner.destroy()
    """

    def __init__(self, args):
        self._args = args
        self._backend = None

    def destroy(self):
        """
        Release the model backend
        """
        if self._backend is not None:
            self._backend.close()
            self._backend = None

    def _create_backend(self):
        """
        Live backend, or the record / replay backend selected on the command line
        """
        args = self._args
        config = ClientConfig.from_args(args)
        if args.replay and args.record:
            raise UsageError("--replay and --record cannot be used together")
        if args.replay:
            return config, ReplayBackend(config, ReplayStore(args.replay))
        live = LiveBackend(config)
        if args.record:
            return config, RecordBackend(config, live, ReplayStore(args.record, record=True))
        return config, live

    def _run_pipeline(self):
        """
        run: plan every scene, write the predictions and the report
        """
        args = self._args
        if not 1 <= args.frames <= MAX_FRAMES:
            raise UsageError("--frames must be between 1 and {}".format(MAX_FRAMES))
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")

        scenes = ManifestParser.load_scenes(args.scenes)
        config, self._backend = self._create_backend()
        agent = AGENTS[args.method](self._backend, horizon_s=args.horizon, frames=args.frames)

        manager = PlanManager(agent, horizon_s=args.horizon, workers=args.workers, l2_mode=args.l2_mode)
        try:
            log, _ = manager.run_scenes(scenes)
        finally:
            agent.destroy()
        log.write(output_path(args.out, 'predictions.jsonl'))

        report = manager.evaluate(log, scenes, config.model, agent.method)
        ResultOutputProvider(report,
                             jsonfile=output_path(args.out, 'report.json'),
                             csvfile=output_path(args.out, 'report.csv')).write()
        return True

    def _run_eval(self):
        """
        eval: score a predictions file
        """
        args = self._args
        scenes = ManifestParser.load_scenes(args.scenes)
        log = PredictionsLog.read(args.predictions)
        report = evaluate_predictions(log, scenes, args.model, AGENTS[args.method].method,
                                      horizon_s=args.horizon, l2_mode=args.l2_mode)
        ResultOutputProvider(report,
                             jsonfile=output_path(args.out, 'report.json'),
                             csvfile=output_path(args.out, 'report.csv')).write()
        return True

    def _run_lift(self):
        """
        lift: detections of one scene into 3D boxes
        """
        args = self._args
        scene = ManifestParser.load_manifest(args.manifest)
        lifted = lift_detections(args.detections, scene)
        write_boxes(output_path(args.out, 'boxes.jsonl'), scene.scene_id, lifted)
        print("Lifted {} detections of scene {}".format(len(lifted), scene.scene_id))
        return True

    def _run_render(self):
        """
        render: one bird's-eye view and one camera overlay per prediction
        """
        args = self._args
        scenes = {scene.scene_id: scene for scene in ManifestParser.load_scenes(args.scenes)}
        log = PredictionsLog.read(args.predictions)
        boxes = read_boxes(args.boxes) if args.boxes else {}

        count = 0
        for record in log:
            if record.failed:
                continue
            scene = scenes.get(record.scene_id)
            if scene is None:
                raise UnknownScene(record.scene_id)
            gt = ground_truth_future(scene, record.sample_index, args.horizon)
            frame = scene.frames[record.sample_index]
            pred = record.trajectory()
            objects = boxes.get((record.scene_id, record.sample_index), [])

            name = "{}_{:03d}".format(record.scene_id, record.sample_index)
            with open(output_path(args.out, name + '_bev.svg'), 'w', encoding='utf-8') as fd:
                fd.write(render_bev(pred, gt, objects, calibration=frame.camera))
            href = os.path.relpath(str(scene.image_file(record.sample_index)), args.out)
            with open(output_path(args.out, name + '_overlay.svg'), 'w', encoding='utf-8') as fd:
                fd.write(render_overlay(frame, pred, objects, image_href=href.replace(os.sep, '/')))
            count += 1

        print("Rendered {} predictions into {}".format(count, args.out))
        return True

    def run(self):
        """
        Run the subcommand given on the command line
        """
        if getattr(self._args, 'horizon', MIN_HORIZON) < MIN_HORIZON:
            raise UsageError("--horizon must be at least {} s".format(MIN_HORIZON))
        commands = {
            'run': self._run_pipeline,
            'eval': self._run_eval,
            'lift': self._run_lift,
            'render': self._run_render,
        }
        return commands[self._args.command]()


def _add_scene_arguments(parser):
    parser.add_argument('--scenes', required=True, help='Directory of scene manifests (*.json)')
    parser.add_argument('--horizon', default=5, type=int, help='Prediction horizon in seconds (default: 5)')


def _add_report_arguments(parser):
    parser.add_argument('--l2-mode', dest='l2_mode', default='point', choices=L2_MODES,
                        help='L2 at the horizon step (point) or averaged up to it (ade)')
    parser.add_argument('--model', default='gpt-4o', help='Model name (default: gpt-4o)')
    parser.add_argument('--method', default='cot', choices=sorted(AGENTS),
                        help='Chain-of-thought planner or zero-shot baseline (default: cot)')


def build_parser():
    """
    Command line of the plan runner
    """
    description = ("Plan Runner: chain-of-thought trajectory planning with vision-language models\n"
                   "Current version: " + VERSION)

    parser = PlanRunnerArgumentParser(description=description, formatter_class=RawTextHelpFormatter)
    parser.add_argument('-v', '--version', action='version', version='%(prog)s ' + VERSION)
    parser.add_argument('--debug', action="store_true", help='Run with debug output')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    run = subparsers.add_parser('run', formatter_class=RawTextHelpFormatter,
                                help='Plan every scene and score the predictions')
    _add_scene_arguments(run)
    _add_report_arguments(run)
    run.add_argument('--out', required=True, help='Output directory')
    run.add_argument('--base-url', dest='base_url', default=None,
                     help='OpenAI-compatible endpoint (default: $OPENEMMA_BASE_URL)')
    run.add_argument('--api-key', dest='api_key', default=None, help='API key (default: $OPENEMMA_API_KEY)')
    run.add_argument('--temperature', default=0.0, type=float, help='Sampling temperature (default: 0)')
    run.add_argument('--max-tokens', dest='max_tokens', default=1024, type=int,
                     help='Completion token limit (default: 1024)')
    run.add_argument('--timeout', default=120.0, type=float, help='Request timeout in seconds (default: 120)')
    run.add_argument('--max-retries', dest='max_retries', default=3, type=int,
                     help='Retries on transport errors, 429 and 5xx (default: 3)')
    run.add_argument('--frames', default=1, type=int,
                     help='Camera images attached to each request, 1 to {} (default: 1)'.format(MAX_FRAMES))
    run.add_argument('--workers', default=1, type=int, help='Scenes planned concurrently (default: 1)')
    run.add_argument('--replay', default=None, help='Answer from this reply store, without network access')
    run.add_argument('--record', default=None, help='Append every reply to this reply store')

    evaluate = subparsers.add_parser('eval', formatter_class=RawTextHelpFormatter,
                                     help='Score a predictions file')
    _add_scene_arguments(evaluate)
    _add_report_arguments(evaluate)
    evaluate.add_argument('--predictions', required=True, help='Predictions file (*.jsonl)')
    evaluate.add_argument('--out', required=True, help='Output directory')

    lift = subparsers.add_parser('lift', formatter_class=RawTextHelpFormatter,
                                 help='Lift 2D detections into 3D boxes')
    lift.add_argument('--detections', required=True, help='Detections file (*.jsonl)')
    lift.add_argument('--manifest', required=True, help='Manifest of the scene the detections belong to')
    lift.add_argument('--out', required=True, help='Output directory')

    render = subparsers.add_parser('render', formatter_class=RawTextHelpFormatter,
                                   help='Draw the predictions as SVG figures')
    _add_scene_arguments(render)
    render.add_argument('--predictions', required=True, help='Predictions file (*.jsonl)')
    render.add_argument('--boxes', default=None, help='3D boxes written by the lift command')
    render.add_argument('--out', required=True, help='Output directory')

    return parser


def main(argv=None):
    """
    main function
    """
    try:
        arguments = build_parser().parse_args(argv)
    except UsageError as e:
        print("ERROR: {}".format(e), file=sys.stderr)
        return 1
    except SystemExit as e:
        return e.code

    logging.basicConfig(level=logging.DEBUG if arguments.debug else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s')

    plan_runner = None
    try:
        plan_runner = PlanRunner(arguments)
        plan_runner.run()
    except UsageError as e:
        print("ERROR: {}".format(e), file=sys.stderr)
        return 1
    except DataError as e:
        print("ERROR: {}".format(e), file=sys.stderr)
        return 2
    finally:
        if plan_runner is not None:
            plan_runner.destroy()
    return 0


if __name__ == "__main__":
    sys.exit(main())
