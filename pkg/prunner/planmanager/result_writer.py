#!/usr/bin/env python

# This work is licensed under the terms of the MIT license.
# For a copy, see <https://opensource.org/licenses/MIT>.

"""
This module contains the result writer of planning evaluations.
It shall be used from the PlanManager and the eval command only.
"""

from __future__ import print_function

import csv
import json

from tabulate import tabulate

from prunner.metrics.planning_metrics import REPORT_COLUMNS


def _cell(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return "{:.2f}".format(value)
    return value


class ResultOutputProvider(object):

    """
    Writes an EvalReport as a terminal table, a JSON report and a CSV report
    """

    def __init__(self, report, stdout=True, jsonfile=None, csvfile=None):
        """
        Setup all parameters
        - _report is the EvalReport to write
        - _stdout (True/False) is used to (de)activate terminal output
        - _json is used to (de)activate file output in json form
        - _csv is used to (de)activate file output in csv form
        """
        self._report = report
        self._stdout = stdout
        self._json = jsonfile
        self._csv = csvfile

    def write(self):
        """
        Public write function
        """
        if self._json is not None:
            self._write_to_reportjson()
        if self._csv is not None:
            self._write_to_csv()
        if self._stdout:
            print(self.create_output_text())

    def create_output_text(self):
        """
        Creates the output message
        """
        report = self._report
        output = "\n"
        output += " ======= Planning results: {} ({}) =======\n".format(report.model, report.method)
        end_line_length = len(output) - 3
        output += "\n"

        list_statistics = [["Samples", report.n_samples],
                           ["Skipped", report.n_skipped],
                           ["Failed", report.n_failed]]
        output += tabulate(list_statistics, tablefmt='fancy_grid')
        output += "\n\n"

        output += tabulate([[_cell(value) for value in report.row()]], headers=REPORT_COLUMNS,
                           tablefmt='fancy_grid')
        output += "\n"
        output += " " + "=" * end_line_length + "\n"
        return output

    def report_dict(self):
        """
        Machine-readable report, the metric keys being the table columns
        """
        report = self._report
        result_object = dict(zip(REPORT_COLUMNS, report.row()))
        result_object.update({
            "n_samples": report.n_samples,
            "n_skipped": report.n_skipped,
            "n_failed": report.n_failed,
            "scores": [score.to_dict() for score in report.scores],
        })
        return result_object

    def _write_to_reportjson(self):
        """
        Write a machine-readable report to JSON
        """
        with open(self._json, "w", encoding='utf-8') as fp:
            json.dump(self.report_dict(), fp, indent=4, sort_keys=False)

    def _write_to_csv(self):
        """
        Write the table row to CSV, missing means as empty cells
        """
        with open(self._csv, "w", encoding='utf-8', newline='') as fp:
            writer = csv.writer(fp)
            writer.writerow(REPORT_COLUMNS)
            writer.writerow(["" if value is None else value for value in self._report.row()])
