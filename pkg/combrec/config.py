# -*- coding: utf-8 -*-
#
# Copyright 2017-2020- Swiss Data Science Center (SDSC)
# A partnership between École Polytechnique Fédérale de Lausanne (EPFL) and
# Eidgenössische Technische Hochschule Zürich (ETHZ).
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Run configuration and the report envelope shared by all commands."""

import logging

from combrec import __version__
from combrec.cycles import DEFAULT_CHUNK_SIZE, DEFAULT_SEED
from combrec.utils import get_work_budget

logger = logging.getLogger("combrec")

TOOL = "combrec"
OUTPUT_FORMATS = ("json", "csv", "text")


class RunConfig(object):
    """Settings of one command invocation.

    Args:
        command (str): Command path such as ``"lrc bound"``.
        params (dict): The command's own parameters, echoed into the report.
        budget (int): Work budget; ``None`` defers to ``COMBREC_WORK_BUDGET`` and the default.
        seed (int): Root seed for sampling.
        format (str): One of ``json``, ``csv`` or ``text``.
        out (str): Output path; ``None`` writes to stdout.
        timing (bool): Whether to record wall-clock time in the report.
        chunk_size (int): Monte Carlo chunk size.
        workers (int): Monte Carlo worker threads.
    """

    def __init__(
        self,
        command,
        params=None,
        budget=None,
        seed=DEFAULT_SEED,
        format="json",
        out=None,
        timing=False,
        chunk_size=DEFAULT_CHUNK_SIZE,
        workers=1,
    ):
        self.command = command
        self.params = params or {}
        self.budget = budget
        self.seed = seed
        self.format = format
        self.out = out
        self.timing = timing
        self.chunk_size = chunk_size
        self.workers = workers

    @property
    def work_budget(self):
        """The budget after applying the environment override and the default."""
        return get_work_budget(self.budget)

    def __repr__(self):
        return "RunConfig(command={!r}, format={!r})".format(self.command, self.format)


class ReportEnvelope(object):
    """A command result with its provenance."""

    def __init__(self, command, input, result, budget_exhausted=False, timing=None, tool=TOOL, version=__version__):
        self.tool = tool
        self.version = version
        self.command = command
        self.input = input
        self.result = result
        self.budget_exhausted = budget_exhausted
        self.timing = timing

    def __repr__(self):
        return "ReportEnvelope(command={!r}, budget_exhausted={})".format(self.command, self.budget_exhausted)
