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
"""Shared fixtures."""

import pytest

from combrec.codes import Code
from combrec.locality import build_example_code


@pytest.fixture(scope="session")
def example():
    """The triple-parity code of dimension 10 and its locality structure."""
    return build_example_code(10)


@pytest.fixture
def even_code():
    """The binary even-weight code of length 3."""
    return Code.binary(["000", "011", "101", "110"], k=2, linear=True)
