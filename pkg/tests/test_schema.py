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
"""Tests for record schemas and fields."""

from fractions import Fraction

import numpy as np
import pytest
from marshmallow.exceptions import ValidationError

import combrec.fields as fields
from combrec.codes import ExtendedCount
from combrec.config import ReportEnvelope
from combrec.cycles import Permutation, cycle_decompose, moment_table
from combrec.lattice import WeightSpec
from combrec.locality import compute_T
from combrec.schema import (
    BoundReportSchema,
    CodeSchema,
    CycleDecompositionSchema,
    EnvelopeSchema,
    LocalitySchema,
    MomentTableSchema,
    RecordSchema,
    RunConfigSchema,
    WeightSpecSchema,
)


def test_record_instance():
    class Ratio:
        def __init__(self, name, value=Fraction(1)):
            self.name = name
            self.value = value

    class RatioSchema(RecordSchema):
        name = fields.String()
        value = fields.Rational()

        class Meta:
            model = Ratio

    data = RatioSchema().dump(Ratio("half", Fraction(1, 2)))
    assert data == {"format": 1, "name": "half", "value": "1/2"}

    ratio = RatioSchema().load(data)
    assert isinstance(ratio, Ratio)
    assert ratio.value == Fraction(1, 2)

    assert RatioSchema().load({"format": 1, "name": "one"}).value == 1


def test_record_format_check():
    class NameSchema(RecordSchema):
        name = fields.String()

    assert NameSchema().load({"format": 1, "name": "a"}) == {"name": "a"}

    with pytest.raises(ValidationError):
        NameSchema().load({"format": 2, "name": "a"})
    with pytest.raises(ValidationError):
        NameSchema().load({"name": "a"})


def test_rational_field():
    class ValueSchema(RecordSchema):
        value = fields.Rational()

    assert ValueSchema().load({"format": 1, "value": "6/4"})["value"] == Fraction(3, 2)
    assert ValueSchema().load({"format": 1, "value": 2})["value"] == 2

    with pytest.raises(ValidationError):
        ValueSchema().load({"format": 1, "value": 0.5})
    with pytest.raises(ValidationError):
        ValueSchema().load({"format": 1, "value": "1/0"})


def test_extended_field():
    class CountSchema(RecordSchema):
        value = fields.Extended()

    assert CountSchema().dump({"value": ExtendedCount()}) == {"format": 1, "value": "inf"}
    assert CountSchema().dump({"value": ExtendedCount(7)}) == {"format": 1, "value": 7}
    assert CountSchema().load({"format": 1, "value": "inf"})["value"].is_infinite

    with pytest.raises(ValidationError):
        CountSchema().load({"format": 1, "value": -1})


def test_positions_field():
    class SetSchema(RecordSchema):
        positions = fields.Positions()

    assert SetSchema().dump({"positions": {2, 0}}) == {"format": 1, "positions": [1, 3]}
    assert SetSchema().load({"format": 1, "positions": [1, 3]})["positions"] == {0, 2}

    with pytest.raises(ValidationError):
        SetSchema().load({"format": 1, "positions": [0]})
    with pytest.raises(ValidationError):
        SetSchema().load({"format": 1, "positions": [2, 2]})


def test_point_set_field():
    class PointsSchema(RecordSchema):
        points = fields.PointSet()

    data = PointsSchema().dump({"points": frozenset({(2, 1), (1, 2)})})
    assert data["points"] == [[1, 2], [2, 1]]
    assert PointsSchema().load(data)["points"] == {(1, 2), (2, 1)}

    with pytest.raises(ValidationError):
        PointsSchema().load({"format": 1, "points": [[1, 2], [1, 2]]})
    with pytest.raises(ValidationError):
        PointsSchema().load({"format": 1, "points": [[0, 1]]})


def test_code_schema(even_code):
    data = CodeSchema().dump(even_code)

    assert data["format"] == 1
    assert data["q"] == 2
    assert data["n"] == 3
    assert data["k"] == 2
    assert data["alphabet"] == [0, 1]
    assert data["words"][1] == [0, 1, 1]

    code = CodeSchema().load(data)
    assert np.array_equal(code.words, even_code.words)
    assert code.linear


def test_code_schema_tokens():
    data = {"format": 1, "q": 3, "alphabet": ["a", "b", "c"], "n": 2, "words": [["a", "b"], ["c", "c"]]}
    code = CodeSchema().load(data)

    assert code.q == 3
    assert code.tokens() == [["a", "b"], ["c", "c"]]

    with pytest.raises(ValidationError):
        CodeSchema().load(dict(data, q=2))
    with pytest.raises(ValidationError):
        CodeSchema().load(dict(data, n=3))


def test_locality_schema(example):
    _, loc = example
    data = LocalitySchema().dump(loc)

    assert data["theta"][:3] == [1, 2, 3]
    assert len(data["theta"]) == 130
    assert data["tau"] == 1
    assert data["map"][0] == {"P": [1], "T": [11, 12, 19]}

    loaded = LocalitySchema().load(data)
    assert loaded.theta == loc.theta
    assert loaded.locality_map == loc.locality_map


def test_locality_schema_without_map():
    loc = LocalitySchema().load({"format": 1, "theta": [1, 2], "tau": 2, "r": 1})

    assert loc.theta == {0, 1}
    assert loc.locality_map is None


def test_bound_report_schema():
    data = BoundReportSchema().dump(compute_T(131, 10, 130, 1, 3))

    assert data["T"] == 2
    assert data["bound"] == 120
    assert data["singleton"] == 122
    assert data["delta"] == 64
    assert data["conditions"][2] == {"t": 3, "first": False, "second": False, "passed": False}

    report = BoundReportSchema().load(data)
    assert report.T == 2
    assert report.conditions[0].passed


def test_weight_spec_schema():
    spec = WeightSpecSchema().load({"format": 1, "kind": "explicit", "shape": [1, 2], "weights": ["2", "3/2"]})

    assert spec.beta == 2
    assert spec.lattice((1, 2)).weight((1, 2)) == Fraction(3, 2)
    assert WeightSpecSchema().dump(WeightSpec.shell())["beta"] == "2/1"

    with pytest.raises(ValidationError):
        WeightSpecSchema().load({"format": 1, "kind": "gaussian"})


def test_cycle_decomposition_schema():
    decomposition = cycle_decompose(Permutation.from_one_based([3, 6, 4, 5, 1, 7, 2, 9, 8]))
    data = CycleDecompositionSchema().dump(decomposition)

    assert data["cycles"] == [[1, 3, 4, 5], [2, 6, 7], [8, 9]]
    assert data["count"] == 3
    assert data["first_cycle_length"] == 4
    assert CycleDecompositionSchema().load(data).cycles == decomposition.cycles


def test_moment_table_schema():
    data = MomentTableSchema().dump(moment_table(2, 2))

    assert data["n_max"] == 2
    assert data["s_max"] == 2
    assert data["values"] == [
        {"n": 1, "s": 1, "value": "1/1"},
        {"n": 1, "s": 2, "value": "1/1"},
        {"n": 2, "s": 1, "value": "3/2"},
        {"n": 2, "s": 2, "value": "5/2"},
    ]


def test_run_config_schema():
    config = RunConfigSchema().load({"command": "cyc mean", "budget": 10})

    assert config.format == "json"
    assert config.work_budget == 10
    assert config.workers == 1

    with pytest.raises(ValidationError):
        RunConfigSchema().load({"command": "cyc mean", "format": "xml"})
    with pytest.raises(ValidationError):
        RunConfigSchema().load({"command": "cyc mean", "budget": 0})


def test_envelope_schema():
    data = EnvelopeSchema().dump(ReportEnvelope("cyc mean", {"n": 1}, {"mean": "1/1"}))

    assert data == {
        "budget_exhausted": False,
        "command": "cyc mean",
        "format": 1,
        "input": {"n": 1},
        "result": {"mean": "1/1"},
        "timing": None,
        "tool": "combrec",
        "version": "0.1.0",
    }
    assert EnvelopeSchema().load(data).command == "cyc mean"
