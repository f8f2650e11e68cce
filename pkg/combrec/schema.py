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
"""Record schemas for the file formats and reports.

Every top-level record carries ``"format": 1``; loading checks the version and builds the model object.
"""

import inspect
from collections.abc import Mapping

from marshmallow import EXCLUDE, post_dump, post_load, pre_load
from marshmallow.exceptions import ValidationError
from marshmallow.schema import Schema, SchemaOpts
from marshmallow.validate import OneOf, Range

import combrec.fields as fields
from combrec.codes import Alphabet, Code, min_distance
from combrec.config import OUTPUT_FORMATS, ReportEnvelope, RunConfig
from combrec.cycles import DEFAULT_CHUNK_SIZE, DEFAULT_SEED, CycleDecomposition, mean, variance
from combrec.lattice import RepCode, WeightSpec
from combrec.locality import BoundReport, ConditionRecord, LocalityStructure
from combrec.utils import format_rational

FORMAT_VERSION = 1


class RecordSchemaOpts(SchemaOpts):
    """Options class for `RecordSchema`.

    Adds the following options:
        - ``model``: The python type this schema (de-)serializes.
        - ``versioned``: Whether records carry and check the ``format`` version field.
    """

    def __init__(self, meta, *args, **kwargs):
        super().__init__(meta, *args, **kwargs)

        self.model = getattr(meta, "model", None)
        self.versioned = getattr(meta, "versioned", True)


class RecordSchema(Schema):
    """Schema for a versioned record.

    Example:

    .. code-block:: python

       from combrec.schema import RecordSchema
       import combrec.fields as fields

       class RepCodeSchema(RecordSchema):
           class Meta:
               model = RepCode

           points = fields.PointSet(required=True)
           epsilon = fields.Rational(required=True)
    """

    OPTIONS_CLASS = RecordSchemaOpts

    @pre_load
    def check_format(self, data, **kwargs):
        if not self.opts.versioned:
            return data
        if not isinstance(data, Mapping):
            raise ValidationError("Expected an object.")
        version = data.get("format")
        if version != FORMAT_VERSION:
            raise ValidationError(
                "Unsupported format version {!r}, expected {}.".format(version, FORMAT_VERSION), "format"
            )
        return {key: value for key, value in data.items() if key != "format"}

    @post_dump
    def add_format(self, data, **kwargs):
        if self.opts.versioned:
            data["format"] = FORMAT_VERSION
        return data

    @post_load
    def make_instance(self, data, **kwargs):
        """Transform loaded dict into corresponding object."""
        if self.opts.model is None:
            return data

        const_args = inspect.signature(self.opts.model)
        keys = set(data.keys())
        args = []
        kwargs = {}
        has_kwargs = False
        for _, parameter in const_args.parameters.items():
            if parameter.kind is inspect.Parameter.POSITIONAL_ONLY:
                if parameter.name not in keys:
                    raise ValueError("Field {} not found in data {}".format(parameter.name, data))
                args.append(data[parameter.name])
                keys.remove(parameter.name)
            elif parameter.kind in [inspect.Parameter.POSITIONAL_OR_KEYWORD, inspect.Parameter.KEYWORD_ONLY]:
                if parameter.name not in keys:
                    if parameter.default is inspect.Parameter.empty:
                        raise ValueError("Field {} not found in data {}".format(parameter.name, data))
                else:
                    kwargs[parameter.name] = data[parameter.name]
                    keys.remove(parameter.name)
            elif parameter.kind is inspect.Parameter.VAR_KEYWORD:
                has_kwargs = True

        extra = {k: v for k, v in data.items() if k in keys}
        if extra and not has_kwargs:
            raise ValueError(
                "The following fields are not accepted by {}:\n\t{}".format(self.opts.model, "\n\t".join(extra))
            )
        return self.opts.model(*args, **kwargs, **extra)


class CodeSchema(RecordSchema):
    """The code file: ``q``, ``alphabet``, ``n``, ``k``, ``linear`` and the words as token lists."""

    class Meta:
        model = Code

    q = fields.Integer(required=True)
    alphabet = fields.Function(lambda code: list(code.alphabet.symbols), deserialize=lambda value: value, required=True)
    n = fields.Integer(required=True)
    k = fields.Raw(allow_none=True, load_default=None)
    linear = fields.Boolean(allow_none=True, load_default=None)
    words = fields.Function(lambda code: code.tokens(), deserialize=lambda value: value, required=True)

    @post_load
    def make_instance(self, data, **kwargs):
        alphabet = Alphabet(data["alphabet"])
        if alphabet.q != data["q"]:
            raise ValidationError("Alphabet has {} symbols but q is {}.".format(alphabet.q, data["q"]), "q")
        if any(len(word) != data["n"] for word in data["words"]):
            raise ValidationError("Every word must have length n={}.".format(data["n"]), "words")
        return Code.from_tokens(alphabet, data["words"], k=data["k"], linear=data["linear"])


def _dump_locality_map(locality_map):
    if locality_map is None:
        return None
    return [
        {"P": [p + 1 for p in sorted(key)], "T": [t + 1 for t in sorted(value)]}
        for key, value in sorted(locality_map.items(), key=lambda item: sorted(item[0]))
    ]


class LocalityEntrySchema(RecordSchema):
    class Meta:
        versioned = False

    p = fields.Positions(data_key="P", required=True)
    t = fields.Positions(data_key="T", required=True)

    @post_load
    def make_instance(self, data, **kwargs):
        return data["p"], data["t"]


class LocalitySchema(RecordSchema):
    """The locality file: 1-based ``theta``, ``tau``, ``r`` and an optional ``map`` of ``{"P", "T"}`` entries."""

    class Meta:
        model = LocalityStructure

    theta = fields.Positions(required=True)
    tau = fields.Integer(required=True)
    r = fields.Integer(required=True)
    n = fields.Integer(allow_none=True, load_default=None)
    locality_map = fields.Method("dump_map", "load_map", data_key="map", allow_none=True, load_default=None)

    def dump_map(self, loc):
        return _dump_locality_map(loc.locality_map)

    def load_map(self, value):
        return LocalityEntrySchema(many=True).load(value)


class CapabilitySchema(RecordSchema):
    capable = fields.Boolean()
    exhaustive = fields.Boolean()
    counterexample = fields.Positions(allow_none=True)
    locality_map = fields.Method("dump_map", data_key="map")

    def dump_map(self, result):
        return _dump_locality_map(result.locality_map)


class ConditionSchema(RecordSchema):
    class Meta:
        model = ConditionRecord
        versioned = False
        unknown = EXCLUDE

    t = fields.Integer(required=True)
    first = fields.Boolean(required=True)
    second = fields.Boolean(required=True)
    passed = fields.Boolean(dump_only=True)


class BoundReportSchema(RecordSchema):
    """Parameters, ``T``, the bound and the per-``t`` condition record."""

    class Meta:
        model = BoundReport
        unknown = EXCLUDE

    n = fields.Integer(required=True)
    k = fields.Integer(required=True)
    theta = fields.Integer(required=True)
    tau = fields.Integer(required=True)
    r = fields.Integer(required=True)
    q = fields.Integer(required=True)
    linear = fields.Boolean(required=True)
    T = fields.Integer(required=True)
    conditions = fields.Nested(ConditionSchema, many=True, required=True)
    bound = fields.Integer(dump_only=True)
    singleton = fields.Integer(dump_only=True)
    delta = fields.Extended(dump_only=True)


class ShorteningStepSchema(RecordSchema):
    class Meta:
        versioned = False

    p = fields.Positions(data_key="P")
    i = fields.Positions(data_key="I")
    m = fields.Integer()
    x = fields.List(fields.Integer())
    subcode_size = fields.Integer()
    j = fields.Positions(data_key="J")


class ShorteningTraceSchema(RecordSchema):
    steps = fields.Nested(ShorteningStepSchema, many=True, data_key="iterations")
    iteration_count = fields.Function(lambda trace: trace.iterations)
    stop_reason = fields.String()
    progress_guaranteed = fields.Boolean()
    guaranteed_T = fields.Integer()
    final_positions = fields.Positions()
    reduced_length = fields.Integer()
    final_subcode_size = fields.Function(lambda trace: trace.final_code.size)
    certified_bound = fields.Integer()
    reduced_min_distance = fields.Method("dump_reduced_distance")
    size_invariants = fields.Function(lambda trace: trace.size_invariants())
    reach_invariants = fields.Function(lambda trace: trace.reach_invariants())

    def dump_reduced_distance(self, trace):
        if trace.final_code.size < 2:
            return None
        return min_distance(trace.final_code, method="pairwise")


class WeightSpecSchema(RecordSchema):
    """Weight specs; explicit grids are row-major lists of ``"p/q"`` strings under ``weights``."""

    class Meta:
        model = WeightSpec

    kind = fields.String(required=True, validate=OneOf(WeightSpec.KINDS))
    beta = fields.Rational(allow_none=True, load_default=None)
    shape = fields.List(fields.Integer(), allow_none=True, load_default=None)
    grid = fields.List(fields.Rational(), data_key="weights", allow_none=True, load_default=None)
    profile = fields.List(fields.Rational(), allow_none=True, load_default=None)


class RepCodeSchema(RecordSchema):
    class Meta:
        model = RepCode

    points = fields.PointSet(required=True)
    epsilon = fields.Rational(required=True)


class MinRepSchema(RecordSchema):
    shape = fields.List(fields.Integer())
    epsilon = fields.Rational()
    beta = fields.Rational()
    threshold = fields.Rational()
    b = fields.Integer()
    witness = fields.Nested(RepCodeSchema)
    lower = fields.Rational()
    upper = fields.Rational()
    lower_ok = fields.Boolean()
    upper_ok = fields.Boolean()
    oracle = fields.Integer(allow_none=True)
    oracle_agrees = fields.Boolean(allow_none=True)


class SweepRowSchema(RecordSchema):
    class Meta:
        versioned = False

    m = fields.Integer()
    b = fields.Integer(data_key="b_m")
    ratio = fields.Rational()
    lower_ok = fields.Boolean()
    upper_ok = fields.Boolean()


class SweepSchema(RecordSchema):
    spec = fields.Nested(WeightSpecSchema)
    epsilon = fields.Rational()
    d = fields.Integer()
    rows = fields.Nested(SweepRowSchema, many=True)
    multiples = fields.Method("dump_multiples")
    ok = fields.Boolean()

    def dump_multiples(self, sweep):
        return [{"r": r, "m": m, "ok": ok} for r, m, ok in sweep.multiples]


class CompositionSchema(RecordSchema):
    m = fields.Integer()
    r = fields.Integer()
    k = fields.Integer()
    s = fields.Integer()
    b_r = fields.Integer()
    size = fields.Integer()
    bound = fields.Integer()
    representative = fields.Boolean()
    code = fields.Nested(RepCodeSchema)


class MomentTableSchema(RecordSchema):
    n_max = fields.Integer()
    s_max = fields.Integer()
    values = fields.Method("dump_values")

    def dump_values(self, table):
        return [{"n": n, "s": s, "value": format_rational(value)} for n, s, value in table.cells()]


class CycleDecompositionSchema(RecordSchema):
    class Meta:
        model = CycleDecomposition
        unknown = EXCLUDE

    cycles = fields.Method("dump_cycles", "load_cycles", required=True)
    count = fields.Integer(dump_only=True)
    first_cycle_length = fields.Integer(dump_only=True)

    def dump_cycles(self, decomposition):
        return [list(c) for c in decomposition.one_based()]

    def load_cycles(self, value):
        return [[v - 1 for v in c] for c in value]


class CycleSampleSchema(RecordSchema):
    n = fields.Integer()
    trials = fields.Integer()
    seed = fields.Integer()
    mean = fields.Float()
    variance = fields.Float()
    exact_mean = fields.Function(lambda sample: format_rational(mean(sample.n)))
    exact_variance = fields.Function(lambda sample: format_rational(variance(sample.n)))
    mean_error = fields.Function(lambda sample: sample.mean_error())
    count_histogram = fields.List(fields.Integer())
    first_cycle_histogram = fields.List(fields.Integer())
    first_cycle_errors = fields.Method("dump_first_cycle_errors")

    def dump_first_cycle_errors(self, sample):
        return {str(k): error for k, error in sample.first_cycle_errors().items()}


class RunConfigSchema(RecordSchema):
    class Meta:
        model = RunConfig
        versioned = False

    command = fields.String(required=True)
    params = fields.Dict(load_default=dict)
    budget = fields.Integer(allow_none=True, load_default=None, validate=Range(min=1))
    seed = fields.Integer(load_default=DEFAULT_SEED)
    format = fields.String(load_default="json", validate=OneOf(OUTPUT_FORMATS))
    out = fields.String(allow_none=True, load_default=None)
    timing = fields.Boolean(load_default=False)
    chunk_size = fields.Integer(load_default=DEFAULT_CHUNK_SIZE, validate=Range(min=1))
    workers = fields.Integer(load_default=1, validate=Range(min=1))


class EnvelopeSchema(RecordSchema):
    """The report written by every command."""

    class Meta:
        model = ReportEnvelope

    tool = fields.String(required=True)
    version = fields.String(required=True)
    command = fields.String(required=True)
    input = fields.Dict(required=True)
    result = fields.Raw(required=True)
    budget_exhausted = fields.Boolean(load_default=False)
    timing = fields.Float(allow_none=True, load_default=None)
