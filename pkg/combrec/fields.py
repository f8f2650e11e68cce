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
"""Marshmallow fields for exact and position-valued data.

Schemas import this module as ``fields``; besides the domain fields below it re-exports the marshmallow fields
they combine with.
"""

import logging
import math

from marshmallow.exceptions import ValidationError
from marshmallow.fields import Boolean, Dict, Field, Float, Function, Integer, List, Method, Nested, Raw, String

from combrec.codes import ExtendedCount, PositionSet
from combrec.utils import format_rational, parse_rational

logger = logging.getLogger("combrec")

__all__ = [
    "Boolean",
    "Dict",
    "Extended",
    "Float",
    "Function",
    "Integer",
    "List",
    "Method",
    "Nested",
    "Point",
    "PointSet",
    "Positions",
    "Rational",
    "Raw",
    "String",
]


class Rational(Field):
    """An exact rational written as ``"p/q"`` in lowest terms.

    Integers are accepted when loading; floats are refused.
    """

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        return format_rational(value)

    def _deserialize(self, value, attr, data, **kwargs):
        try:
            return parse_rational(value)
        except ValueError as e:
            raise ValidationError(str(e))


class Positions(Field):
    """A set of positions, 1-based and sorted on the wire, a 0-based ``PositionSet`` in Python."""

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        return [p + 1 for p in sorted(value)]

    def _deserialize(self, value, attr, data, **kwargs):
        if not isinstance(value, (list, tuple)):
            raise ValidationError("Positions must be a list of 1-based integers.")
        for p in value:
            if not isinstance(p, int) or isinstance(p, bool) or p < 1:
                raise ValidationError("Invalid 1-based position {!r}.".format(p))
        try:
            return PositionSet.from_one_based(value)
        except ValueError as e:
            raise ValidationError(str(e))


class Point(Field):
    """A lattice point as a list of 1-based coordinates."""

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        return [int(v) for v in value]

    def _deserialize(self, value, attr, data, **kwargs):
        if not isinstance(value, (list, tuple)) or not value:
            raise ValidationError("A point must be a non-empty list of coordinates.")
        if any(not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in value):
            raise ValidationError("Point coordinates must be 1-based integers, got {!r}.".format(value))
        return tuple(value)


class PointSet(List):
    """A set of lattice points, dumped in lexicographic order."""

    def __init__(self, **kwargs):
        super().__init__(Point(), **kwargs)

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        return super()._serialize(sorted(value), attr, obj, **kwargs)

    def _deserialize(self, value, attr, data, **kwargs):
        points = super()._deserialize(value, attr, data, **kwargs)
        if len(set(points)) != len(points):
            raise ValidationError("Duplicate points.")
        return frozenset(points)


class Extended(Field):
    """A count that may be saturated: an integer, or ``"inf"``."""

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        if isinstance(value, ExtendedCount):
            return "inf" if value.is_infinite else value.value
        if value == math.inf:
            return "inf"
        return int(value)

    def _deserialize(self, value, attr, data, **kwargs):
        if value == "inf":
            return ExtendedCount()
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise ValidationError("Expected a non-negative integer or 'inf', got {!r}.".format(value))
        return ExtendedCount(value)
