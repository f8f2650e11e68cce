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
"""Combrec utilities."""

import logging
import math
import os
import typing
from fractions import Fraction

from lazy_object_proxy.slots import Proxy as LazyProxy

logger = logging.getLogger("combrec")

DEFAULT_WORK_BUDGET = 10 ** 8
DEFAULT_DELTA_CEILING = 10 ** 9

WORK_BUDGET_ENV = "COMBREC_WORK_BUDGET"
DELTA_CEILING_ENV = "COMBREC_DELTA_CEILING"

__all__ = [
    "BudgetExceededError",
    "LazyProxy",
    "ceil_log",
    "check_budget",
    "format_rational",
    "get_delta_ceiling",
    "get_work_budget",
    "parse_rational",
    "warn_once",
]

_warned = set()


class BudgetExceededError(ValueError):
    """Raised when an exhaustive enumeration would exceed the configured work budget.

    Args:
        work (int): Estimated number of elementary checks.
        budget (int): The configured budget.
        what (str): Name of the enumeration.
        advice (str): Optional hint appended to the message.
    """

    def __init__(self, work, budget, what, advice=None):
        self.work = work
        self.budget = budget
        self.what = what
        message = "{what} needs about {work} elementary checks, over the work budget of {budget}".format(
            what=what, work=work, budget=budget
        )
        if advice:
            message = "{}; {}".format(message, advice)
        super().__init__(message)


def _env_int(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw.replace("_", ""))
    except ValueError:
        raise ValueError("Environment variable {} must be an integer, got {!r}".format(name, raw))
    if value <= 0:
        raise ValueError("Environment variable {} must be positive, got {}".format(name, value))
    return value


def get_work_budget(budget: typing.Optional[int] = None) -> int:
    """Resolve the work budget: explicit value, then ``COMBREC_WORK_BUDGET``, then the default."""
    if budget is not None:
        if budget <= 0:
            raise ValueError("Work budget must be positive, got {}".format(budget))
        return budget
    return _env_int(WORK_BUDGET_ENV, DEFAULT_WORK_BUDGET)


def get_delta_ceiling(ceiling: typing.Optional[int] = None) -> int:
    """Resolve the saturation ceiling used when reporting Delta values."""
    if ceiling is not None:
        if ceiling <= 0:
            raise ValueError("Delta ceiling must be positive, got {}".format(ceiling))
        return ceiling
    return _env_int(DELTA_CEILING_ENV, DEFAULT_DELTA_CEILING)


def check_budget(work: int, budget: typing.Optional[int], what: str, advice: typing.Optional[str] = None) -> int:
    """Raise ``BudgetExceededError`` if ``work`` exceeds the resolved budget.

    Returns:
        int: The resolved budget.
    """
    budget = get_work_budget(budget)
    logger.debug("%s: estimated work %d (budget %d)", what, work, budget)
    if work > budget:
        raise BudgetExceededError(work, budget, what, advice=advice)
    return budget


def warn_once(log: logging.Logger, message: str, *args) -> None:
    """Log a warning the first time a given message and arguments occur in this process."""
    key = (message, args)
    if key in _warned:
        return
    _warned.add(key)
    log.warning(message, *args)


def parse_rational(value) -> Fraction:
    """Turns ``"p/q"`` strings, integers and fractions into an exact ``Fraction``.

    Floats are refused so that threshold comparisons never depend on binary rounding.

    >>> parse_rational("2/4")
    Fraction(1, 2)
    >>> parse_rational(3)
    Fraction(3, 1)
    """
    if isinstance(value, bool):
        raise ValueError("Expected a rational, got a boolean")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValueError("Rationals must be written as 'p/q' or as integers, got {!r}".format(value))
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ValueError("Invalid rational {!r}".format(value))
    raise ValueError("Expected a rational as 'p/q', got {!r} of type {}".format(value, type(value).__name__))


def format_rational(value) -> str:
    """Serialize a rational as ``"p/q"`` in lowest terms.

    >>> format_rational(Fraction(6, 4))
    '3/2'
    >>> format_rational(1)
    '1/1'
    """
    value = Fraction(value)
    return "{}/{}".format(value.numerator, value.denominator)


def ceil_log(base: int, value: int) -> int:
    """Smallest integer ``e >= 0`` with ``base ** e >= value``, computed exactly.

    >>> ceil_log(2, 1024)
    10
    >>> ceil_log(2, 1025)
    11
    """
    if base < 2:
        raise ValueError("Logarithm base must be at least 2, got {}".format(base))
    if value < 1:
        raise ValueError("Logarithm argument must be positive, got {}".format(value))
    exponent = max(0, int(math.log(value, base)) - 1)
    power = base ** exponent
    while power < value:
        power *= base
        exponent += 1
    return exponent
