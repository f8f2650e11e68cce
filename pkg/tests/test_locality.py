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
"""Tests for partial locality: capability, the iteration budget and shortening."""

import pytest

from combrec.codes import Code, is_determined, min_distance, reach
from combrec.locality import (
    LocalityStructure,
    build_example_code,
    capable_positions,
    compute_T,
    example_parity_position,
    reduced_min_distance,
    shorten,
    verify_capability,
)
from combrec.reproduce import random_cases
from combrec.utils import BudgetExceededError


def test_locality_structure_validation():
    loc = LocalityStructure([0, 1, 2], 1, 2, {(0,): [1, 2]}, n=3)
    assert loc.theta_size == 3
    assert loc.locality_set([0]) == {1, 2}
    assert loc.locality_set([1]) is None

    with pytest.raises(ValueError):
        LocalityStructure([0, 1], 2, 2, {(0,): [1]})
    with pytest.raises(ValueError):
        LocalityStructure([0, 1, 2], 1, 1, {(0,): [1, 2]})
    with pytest.raises(ValueError):
        LocalityStructure([0, 1, 2], 1, 2, {(0,): [0, 1]})
    with pytest.raises(ValueError):
        LocalityStructure([0, 5], 1, 2, n=3)
    with pytest.raises(ValueError):
        LocalityStructure([0], 0, 2)


def test_verify_capability_search(even_code):
    loc = LocalityStructure([0, 1, 2], 1, 2, n=3)
    result = verify_capability(even_code, loc)

    assert result
    assert result.exhaustive
    assert result.locality_map[frozenset({0})] == frozenset({1, 2})


def test_verify_capability_counterexample(even_code):
    result = verify_capability(even_code, LocalityStructure([0, 1, 2], 1, 1, n=3))

    assert not result.capable
    assert result.exhaustive
    assert result.counterexample == (0,)


def test_verify_capability_pairs(even_code):
    # two positions are never determined by the third alone
    result = verify_capability(even_code, LocalityStructure([0, 1, 2], 2, 1, n=3))

    assert not result.capable
    assert result.counterexample == (0, 1)


def test_verify_capability_budget(even_code):
    with pytest.raises(BudgetExceededError) as e:
        verify_capability(even_code, LocalityStructure([0, 1, 2], 1, 2, n=3), budget=1)

    assert "explicit locality map" in str(e.value)


def test_verify_capability_with_bad_map(even_code):
    loc = LocalityStructure([0, 1, 2], 1, 2, {(0,): [1, 2], (1,): [0, 2], (2,): [0]}, n=3)
    result = verify_capability(even_code, loc)

    assert not result.capable
    assert not result.exhaustive
    assert result.counterexample == (2,)


def test_capable_positions(even_code):
    assert capable_positions(even_code, 1) == set()
    assert capable_positions(even_code, 2) == {0, 1, 2}


def test_example_layout():
    assert example_parity_position(10, (0, 1, 2)) == 10
    assert example_parity_position(10, (2, 0, 1)) == 10
    assert example_parity_position(10, (0, 2, 3)) == 18
    assert example_parity_position(10, (7, 8, 9)) == 129

    with pytest.raises(ValueError):
        example_parity_position(10, (0, 0, 1))


def test_example_code(example):
    code, loc = example

    assert code.n == 131
    assert code.size == 1024
    assert code.k == 10
    assert loc.theta_size == 130
    assert loc.tau == 1
    assert loc.r == 3
    assert loc.locality_set([0]) == {10, 11, 18}
    assert loc.locality_set([10]) == {0, 1, 2}
    assert min_distance(code) == 38


def test_example_capability(example):
    code, loc = example

    assert verify_capability(code, loc).capable

    full = LocalityStructure(range(code.n), 1, 3, loc.locality_map, n=code.n)
    result = verify_capability(code, full)
    assert not result.capable
    assert result.counterexample == (130,)


def test_example_code_small_k():
    code, loc = build_example_code(4)

    assert code.n == 4 + 4 + 1
    assert code.size == 16

    with pytest.raises(ValueError):
        build_example_code(3)


def test_compute_T_example():
    report = compute_T(131, 10, 130, 1, 3)

    assert report.T == 2
    assert report.singleton == 122
    assert report.bound == 120
    assert report.delta == 64
    assert [c.t for c in report.conditions] == [1, 2, 3]
    assert [c.passed for c in report.conditions] == [True, True, False]
    assert not report.conditions[-1].first


def test_compute_T_nonlinear():
    report = compute_T(131, 10, 130, 1, 3, linear=False)

    assert report.T == 0
    assert report.bound == 122
    assert not report.conditions[0].second


def test_compute_T_without_room():
    report = compute_T(10, 5, 4, 2, 2)

    assert report.T == 0
    assert report.bound == 6


def test_compute_T_invalid():
    with pytest.raises(ValueError):
        compute_T(5, 10, 5, 1, 1)
    with pytest.raises(ValueError):
        compute_T(10, 5, 11, 1, 1)
    with pytest.raises(ValueError):
        compute_T(10, 5, 5, 1, 1, q=1)


def test_shorten_example(example):
    code, loc = example
    trace = shorten(code, loc)

    first = trace.steps[0]
    assert first.p == (0,)
    assert first.i == (10, 11, 18)
    assert first.subcode_size == 128
    assert first.j == {0}

    assert trace.progress_guaranteed
    assert trace.guaranteed_T == 2
    assert trace.iterations >= 2
    assert all(trace.size_invariants())
    assert all(trace.reach_invariants())
    assert trace.certified_bound >= 38
    assert reduced_min_distance(trace) >= 38


def test_shorten_stops_on_single_word(even_code):
    loc = LocalityStructure([0, 1, 2], 1, 2, {(0,): [1, 2], (1,): [0, 2], (2,): [0, 1]}, n=3)
    trace = shorten(even_code, loc)

    assert trace.iterations == 1
    assert trace.stop_reason == "subcode has fewer than two words"
    assert trace.steps[0].subcode_size == 1
    assert not trace.progress_guaranteed
    assert trace.final_code.size == 4
    assert trace.reduced_length == 3
    assert trace.certified_bound == 2


def test_shorten_needs_map(even_code):
    with pytest.raises(ValueError):
        shorten(even_code, LocalityStructure([0, 1, 2], 1, 2, n=3))


def test_example_recovers_first_message_bit(example):
    code, _ = example
    parities = [example_parity_position(10, triple) for triple in [(0, 1, 2), (0, 1, 3), (0, 2, 3)]]

    assert parities == [10, 11, 18]
    assert is_determined(code, parities, 0)
    assert not is_determined(code, parities[:2], 0)
    assert 0 in reach(code, parities)


def test_repetition_code_capability_and_shortening():
    repetition = Code.binary(["000", "111"], linear=True)
    loc = LocalityStructure([0, 1, 2], 1, 1, n=3)

    result = verify_capability(repetition, loc)
    assert result.capable
    assert result.exhaustive
    assert all(len(t) == 1 for t in result.locality_map.values())

    trace = shorten(repetition, loc.with_map(result.locality_map))
    assert trace.iterations == 1
    step = trace.steps[0]
    assert step.p == (0,)
    assert step.i == (1,)
    assert step.j == {0, 2}
    assert step.subcode_size == 1
    assert trace.stop_reason == "subcode has fewer than two words"
    assert trace.size_invariants() == [True]
    assert trace.reach_invariants() == [True]
    assert trace.certified_bound == 3 == min_distance(repetition)


@pytest.mark.parametrize(
    "n,k,theta,tau,r", [(131, 10, 130, 1, 3), (60, 20, 58, 2, 2), (40, 12, 38, 1, 1), (200, 30, 199, 3, 4)]
)
@pytest.mark.parametrize("linear", [True, False])
def test_compute_T_is_monotone(n, k, theta, tau, r, linear):
    by_theta = [compute_T(n, k, t, tau, r, linear=linear).T for t in range(n + 1)]
    by_k = [compute_T(n, d, theta, tau, r, linear=linear).T for d in range(1, n + 1)]
    by_r = [compute_T(n, k, theta, tau, s, linear=linear).T for s in range(1, 2 * k)]

    assert by_theta == sorted(by_theta)
    assert by_k == sorted(by_k)
    assert by_r == sorted(by_r, reverse=True)


@pytest.mark.parametrize("case", random_cases(7, 6), ids=lambda case: repr(case.code))
def test_bound_and_shortening_on_random_codes(case):
    code, loc = case.code, case.loc
    distance = min_distance(code)

    assert verify_capability(code, loc).capable
    assert distance <= compute_T(code.n, code.k, loc.theta_size, loc.tau, loc.r).bound

    trace = shorten(code, loc)
    assert all(trace.size_invariants())
    assert all(trace.reach_invariants())
    assert reduced_min_distance(trace) >= distance
    assert trace.certified_bound >= distance
