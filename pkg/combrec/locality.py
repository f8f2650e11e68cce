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
"""Partial-locality correction capability, the iteration budget ``T`` and the shortening procedure."""

import itertools
import logging
import math
import typing
from collections.abc import Mapping

import numpy as np

from combrec.codes import Alphabet, Code, PositionSet, delta_bound, delta_fits, min_distance, reach
from combrec.utils import ceil_log, check_budget, warn_once

logger = logging.getLogger("combrec")

EXAMPLE_MIN_K = 10


class LocalityStructure(object):
    """A ``(Theta, tau, r)`` locality structure with an optional explicit locality map.

    Args:
        theta (Iterable[int]): The positions ``Theta`` (0-based).
        tau (int): Size of the position sets that must be jointly recoverable.
        r (int): Maximum size of a locality set.
        locality_map (dict): Optional map from ``tau``-subsets of ``theta`` to their locality sets, or an iterable
            of such pairs.
        n (int): Optional block length used to bound-check positions.
    """

    def __init__(self, theta, tau, r, locality_map=None, n=None):
        if tau < 1 or r < 1:
            raise ValueError("tau and r must be positive, got tau={} r={}".format(tau, r))
        if tau == 1:
            warn_once(logger, "tau=1 is below the tau >= 2 of the capability definition; accepted as in the example")
        self.theta = PositionSet.of(theta, n)
        self.tau = tau
        self.r = r
        self.n = n
        if n is not None and len(self.theta) > n:
            raise ValueError("Theta has {} positions but the length is {}".format(len(self.theta), n))

        self.locality_map = None
        if locality_map is not None:
            self.locality_map = {}
            pairs = locality_map.items() if isinstance(locality_map, Mapping) else locality_map
            for p, t in pairs:
                p, t = PositionSet.of(p, n), PositionSet.of(t, n)
                if len(p) != tau or not p <= self.theta:
                    raise ValueError("Mapped set {} is not a {}-subset of Theta".format(sorted(p), tau))
                if len(t) > r:
                    raise ValueError("Locality set {} for {} exceeds r={}".format(sorted(t), sorted(p), r))
                if t & p:
                    raise ValueError("Locality set {} intersects its set {}".format(sorted(t), sorted(p)))
                self.locality_map[p] = t

    @property
    def theta_size(self):
        return len(self.theta)

    def locality_set(self, p):
        """The mapped locality set of ``p``, or ``None``."""
        if self.locality_map is None:
            return None
        return self.locality_map.get(frozenset(p))

    def with_map(self, locality_map):
        """A copy of this structure carrying ``locality_map``."""
        return LocalityStructure(self.theta, self.tau, self.r, locality_map=locality_map, n=self.n)

    def __repr__(self):
        return "LocalityStructure(theta={}, tau={}, r={}, mapped={})".format(
            sorted(self.theta), self.tau, self.r, self.locality_map is not None
        )


class CapabilityResult(object):
    """Outcome of a capability check.

    Args:
        capable (bool): Whether every ``tau``-subset of ``Theta`` is covered.
        locality_map (dict): The supplied or discovered locality map.
        counterexample (tuple): The first uncovered ``tau``-subset, when not capable.
        exhaustive (bool): Whether the verdict comes from exhaustive search over all candidate locality sets.
    """

    def __init__(self, capable, locality_map, counterexample=None, exhaustive=False):
        self.capable = capable
        self.locality_map = locality_map
        self.counterexample = counterexample
        self.exhaustive = exhaustive

    def __bool__(self):
        return self.capable

    def __repr__(self):
        return "CapabilityResult(capable={}, counterexample={}, exhaustive={})".format(
            self.capable, self.counterexample, self.exhaustive
        )


def _candidate_work(code, r):
    return sum(math.comb(code.n, s) for s in range(r + 1)) * code.size


def _candidate_sets(n, r):
    for size in range(r + 1):
        yield from itertools.combinations(range(n), size)


def verify_capability(code: Code, loc: LocalityStructure, budget: typing.Optional[int] = None) -> CapabilityResult:
    """Check the ``(Theta, tau, r)`` local correction capability of a code.

    With a locality map every ``tau``-subset of ``Theta`` must be mapped to a set determining all its positions.
    Without one, all candidate sets of size at most ``r`` are searched under the work budget, smallest first.
    """
    subsets = list(itertools.combinations(sorted(loc.theta), loc.tau))

    if loc.locality_map is not None:
        reaches = {}
        for p in subsets:
            t = loc.locality_set(p)
            if t is None:
                logger.debug("No locality set mapped for %s", p)
                return CapabilityResult(False, loc.locality_map, counterexample=p)
            if t not in reaches:
                reaches[t] = reach(code, t)
            if not set(p) <= reaches[t]:
                logger.debug("Locality set %s does not determine %s", sorted(t), p)
                return CapabilityResult(False, loc.locality_map, counterexample=p)
        return CapabilityResult(True, loc.locality_map)

    check_budget(
        _candidate_work(code, loc.r),
        budget,
        "capability search over locality sets of size <= {}".format(loc.r),
        advice="supply an explicit locality map instead",
    )
    uncovered = set(subsets)
    found = {}
    for t in _candidate_sets(code.n, loc.r):
        if not uncovered:
            break
        covered = sorted(reach(code, t) & loc.theta)
        for p in itertools.combinations(covered, loc.tau):
            if p in uncovered:
                uncovered.discard(p)
                found[frozenset(p)] = frozenset(t)
    if uncovered:
        return CapabilityResult(False, found, counterexample=min(uncovered), exhaustive=True)
    return CapabilityResult(True, found, exhaustive=True)


def capable_positions(code: Code, r: int, budget: typing.Optional[int] = None) -> PositionSet:
    """Positions that some set of at most ``r`` other positions determines."""
    check_budget(_candidate_work(code, r), budget, "locality search over sets of size <= {}".format(r))
    positions = set()
    for t in _candidate_sets(code.n, r):
        positions |= reach(code, t)
        if len(positions) == code.n:
            break
    return PositionSet(positions)


def _example_layout(k):
    triples = list(itertools.combinations(range(k), 3))
    return {triple: k + i for i, triple in enumerate(triples)}


def example_parity_position(k: int, triple) -> int:
    """0-based position of the parity ``c_a + c_b + c_c`` in the example code of dimension ``k``."""
    triple = tuple(sorted(triple))
    layout = _example_layout(k)
    if triple not in layout:
        raise ValueError("{} is not a triple of distinct message positions for k={}".format(triple, k))
    return layout[triple]


def build_example_code(k: int = EXAMPLE_MIN_K) -> typing.Tuple[Code, LocalityStructure]:
    """The binary linear code of length ``k + C(k, 3) + 1`` with triple parities and a full parity.

    Message bits come first, then ``c_a + c_b + c_c`` for every triple ``a < b < c`` in lexicographic order,
    then the parity of all message bits. The returned structure has ``Theta`` = every position but the last,
    ``tau = 1`` and ``r = 3``; message bit ``j`` is recovered from the three parities over ``j`` and the three
    smallest other message positions, each triple parity from its three message bits.
    """
    if k < 4:
        raise ValueError("The example code needs k >= 4, got {}".format(k))
    if k < EXAMPLE_MIN_K:
        logger.warning("k=%d < %d: position n may become recoverable from three bits", k, EXAMPLE_MIN_K)

    layout = _example_layout(k)
    n = k + len(layout) + 1

    messages = (np.arange(2 ** k)[:, None] >> np.arange(k - 1, -1, -1)) & 1
    triples = np.array(list(layout), dtype=np.int64)
    parities = messages[:, triples].sum(axis=2) % 2
    total = messages.sum(axis=1, keepdims=True) % 2
    code = Code(Alphabet.of_size(2), np.concatenate([messages, parities, total], axis=1), k=k, linear=True)

    locality_map = {}
    for j in range(k):
        a, b, c = [i for i in range(k) if i != j][:3]
        locality_map[(j,)] = [layout[tuple(sorted(x))] for x in ((j, a, b), (j, a, c), (j, b, c))]
    for triple, position in layout.items():
        locality_map[(position,)] = list(triple)

    return code, LocalityStructure(range(n - 1), 1, 3, locality_map=locality_map, n=n)


class ConditionRecord(object):
    """Evaluation of both iteration conditions at one ``t``."""

    def __init__(self, t, first, second):
        self.t = t
        self.first = first
        self.second = second

    @property
    def passed(self):
        return self.first and self.second

    def __repr__(self):
        return "ConditionRecord(t={}, first={}, second={})".format(self.t, self.first, self.second)


class BoundReport(object):
    """The iteration budget ``T`` and the resulting distance bound ``n - k + 1 - T * tau``."""

    def __init__(self, n, k, theta, tau, r, q, linear, T, conditions):
        self.n = n
        self.k = k
        self.theta = theta
        self.tau = tau
        self.r = r
        self.q = q
        self.linear = linear
        self.T = T
        self.conditions = conditions

    @property
    def singleton(self):
        return self.n - self.k + 1

    @property
    def bound(self):
        return self.singleton - self.T * self.tau

    @property
    def delta(self):
        """``Delta(T * r)``, saturated for reporting."""
        return delta_bound(self.q, self.T * self.r, self.linear)

    def __repr__(self):
        return "BoundReport(T={}, bound={}, singleton={})".format(self.T, self.bound, self.singleton)


def compute_T(n: int, k: int, theta: int, tau: int, r: int, q: int = 2, linear: bool = True) -> BoundReport:
    """Largest ``t >= 0`` with ``t*r <= k-1+theta-n`` and ``t*r + Delta(t*r) <= theta-tau+1``.

    Both conditions only get harder as ``t`` grows, so the scan stops at the first failing ``t``; its record is
    kept in the report. ``T = 0`` leaves the plain Singleton bound.
    """
    if not n >= k >= 1:
        raise ValueError("Parameters must satisfy n >= k >= 1, got n={} k={}".format(n, k))
    if tau < 1 or r < 1:
        raise ValueError("tau and r must be positive, got tau={} r={}".format(tau, r))
    if not 0 <= theta <= n:
        raise ValueError("theta must lie in [0, n], got {}".format(theta))
    if q < 2:
        raise ValueError("q must be at least 2, got {}".format(q))

    conditions = []
    t = 0
    while True:
        candidate = t + 1
        w = candidate * r
        first = w <= k - 1 + theta - n
        second = delta_fits(q, w, linear, theta - tau + 1 - w)
        conditions.append(ConditionRecord(candidate, first, second))
        if not (first and second):
            break
        t = candidate
    return BoundReport(n, k, theta, tau, r, q, linear, t, conditions)


class ShorteningStep(object):
    """One iteration: the chosen set ``P_j``, its fresh locality part ``I_j``, the pinned values ``x_j``, the
    subcode size after pinning and the reach ``J_j`` of all pinned positions so far."""

    def __init__(self, p, i, x, subcode_size, j):
        self.p = tuple(p)
        self.i = tuple(i)
        self.x = tuple(x)
        self.subcode_size = subcode_size
        self.j = PositionSet(j)

    @property
    def m(self):
        return len(self.i)

    def __repr__(self):
        return "ShorteningStep(P={}, I={}, size={}, #J={})".format(self.p, self.i, self.subcode_size, len(self.j))


class ShorteningTrace(object):
    """Record of the shortening procedure and the bound it certifies."""

    def __init__(
        self,
        code,
        loc,
        steps,
        stop_reason,
        progress_guaranteed,
        guaranteed_T,
        final_positions,
        final_code,
    ):
        self.code = code
        self.loc = loc
        self.steps = steps
        self.stop_reason = stop_reason
        self.progress_guaranteed = progress_guaranteed
        self.guaranteed_T = guaranteed_T
        self.final_positions = PositionSet(final_positions)
        self.final_code = final_code

    @property
    def iterations(self):
        return len(self.steps)

    @property
    def reduced_length(self):
        return len(self.final_positions)

    @property
    def certified_bound(self):
        """Singleton bound of the reduced code: ``len(Q) + 1 - ceil(log_q #D)``."""
        return self.reduced_length + 1 - ceil_log(self.code.q, self.final_code.size)

    def size_invariants(self):
        """Per-iteration check of ``#C_j * q ** (m_1 + ... + m_j) >= #C``."""
        pinned = 0
        results = []
        for step in self.steps:
            pinned += step.m
            results.append(step.subcode_size * self.code.q ** pinned >= self.code.size)
        return results

    def reach_invariants(self):
        """Per-iteration check of ``#J_j >= j * tau``."""
        return [len(step.j) >= (j + 1) * self.loc.tau for j, step in enumerate(self.steps)]

    def __repr__(self):
        return "ShorteningTrace(iterations={}, certified_bound={}, stop_reason={!r})".format(
            self.iterations, self.certified_bound, self.stop_reason
        )


def _log_dimension(code):
    return code.k if code.k is not None else code.log_size


def shorten(code: Code, loc: LocalityStructure) -> ShorteningTrace:
    """Run the shortening procedure behind the distance bound.

    Each iteration takes the lexicographically smallest ``tau``-subset ``P`` of the remaining positions whose
    locality set still has unfixed positions, pins those positions to their most frequent value (ties go to the
    lexicographically smallest value), and recomputes the reach of all pinned positions in the full code. The
    run stops when fewer than ``tau`` positions remain, when no locality set has unfixed positions, or when the
    subcode drops below two words. The certificate uses the last iterate with at least two words.
    """
    if loc.locality_map is None:
        raise ValueError("Shortening needs an explicit locality map; run verify_capability first")

    k = _log_dimension(code)
    progress_guaranteed = loc.r + code.n - loc.theta_size < k
    if not progress_guaranteed:
        warn_once(logger, "r + n - theta is not below k; the shortening may stop early")
    guaranteed_T = 0
    if code.k is not None:
        guaranteed_T = compute_T(code.n, code.k, loc.theta_size, loc.tau, loc.r, code.q, bool(code.linear)).T

    rows = np.arange(code.size)
    pinned = set()
    fixed = set()
    certified_rows, certified_fixed = rows, set()
    steps = []
    stop_reason = None

    while stop_reason is None:
        remaining = sorted(loc.theta - fixed)
        if len(remaining) < loc.tau:
            stop_reason = "fewer than tau positions remain"
            break

        choice = None
        for p in itertools.combinations(remaining, loc.tau):
            t = loc.locality_set(p)
            if t is not None and t - fixed:
                choice = p, sorted(t - fixed)
                break
        if choice is None:
            stop_reason = "no locality set has unfixed positions"
            break

        p, fresh = choice
        values, labels, counts = np.unique(
            code.words[rows][:, fresh], axis=0, return_inverse=True, return_counts=True
        )
        best = int(np.argmax(counts))
        rows = rows[np.asarray(labels).reshape(-1) == best]

        pinned.update(fresh)
        j = reach(code, pinned)
        fixed = pinned | j
        steps.append(ShorteningStep(p, fresh, values[best].tolist(), len(rows), j))
        logger.debug("Shortening step %d: P=%s I=%s size=%d #J=%d", len(steps), p, fresh, len(rows), len(j))

        if len(rows) < 2:
            stop_reason = "subcode has fewer than two words"
        else:
            certified_rows, certified_fixed = rows, set(fixed)

    final_positions = sorted(set(range(code.n)) - certified_fixed)
    final_code = code.subcode(certified_rows).restrict(final_positions)
    return ShorteningTrace(
        code,
        loc,
        steps,
        stop_reason,
        progress_guaranteed,
        guaranteed_T,
        final_positions,
        final_code,
    )


def reduced_min_distance(trace: ShorteningTrace) -> int:
    """Minimum distance of the reduced code of a trace."""
    return min_distance(trace.final_code, method="pairwise")
