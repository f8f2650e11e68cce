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
"""Cycle structure of uniform random permutations: exact moments, closed forms, oracles and sampling.

Permutations are 0-based in the Python API; cycle notation is printed 1-based.
"""

import itertools
import logging
import math
import typing
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np
from scipy import stats as sp_stats

from combrec.utils import check_budget

logger = logging.getLogger("combrec")

STIRLING_MAX_N = 200
JOINT_MAX_N = 6
DEFAULT_SEED = 42
DEFAULT_CHUNK_SIZE = 100_000


class Permutation(object):
    """A bijection of ``{0, ..., n-1}``; entry ``i`` of ``mapping`` is the image of ``i``."""

    def __init__(self, mapping):
        mapping = tuple(int(v) for v in mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise ValueError("Mapping {} is not a bijection of range({})".format(list(mapping), len(mapping)))
        self.mapping = mapping

    @classmethod
    def from_one_based(cls, mapping):
        return cls(v - 1 for v in mapping)

    @classmethod
    def identity(cls, n):
        return cls(range(n))

    @property
    def n(self):
        return len(self.mapping)

    def __call__(self, i):
        return self.mapping[i]

    def __eq__(self, other):
        return isinstance(other, Permutation) and self.mapping == other.mapping

    def __hash__(self):
        return hash(self.mapping)

    def __repr__(self):
        return "Permutation({})".format(list(self.mapping))


class CycleDecomposition(object):
    """Cycles of a permutation, each starting at its smallest element, in order of those elements.

    The cycle containing ``0`` comes first, so ``first_cycle_length`` is the length of that cycle.
    """

    def __init__(self, cycles):
        self.cycles = tuple(tuple(c) for c in cycles)

    @property
    def count(self):
        return len(self.cycles)

    @property
    def first_cycle_length(self):
        return len(self.cycles[0]) if self.cycles else 0

    def one_based(self):
        return [tuple(v + 1 for v in c) for c in self.cycles]

    def __str__(self):
        return "".join("({})".format(",".join(str(v) for v in c)) for c in self.one_based())

    def __repr__(self):
        return "CycleDecomposition({})".format(self)


def _as_permutation(p):
    return p if isinstance(p, Permutation) else Permutation(p)


def cycle_decompose(p) -> CycleDecomposition:
    """Canonical cycle decomposition.

    >>> str(cycle_decompose(Permutation.from_one_based([3, 6, 4, 5, 1, 7, 2, 9, 8])))
    '(1,3,4,5)(2,6,7)(8,9)'
    """
    p = _as_permutation(p)
    seen = [False] * p.n
    cycles = []
    for start in range(p.n):
        if seen[start]:
            continue
        cycle = []
        i = start
        while not seen[i]:
            seen[i] = True
            cycle.append(i)
            i = p(i)
        cycles.append(cycle)
    return CycleDecomposition(cycles)


def induced_permutation(p) -> typing.Tuple[int, Permutation]:
    """Length of the cycle of ``0`` and the permutation it leaves on the other elements.

    The survivors are relabelled ``0, 1, ...`` in increasing order.
    """
    p = _as_permutation(p)
    first = set(cycle_decompose(p).cycles[0])
    survivors = [i for i in range(p.n) if i not in first]
    rank = {v: i for i, v in enumerate(survivors)}
    return len(first), Permutation(rank[p(v)] for v in survivors)


class MomentTable(object):
    """Exact moments ``mu[n][s] = E N_n ** s`` for ``0 <= n <= n_max`` and ``1 <= s <= s_max``.

    Row ``0`` holds zeros; column ``0`` is unused.
    """

    def __init__(self, n_max, s_max, values):
        self.n_max = n_max
        self.s_max = s_max
        self.values = values

    def __getitem__(self, key):
        if not (isinstance(key, tuple) and len(key) == 2):
            raise KeyError("Moment tables are indexed by (n, s), got {!r}".format(key))
        n, s = key
        if not (0 <= n <= self.n_max and 1 <= s <= self.s_max):
            raise KeyError("No moment for n={} s={} in a table up to n={} s={}".format(n, s, self.n_max, self.s_max))
        return self.values[n][s]

    def cells(self):
        """All ``(n, s, value)`` entries with ``n >= 1``."""
        for n in range(1, self.n_max + 1):
            for s in range(1, self.s_max + 1):
                yield n, s, self.values[n][s]

    def __repr__(self):
        return "MomentTable(n_max={}, s_max={})".format(self.n_max, self.s_max)


def moment_table(n_max: int, s_max: int) -> MomentTable:
    """Fill ``mu[n][s] = 1 + (1/n) sum_{r<=s} C(s, r) sum_{j<n} mu[j][r]`` with running prefix sums."""
    if n_max < 1 or s_max < 1:
        raise ValueError("Moment tables need n_max >= 1 and s_max >= 1, got {} and {}".format(n_max, s_max))
    binomials = [[math.comb(s, r) for r in range(s + 1)] for s in range(s_max + 1)]
    values = [[Fraction(0)] * (s_max + 1)]
    prefix = [Fraction(0)] * (s_max + 1)
    for n in range(1, n_max + 1):
        row = [Fraction(0)] * (s_max + 1)
        for s in range(1, s_max + 1):
            row[s] = 1 + sum(binomials[s][r] * prefix[r] for r in range(1, s + 1)) / n
        for r in range(1, s_max + 1):
            prefix[r] += row[r]
        values.append(row)
    return MomentTable(n_max, s_max, values)


def harmonic(n: int, power: int = 1) -> Fraction:
    """``sum_{j<=n} 1 / j ** power``."""
    return sum((Fraction(1, j ** power) for j in range(1, n + 1)), Fraction(0))


def mean(n: int) -> Fraction:
    """Expected number of cycles, the harmonic number ``H_n``.

    >>> mean(3)
    Fraction(11, 6)
    """
    if n < 1:
        raise ValueError("n must be positive, got {}".format(n))
    return harmonic(n)


def variance(n: int) -> Fraction:
    """Variance of the number of cycles, ``H_n - sum_{i<=n} 1 / i**2``.

    >>> variance(2)
    Fraction(1, 4)
    """
    if n < 1:
        raise ValueError("n must be positive, got {}".format(n))
    return harmonic(n) - harmonic(n, 2)


def propagate_mean(b1, n_max: int) -> typing.List[Fraction]:
    """``b_1, ..., b_{n_max}`` from ``b_n = 1 + (1/n) sum_{i<n} b_i``."""
    values = [Fraction(b1)]
    total = values[0]
    for n in range(2, n_max + 1):
        values.append(1 + total / n)
        total += values[-1]
    return values


def propagate_variance(v1, n_max: int) -> typing.List[Fraction]:
    """``v_1, ..., v_{n_max}`` from ``v_n = 1 + (1/n) sum_{i<n} v_i - H_n / n``."""
    values = [Fraction(v1)]
    total = values[0]
    h = Fraction(1)
    for n in range(2, n_max + 1):
        h += Fraction(1, n)
        values.append(1 + total / n - h / n)
        total += values[-1]
    return values


def stirling_numbers(n: int) -> typing.List[int]:
    """Unsigned Stirling numbers of the first kind ``c(n, 0), ..., c(n, n)``.

    >>> stirling_numbers(3)
    [0, 2, 3, 1]
    """
    if n < 0:
        raise ValueError("n must be non-negative, got {}".format(n))
    row = [1]
    for i in range(1, n + 1):
        row = [(row[k - 1] if k >= 1 else 0) + (i - 1) * (row[k] if k < i else 0) for k in range(i + 1)]
    return row


def stirling_distribution(n: int) -> typing.Dict[int, Fraction]:
    """Exact law of the number of cycles, ``P(N_n = k) = c(n, k) / n!``."""
    if not 1 <= n <= STIRLING_MAX_N:
        raise ValueError("Stirling distribution is limited to 1 <= n <= {}, got {}".format(STIRLING_MAX_N, n))
    row = stirling_numbers(n)
    total = math.factorial(n)
    return {k: Fraction(row[k], total) for k in range(1, n + 1)}


def stirling_moment(n: int, s: int) -> Fraction:
    return sum((k ** s * prob for k, prob in stirling_distribution(n).items()), Fraction(0))


def enumerate_moments(n: int, s_max: int, budget: typing.Optional[int] = None) -> typing.Dict[int, Fraction]:
    """``E N_n ** s`` for ``s = 1..s_max`` by decomposing every permutation of ``n`` elements."""
    check_budget(math.factorial(n) * n, budget, "enumeration of all permutations of {} elements".format(n))
    counts = Counter(cycle_decompose(p).count for p in itertools.permutations(range(n)))
    total = math.factorial(n)
    return {s: Fraction(sum(c ** s * times for c, times in counts.items()), total) for s in range(1, s_max + 1)}


class CycleSample(object):
    """Merged Monte Carlo counts.

    Args:
        n (int): Permutation size.
        trials (int): Number of sampled permutations.
        seed (int): Root seed.
        count_histogram (list): ``count_histogram[c]`` permutations had ``c`` cycles.
        first_cycle_histogram (list): ``first_cycle_histogram[l]`` permutations had ``L_1 = l``.
        joint (Counter): ``(L_1, induced permutation)`` counts, for small ``n`` only.
        permutations (Counter): Counts per sampled permutation, for small ``n`` only.
    """

    def __init__(self, n, trials, seed, count_histogram, first_cycle_histogram, joint=None, permutations=None):
        self.n = n
        self.trials = trials
        self.seed = seed
        self.count_histogram = list(count_histogram)
        self.first_cycle_histogram = list(first_cycle_histogram)
        self.joint = joint
        self.permutations = permutations

    @property
    def mean(self) -> float:
        return sum(c * times for c, times in enumerate(self.count_histogram)) / self.trials

    @property
    def variance(self) -> float:
        second = sum(c * c * times for c, times in enumerate(self.count_histogram)) / self.trials
        return second - self.mean ** 2

    def first_cycle_frequencies(self) -> typing.Dict[int, float]:
        return {k: self.first_cycle_histogram[k] / self.trials for k in range(1, self.n + 1)}

    def mean_error(self) -> float:
        """Distance of the sample mean from ``H_n`` in standard errors."""
        se = math.sqrt(float(variance(self.n)) / self.trials)
        diff = abs(self.mean - float(mean(self.n)))
        if se == 0:
            return 0.0 if diff < 1e-12 else math.inf
        return diff / se

    def first_cycle_errors(self) -> typing.Dict[int, float]:
        """Distance of each ``P(L_1 = k)`` estimate from ``1/n`` in binomial standard errors."""
        p = 1 / self.n
        se = math.sqrt(p * (1 - p) / self.trials)
        errors = {}
        for k, freq in self.first_cycle_frequencies().items():
            diff = abs(freq - p)
            errors[k] = (0.0 if diff < 1e-12 else math.inf) if se == 0 else diff / se
        return errors

    def induced_errors(self, k: int) -> typing.Dict[tuple, float]:
        """Given ``L_1 = k``, distance of each induced permutation frequency from uniform in standard errors."""
        if self.joint is None:
            raise ValueError("Joint counts are only collected for n <= {}".format(JOINT_MAX_N))
        conditioned = self.first_cycle_histogram[k]
        if conditioned == 0:
            raise ValueError("No sample had L_1 = {}".format(k))
        p = 1 / math.factorial(self.n - k)
        se = math.sqrt(p * (1 - p) / conditioned)
        errors = {}
        for sigma in itertools.permutations(range(self.n - k)):
            diff = abs(self.joint.get((k, sigma), 0) / conditioned - p)
            errors[sigma] = (0.0 if diff < 1e-12 else math.inf) if se == 0 else diff / se
        return errors

    def __repr__(self):
        return "CycleSample(n={}, trials={}, seed={})".format(self.n, self.trials, self.seed)


def _chunk_counts(n, size, seed_sequence, collect):
    rng = np.random.default_rng(seed_sequence)
    perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
    labels = np.arange(n)

    # each element's orbit minimum; an element leads its cycle iff it is that minimum
    orbit_min = np.broadcast_to(labels, perms.shape).copy()
    image = perms
    for _ in range(n - 1):
        np.minimum(orbit_min, image, out=orbit_min)
        image = np.take_along_axis(perms, image, axis=1)
    counts = np.count_nonzero(orbit_min == labels, axis=1)

    first = np.zeros(size, dtype=np.int64)
    position = perms[:, 0]
    for step in range(1, n + 1):
        first[(position == 0) & (first == 0)] = step
        position = perms[np.arange(size), position]

    joint = permutations = None
    if collect:
        keys = perms @ (n ** np.arange(n - 1, -1, -1))
        unique, times = np.unique(keys, return_counts=True)
        permutations = Counter()
        joint = Counter()
        for key, t in zip(unique.tolist(), times.tolist()):
            mapping = tuple((key // n ** (n - 1 - i)) % n for i in range(n))
            permutations[mapping] += t
            length, sigma = induced_permutation(mapping)
            joint[(length, sigma.mapping)] += t

    return (
        np.bincount(counts, minlength=n + 1),
        np.bincount(first, minlength=n + 1),
        joint,
        permutations,
    )


def sample_cycles(
    n: int,
    trials: int,
    seed: int = DEFAULT_SEED,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
) -> CycleSample:
    """Sample uniform permutations and tally cycle counts and first-cycle lengths.

    Trials are split into chunks, each drawn from its own ``SeedSequence`` child of ``seed``, so the merged
    counts do not depend on ``workers``. For ``n <= JOINT_MAX_N`` the counts per permutation and per
    ``(L_1, induced permutation)`` are kept as well.
    """
    if n < 1:
        raise ValueError("n must be positive, got {}".format(n))
    if trials < 1:
        raise ValueError("Sampling needs at least one trial, got {}".format(trials))
    if chunk_size < 1 or workers < 1:
        raise ValueError("chunk_size and workers must be positive, got {} and {}".format(chunk_size, workers))

    rows = max(1, min(chunk_size, 10 ** 7 // n))
    sizes = [rows] * (trials // rows) + ([trials % rows] if trials % rows else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    collect = n <= JOINT_MAX_N
    logger.debug("Sampling %d permutations of %d elements in %d chunks", trials, n, len(sizes))

    def run(job):
        size, child = job
        return _chunk_counts(n, size, child, collect)

    with ThreadPoolExecutor(max_workers=workers) as ex:
        results = list(ex.map(run, zip(sizes, children)))

    count_histogram = sum(r[0] for r in results)
    first_histogram = sum(r[1] for r in results)
    joint = permutations = None
    if collect:
        joint = sum((r[2] for r in results), Counter())
        permutations = sum((r[3] for r in results), Counter())
    return CycleSample(
        n,
        trials,
        seed,
        [int(v) for v in count_histogram],
        [int(v) for v in first_histogram],
        joint=joint,
        permutations=permutations,
    )


class ShuffleReport(object):
    """Observed frequency of every permutation with the chi-square statistic against the uniform law."""

    def __init__(self, n, trials, counts, statistic, pvalue):
        self.n = n
        self.trials = trials
        self.counts = counts
        self.statistic = statistic
        self.pvalue = pvalue

    def passed(self, alpha=1e-4):
        return self.pvalue > alpha

    def __repr__(self):
        return "ShuffleReport(n={}, trials={}, pvalue={:.4g})".format(self.n, self.trials, self.pvalue)


def uniformity_report(sample: CycleSample) -> ShuffleReport:
    """Chi-square comparison of the sampled permutation counts with the uniform law."""
    if sample.permutations is None:
        raise ValueError("Permutation counts are only collected for n <= {}".format(JOINT_MAX_N))
    n, trials = sample.n, sample.trials
    observed = [sample.permutations.get(p, 0) for p in itertools.permutations(range(n))]
    statistic, pvalue = sp_stats.chisquare(observed)
    counts = dict(zip(itertools.permutations(range(n)), observed))
    return ShuffleReport(n, trials, counts, float(statistic), float(pvalue))


def shuffle_uniformity(n: int, trials: int, seed: int = DEFAULT_SEED, workers: int = 1) -> ShuffleReport:
    """Check that the sampler hits all ``n!`` permutations equally often."""
    if n > JOINT_MAX_N:
        raise ValueError("Shuffle uniformity is checked for n <= {}, got {}".format(JOINT_MAX_N, n))
    return uniformity_report(sample_cycles(n, trials, seed=seed, workers=workers))
