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
"""Weighted lattice representative codes.

A lattice is the box ``{1..m_1} x ... x {1..m_d}`` with rational weights in ``[1, beta]``. A point set ``B`` is
``epsilon``-representative when it meets every subset of weight at least ``epsilon`` times the number of points.
Points are tuples of 1-based coordinates.
"""

import itertools
import logging
import math
import typing
from collections import namedtuple
from fractions import Fraction

import numpy as np

from combrec.utils import BudgetExceededError, parse_rational

logger = logging.getLogger("combrec")

ORACLE_MAX_POINTS = 20

Block = namedtuple("Block", ["offset", "shape"])


def _point_range(shape):
    return itertools.product(*[range(1, m + 1) for m in shape])


class WeightSpec(object):
    """A recipe for lattice weights.

    Args:
        kind (str): One of ``uniform``, ``shell``, ``explicit`` or ``profile``.
        grid (list): Row-major rational weights for ``explicit`` specs.
        shape (tuple): Grid shape for ``explicit`` specs.
        profile (list): Weights indexed by the coordinate sum ``sum(v_i - 1)`` for ``profile`` specs; the last
            value extends to larger sums.
        beta (Fraction): Upper weight bound; defaults to 1 for ``uniform``, 2 for ``shell`` and the largest
            weight otherwise.
    """

    KINDS = ("uniform", "shell", "explicit", "profile")

    def __init__(self, kind, grid=None, shape=None, profile=None, beta=None):
        if kind not in self.KINDS:
            raise ValueError("Unknown weight spec kind {!r}, expected one of {}".format(kind, self.KINDS))
        self.kind = kind
        self.grid = None
        self.shape = None
        self.profile = None

        if kind == "explicit":
            if grid is None or shape is None:
                raise ValueError("Explicit weight specs need a grid and its shape")
            self.shape = tuple(int(m) for m in shape)
            self.grid = [parse_rational(w) for w in grid]
            expected = math.prod(self.shape)
            if len(self.grid) != expected:
                raise ValueError("Grid has {} weights, shape {} needs {}".format(len(self.grid), self.shape, expected))
        elif kind == "profile":
            if not profile:
                raise ValueError("Profile weight specs need at least one value")
            self.profile = [parse_rational(w) for w in profile]

        if beta is None:
            if kind == "uniform":
                beta = 1
            elif kind == "shell":
                beta = 2
            else:
                beta = max(self.grid if kind == "explicit" else self.profile)
        self.beta = parse_rational(beta)

    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def shell(cls):
        return cls("shell")

    def weight(self, point) -> Fraction:
        """Weight of a 1-based point."""
        if self.kind == "uniform":
            return Fraction(1)
        if self.kind == "shell":
            # the shell {1..i+1}^d minus {1..i}^d has max coordinate i+1
            i = max(point) - 1
            return Fraction(2) if i == 0 else 1 + Fraction(1, i)
        if self.kind == "profile":
            return self.profile[min(sum(point) - len(point), len(self.profile) - 1)]
        index = 0
        for v, m in zip(point, self.shape):
            index = index * m + (v - 1)
        return self.grid[index]

    def lattice(self, shape) -> "WeightedLattice":
        """The weighted lattice of the given shape."""
        shape = tuple(shape)
        if self.kind == "explicit" and shape != self.shape:
            raise ValueError("Explicit grid has shape {}, cannot build a lattice of shape {}".format(self.shape, shape))
        return WeightedLattice(shape, {p: self.weight(p) for p in _point_range(shape)}, self.beta)

    def square(self, m, d) -> "WeightedLattice":
        return self.lattice((m,) * d)

    def is_monotone(self, m, d):
        return is_monotone(self.square(m, d))

    def __repr__(self):
        return "WeightSpec(kind={!r}, beta={})".format(self.kind, self.beta)


def random_monotone_spec(seed: int, beta=Fraction(2), length: int = 8, denominator: int = 12) -> WeightSpec:
    """Random non-increasing profile spec with weights in ``[1, beta]`` on a grid of ``1/denominator``."""
    beta = parse_rational(beta)
    if beta < 1:
        raise ValueError("beta must be at least 1, got {}".format(beta))
    rng = np.random.default_rng(seed)
    top = math.floor(beta * denominator)
    numerators = np.sort(rng.integers(denominator, top + 1, size=length))[::-1]
    return WeightSpec("profile", profile=[Fraction(int(x), denominator) for x in numerators], beta=beta)


class WeightedLattice(object):
    """A rectangular lattice with positive rational weights bounded by ``1 <= w <= beta``.

    Args:
        shape (tuple): Side length per axis.
        weights (dict): Map from 1-based point tuples to weights.
        beta (Fraction): The upper weight bound.
    """

    def __init__(self, shape, weights, beta):
        self.shape = tuple(int(m) for m in shape)
        if not self.shape or any(m < 1 for m in self.shape):
            raise ValueError("Lattice sides must be positive, got {}".format(self.shape))
        self.beta = parse_rational(beta)
        self.points = list(_point_range(self.shape))
        self.weights = {}
        for p in self.points:
            if p not in weights:
                raise ValueError("Missing weight for point {}".format(p))
            w = parse_rational(weights[p])
            if not 1 <= w <= self.beta:
                raise ValueError("Weight {} at point {} is outside [1, {}]".format(w, p, self.beta))
            self.weights[p] = w

    @property
    def d(self):
        return len(self.shape)

    @property
    def m(self):
        if len(set(self.shape)) != 1:
            raise ValueError("Lattice of shape {} is not square".format(self.shape))
        return self.shape[0]

    @property
    def size(self):
        return len(self.points)

    def weight(self, point) -> Fraction:
        return self.weights[tuple(point)]

    def total_weight(self, points) -> Fraction:
        return sum((self.weights[p] for p in points), Fraction(0))

    def threshold(self, epsilon) -> Fraction:
        """``epsilon`` times the number of points."""
        return parse_rational(epsilon) * self.size

    def block(self, offset, shape) -> "WeightedLattice":
        """The sub-box at ``offset`` in local coordinates, keeping the weights of this lattice."""
        weights = {}
        for p in _point_range(shape):
            weights[p] = self.weights[tuple(o + v for o, v in zip(offset, p))]
        return WeightedLattice(shape, weights, self.beta)

    def __contains__(self, point):
        return tuple(point) in self.weights

    def __repr__(self):
        return "WeightedLattice(shape={}, beta={})".format(self.shape, self.beta)


class RepCode(object):
    """A point set together with its level ``epsilon`` in ``(0, 1)``."""

    def __init__(self, points, epsilon):
        self.points = frozenset(tuple(int(v) for v in p) for p in points)
        self.epsilon = parse_rational(epsilon)
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1), got {}".format(self.epsilon))

    @property
    def size(self):
        return len(self.points)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return isinstance(other, RepCode) and self.points == other.points and self.epsilon == other.epsilon

    def __hash__(self):
        return hash((self.points, self.epsilon))

    def __repr__(self):
        return "RepCode(size={}, epsilon={})".format(self.size, self.epsilon)


def _check_points(lattice, code):
    outside = [p for p in code.points if p not in lattice]
    if outside:
        raise ValueError("Points {} are not on the lattice of shape {}".format(sorted(outside), lattice.shape))


def is_representative(lattice: WeightedLattice, code: RepCode) -> bool:
    """Whether ``code`` meets every set of weight at least the threshold.

    The heaviest set missing ``B`` is its complement, so this reduces to ``w(S \\ B) < epsilon * #S``.
    """
    _check_points(lattice, code)
    complement = [p for p in lattice.points if p not in code.points]
    return lattice.total_weight(complement) < lattice.threshold(code.epsilon)


def size_bounds(lattice: WeightedLattice, epsilon) -> typing.Tuple[Fraction, Fraction]:
    """Lower and upper bounds ``(1 - eps) N`` and ``N (1 - eps / beta) + 1`` on the minimum code size."""
    epsilon = parse_rational(epsilon)
    n = lattice.size
    return (1 - epsilon) * n, n * (1 - epsilon / lattice.beta) + 1


def _greedy_prefix(lattice, threshold):
    order = sorted(lattice.points, key=lambda p: (lattice.weights[p], p))
    total = Fraction(0)
    prefix = []
    for p in order:
        if total + lattice.weights[p] >= threshold:
            break
        total += lattice.weights[p]
        prefix.append(p)
    return prefix


def min_rep_size(lattice: WeightedLattice, epsilon) -> typing.Tuple[int, RepCode]:
    """Exact minimum size of an ``epsilon``-representative code, with a witness.

    Points are taken in ascending ``(weight, point)`` order; the longest prefix of weight strictly below the
    threshold is the largest complement, so the witness is everything else.
    """
    epsilon = parse_rational(epsilon)
    prefix = set(_greedy_prefix(lattice, lattice.threshold(epsilon)))
    witness = RepCode([p for p in lattice.points if p not in prefix], epsilon)
    return witness.size, witness


def critical_set(lattice: WeightedLattice, epsilon) -> frozenset:
    """A set below the threshold that every further point lifts to or above it.

    At least ``threshold / beta - 1`` points are taken, which caps the minimum code size at
    ``N (1 - epsilon / beta) + 1``.
    """
    threshold = lattice.threshold(epsilon)
    if threshold < 1:
        raise ValueError("Threshold {} is below the minimum weight 1; no critical set exists".format(threshold))
    return frozenset(_greedy_prefix(lattice, threshold))


def _oracle_tables(lattice, epsilon):
    n = lattice.size
    if n > ORACLE_MAX_POINTS:
        raise BudgetExceededError(
            2 ** n, 2 ** ORACLE_MAX_POINTS, "all-subsets oracle over {} points".format(n), advice="use min_rep_size"
        )
    threshold = lattice.threshold(epsilon)
    scale = math.lcm(threshold.denominator, *[w.denominator for w in lattice.weights.values()])
    integer_weights = [int(lattice.weights[p] * scale) for p in lattice.points]
    dtype = np.int64 if sum(integer_weights) < 2 ** 62 else object

    # bit i of a subset index stands for lattice.points[i]
    sums = np.zeros(1, dtype=dtype)
    for w in integer_weights:
        sums = np.concatenate([sums, sums + w])
    heavy = sums >= int(threshold * scale)
    return n, np.asarray(heavy, dtype=bool)


def _bitmask(lattice, points):
    index = {p: i for i, p in enumerate(lattice.points)}
    mask = 0
    for p in points:
        mask |= 1 << index[p]
    return mask


def is_representative_brute(lattice: WeightedLattice, code: RepCode) -> bool:
    """Representativeness by the direct definition: no heavy subset avoids ``B``."""
    _check_points(lattice, code)
    n, heavy = _oracle_tables(lattice, code.epsilon)
    subsets = np.arange(2 ** n, dtype=np.int64)
    missed = (subsets & _bitmask(lattice, code.points)) == 0
    return not bool(np.any(heavy & missed))


def brute_force_min_rep(lattice: WeightedLattice, epsilon) -> int:
    """Minimum code size over all point subsets, by the direct definition.

    ``B`` is representative iff its complement contains no heavy subset, which a subset-sum sweep over all
    masks gives in ``O(N 2**N)``.
    """
    n, contains_heavy = _oracle_tables(lattice, parse_rational(epsilon))
    popcount = np.zeros(2 ** n, dtype=np.int8)
    for i in range(n):
        bit = 1 << i
        view = contains_heavy.reshape(-1, 2, bit)
        view[:, 1, :] |= view[:, 0, :]
        popcount.reshape(-1, 2, bit)[:, 1, :] += 1
    # the complement of mask B is full ^ B == full - B
    valid = ~contains_heavy[::-1]
    return int(popcount[valid].min())


def is_monotone(lattice: WeightedLattice) -> bool:
    """Whether weights never increase when a coordinate increases."""
    grid = np.empty(lattice.shape, dtype=object)
    for p, w in lattice.weights.items():
        grid[tuple(v - 1 for v in p)] = w
    return all(bool(np.all(np.diff(grid, axis=axis) <= 0)) for axis in range(lattice.d) if lattice.shape[axis] > 1)


def split(m: int, r: int):
    """Split ``{1..m}^2`` with ``m = k r + s`` into the blocks ``S_1..S_4``.

    Returns:
        tuple: ``(k, s, blocks)`` where ``blocks`` holds ``Block(offset, shape)`` for ``{1..kr}^2``, the two
        ``kr x s`` strips and the ``s x s`` corner; the last three are empty when ``s == 0``.
    """
    if r < 1 or m < r:
        raise ValueError("Splitting needs 1 <= r <= m, got m={} r={}".format(m, r))
    k, s = divmod(m, r)
    kr = k * r
    blocks = [
        Block((0, 0), (kr, kr)),
        Block((kr, 0), (s, kr)),
        Block((0, kr), (kr, s)),
        Block((kr, kr), (s, s)),
    ]
    return k, s, blocks


def translate(code: RepCode, offset) -> RepCode:
    """Shift every point of ``code`` by ``offset``."""
    return RepCode([tuple(v + o for v, o in zip(p, offset)) for p in code.points], code.epsilon)


def _block_offsets(k, r, d):
    return [tuple(r * i for i in index) for index in itertools.product(range(k), repeat=d)]


def tile(lattice: WeightedLattice, r: int, code: RepCode) -> RepCode:
    """Copies of a code for ``{1..r}^d`` translated onto every ``r``-block of ``{1..kr}^d``, ``k = m // r``."""
    k = lattice.m // r
    if k < 1:
        raise ValueError("Block side r={} exceeds the lattice side {}".format(r, lattice.m))
    points = set()
    for offset in _block_offsets(k, r, lattice.d):
        points |= translate(code, offset).points
    return RepCode(points, code.epsilon)


def translate_min_sizes(lattice: WeightedLattice, r: int, epsilon) -> dict:
    """Exact minimum code size of every ``r``-block translate inside ``{1..kr}^d``, keyed by offset."""
    k = lattice.m // r
    if k < 1:
        raise ValueError("Block side r={} exceeds the lattice side {}".format(r, lattice.m))
    sizes = {}
    for offset in _block_offsets(k, r, lattice.d):
        sizes[offset], _ = min_rep_size(lattice.block(offset, (r,) * lattice.d), epsilon)
    return sizes


def compose(lattice: WeightedLattice, r: int, codes) -> RepCode:
    """Union of block codes for ``S_1..S_4``, translated into the coordinates of ``lattice``.

    Args:
        lattice (WeightedLattice): A square 2-dimensional lattice.
        r (int): Block side of the split.
        codes (list): One ``RepCode`` per block in local coordinates; entries for empty blocks may be ``None``
            and the list may stop after ``S_1`` when the split has no remainder.
    """
    if lattice.d != 2:
        raise ValueError("Composition is defined for d=2 only, got d={}".format(lattice.d))
    k, s, blocks = split(lattice.m, r)
    codes = list(codes) + [None] * (4 - len(codes))
    if len(codes) != 4:
        raise ValueError("Composition takes at most four block codes, got {}".format(len(codes)))

    epsilons = {c.epsilon for c in codes if c is not None}
    if len(epsilons) != 1:
        raise ValueError("Block codes must share one epsilon, got {}".format(sorted(epsilons)))
    epsilon = epsilons.pop()

    points = set()
    for index, (block, code) in enumerate(zip(blocks, codes)):
        if 0 in block.shape:
            continue
        if code is None:
            raise ValueError("Block S_{} of shape {} needs a code".format(index + 1, block.shape))
        local = lattice.block(block.offset, block.shape)
        if not is_representative(local, code):
            raise ValueError("Code for block S_{} is not representative at epsilon={}".format(index + 1, epsilon))
        points |= translate(code, block.offset).points
    return RepCode(points, epsilon)


class Composition(object):
    """A composed code for ``{1..m}^2`` and the size bound ``k^2 b_r + (2k + 1) r^2``."""

    def __init__(self, m, r, k, s, b_r, code, representative):
        self.m = m
        self.r = r
        self.k = k
        self.s = s
        self.b_r = b_r
        self.code = code
        self.representative = representative

    @property
    def size(self):
        return self.code.size

    @property
    def bound(self):
        return self.k ** 2 * self.b_r + (2 * self.k + 1) * self.r ** 2

    def __repr__(self):
        return "Composition(m={}, r={}, size={}, bound={})".format(self.m, self.r, self.size, self.bound)


def compose_minimum(lattice: WeightedLattice, r: int, epsilon) -> Composition:
    """Compose a tiled minimum code of ``{1..r}^2`` with minimum codes of the remainder blocks."""
    epsilon = parse_rational(epsilon)
    k, s, blocks = split(lattice.m, r)
    b_r, base = min_rep_size(lattice.block((0, 0), (r, r)), epsilon)
    first = tile(lattice.block(blocks[0].offset, blocks[0].shape), r, base)
    codes = [first]
    for block in blocks[1:]:
        if 0 in block.shape:
            codes.append(None)
        else:
            codes.append(min_rep_size(lattice.block(block.offset, block.shape), epsilon)[1])
    code = compose(lattice, r, codes)
    return Composition(lattice.m, r, k, s, b_r, code, is_representative(lattice, code))


class SweepRow(object):
    """One lattice side of a sweep."""

    def __init__(self, m, b, ratio, lower_ok, upper_ok):
        self.m = m
        self.b = b
        self.ratio = ratio
        self.lower_ok = lower_ok
        self.upper_ok = upper_ok

    def __repr__(self):
        return "SweepRow(m={}, b={}, ratio={})".format(self.m, self.b, self.ratio)


class Sweep(object):
    """Minimum sizes over several sides, with bound checks and the ratio checks across multiples."""

    def __init__(self, spec, epsilon, d, rows, multiples):
        self.spec = spec
        self.epsilon = epsilon
        self.d = d
        self.rows = rows
        self.multiples = multiples

    @property
    def ok(self):
        rows_ok = all(row.lower_ok and row.upper_ok for row in self.rows)
        return rows_ok and all(ok for _, _, ok in self.multiples)

    def __repr__(self):
        return "Sweep(d={}, epsilon={}, m={})".format(self.d, self.epsilon, [row.m for row in self.rows])


def subadditive_sweep(spec: WeightSpec, epsilon, d: int, m_list, check_convergence: bool = True) -> Sweep:
    """Tabulate ``b_m`` and ``b_m / m^d`` for each side in ``m_list``.

    Every row is checked against ``(1 - eps) m^d <= b_m <= m^d (1 - eps / beta) + 1``; for each pair of sides
    where one divides the other the ratio of the larger must not exceed that of the smaller.
    """
    epsilon = parse_rational(epsilon)
    m_list = sorted(set(int(m) for m in m_list))
    if not m_list or m_list[0] < 1:
        raise ValueError("Sweep sides must be positive, got {}".format(m_list))
    if not spec.is_monotone(m_list[-1], d):
        if check_convergence:
            raise ValueError("Weight spec {} is not monotone; convergence checks need monotone weights".format(spec))
        logger.warning("Weight spec %s is not monotone; ratio checks across multiples may fail", spec)

    rows = []
    for m in m_list:
        lattice = spec.square(m, d)
        b, _ = min_rep_size(lattice, epsilon)
        lower, upper = size_bounds(lattice, epsilon)
        rows.append(SweepRow(m, b, Fraction(b, m ** d), lower <= b, b <= upper))
        logger.debug("Sweep m=%d: b=%d", m, b)

    ratios = {row.m: row.ratio for row in rows}
    multiples = [(r, m, ratios[m] <= ratios[r]) for r in m_list for m in m_list if m > r and m % r == 0]
    return Sweep(spec, epsilon, d, rows, multiples)
