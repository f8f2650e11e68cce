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
"""Block codes over finite alphabets, Hamming distance, determination and reach.

Positions are 0-based throughout the Python API; files and the command line use 1-based positions.
"""

import itertools
import logging
import math
import typing
from functools import cached_property, total_ordering

import numpy as np

from combrec.utils import check_budget, get_delta_ceiling

logger = logging.getLogger("combrec")


def _is_prime(value):
    if value < 2:
        return False
    return all(value % p for p in range(2, math.isqrt(value) + 1))


class Alphabet(object):
    """An ordered alphabet of ``q >= 2`` distinct symbols.

    Symbol ``i`` of the alphabet is stored as the integer ``i`` inside codes; for prime ``q`` this is also the
    residue used for modular addition.

    Args:
        symbols (list): Distinct tokens, in the order used for tie-breaking.
    """

    def __init__(self, symbols):
        symbols = tuple(symbols)
        if len(symbols) < 2:
            raise ValueError("An alphabet needs at least two symbols, got {}".format(len(symbols)))
        index = {}
        for i, symbol in enumerate(symbols):
            if symbol in index:
                raise ValueError("Duplicate alphabet symbol {!r}".format(symbol))
            index[symbol] = i
        self.symbols = symbols
        self._index = index

    @classmethod
    def of_size(cls, q):
        """The alphabet ``0, 1, ..., q-1``."""
        return cls(range(q))

    @property
    def q(self):
        return len(self.symbols)

    def index(self, token):
        """Integer label of ``token``."""
        try:
            return self._index[token]
        except KeyError:
            raise ValueError("Symbol {!r} is not in the alphabet {}".format(token, list(self.symbols)))

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.symbols == other.symbols

    def __hash__(self):
        return hash(self.symbols)

    def __repr__(self):
        return "Alphabet(symbols={!r})".format(list(self.symbols))


class PositionSet(frozenset):
    """A duplicate-free set of 0-based positions."""

    @classmethod
    def of(cls, positions, n=None):
        """Build a position set from 0-based indices, checking bounds against ``n`` when given."""
        positions = list(positions)
        if len(set(positions)) != len(positions):
            raise ValueError("Duplicate positions in {}".format(sorted(positions)))
        for p in positions:
            if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
                raise ValueError("Positions must be integers, got {!r}".format(p))
            if p < 0 or (n is not None and p >= n):
                raise ValueError("Position {} is out of range for length {}".format(p, n))
        return cls(int(p) for p in positions)

    @classmethod
    def from_one_based(cls, positions, n=None):
        """Build a position set from 1-based indices as used in files and on the command line."""
        return cls.of([p - 1 for p in positions], n=n)

    def one_based(self):
        """Sorted 1-based tuple."""
        return tuple(p + 1 for p in sorted(self))

    def __repr__(self):
        return "PositionSet({})".format(sorted(self))


class Code(object):
    """A block code: distinct words of equal length ``n`` over an alphabet.

    Words are held as a read-only ``(#words, n)`` integer matrix of symbol labels.

    Args:
        alphabet (Alphabet): The symbol alphabet.
        words (array-like): Symbol labels, one row per word.
        k (int): Declared dimension; requires ``#words == q ** k``. Derived when the size is a power of ``q``.
        linear (bool): Declared linearity; for prime ``q`` the word set must be closed under addition.
    """

    def __init__(self, alphabet, words, k=None, linear=None):
        matrix = np.array(words, dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
            raise ValueError("Words must form a non-empty (#words, n) matrix, got shape {}".format(matrix.shape))
        if matrix.min() < 0 or matrix.max() >= alphabet.q:
            raise ValueError("Word symbols must be labels in range(0, {})".format(alphabet.q))
        if len(np.unique(matrix, axis=0)) != len(matrix):
            raise ValueError("Code words must be distinct")
        matrix.setflags(write=False)

        self.alphabet = alphabet
        self.words = matrix
        self.linear = linear

        exact_k = self._exact_dimension(alphabet.q, len(matrix))
        if k is not None:
            if int(k) != k or exact_k is None or exact_k != int(k):
                raise ValueError(
                    "Declared k={} does not match #words={} over q={}".format(k, len(matrix), alphabet.q)
                )
        self.k = exact_k

        if linear and _is_prime(alphabet.q) and not self.closed:
            raise ValueError("Code is declared linear but is not closed under addition modulo {}".format(alphabet.q))

    @staticmethod
    def _exact_dimension(q, size):
        k, power = 0, 1
        while power < size:
            power *= q
            k += 1
        return k if power == size else None

    @classmethod
    def from_tokens(cls, alphabet, token_words, k=None, linear=None):
        """Build a code from words written with alphabet tokens."""
        return cls(alphabet, [[alphabet.index(t) for t in word] for word in token_words], k=k, linear=linear)

    @classmethod
    def binary(cls, words, k=None, linear=None):
        """Build a binary code from strings such as ``"0110"`` or from 0/1 sequences."""
        rows = [[int(c) for c in word] for word in words]
        return cls(Alphabet.of_size(2), rows, k=k, linear=linear)

    @property
    def q(self):
        return self.alphabet.q

    @property
    def n(self):
        return self.words.shape[1]

    @property
    def size(self):
        return self.words.shape[0]

    @property
    def log_size(self):
        """``log_q(#words)``, the possibly fractional dimension."""
        return math.log(self.size, self.q)

    def tokens(self):
        """Words as lists of alphabet tokens."""
        symbols = self.alphabet.symbols
        return [[symbols[int(s)] for s in row] for row in self.words]

    @cached_property
    def closed(self):
        """Whether the word set is closed under componentwise addition modulo a prime ``q``."""
        q = self.q
        if not _is_prime(q):
            return False
        present = {row.tobytes() for row in self.words}
        if np.zeros(self.n, dtype=np.int64).tobytes() not in present:
            return False
        for row in self.words:
            shifted = (self.words + row) % q
            if any(s.tobytes() not in present for s in shifted):
                return False
        return True

    def subcode(self, indices):
        """The code formed by the words at the given row indices."""
        return Code(self.alphabet, self.words[np.asarray(indices, dtype=np.int64)])

    def restrict(self, positions):
        """Puncture the code to the given positions, keeping their order."""
        return Code(self.alphabet, self.words[:, sorted(positions)])

    def __len__(self):
        return self.size

    def __repr__(self):
        return "Code(q={}, n={}, #words={}, k={}, linear={})".format(self.q, self.n, self.size, self.k, self.linear)


def hamming_distance(x, y) -> int:
    """Number of positions in which two words differ.

    >>> hamming_distance("0110", "1110")
    1
    """
    x = np.asarray(list(x) if isinstance(x, str) else x)
    y = np.asarray(list(y) if isinstance(y, str) else y)
    if x.shape != y.shape:
        raise ValueError("Words have different lengths: {} and {}".format(len(x), len(y)))
    return int(np.count_nonzero(x != y))


def _pairwise_min_distance(words):
    best = words.shape[1]
    for i in range(len(words) - 1):
        best = min(best, int((words[i + 1 :] != words[i]).sum(axis=1).min()))
        if best == 1:
            break
    return best


def _min_nonzero_weight(words):
    weights = np.count_nonzero(words, axis=1)
    nonzero = weights[weights > 0]
    return int(nonzero.min())


def min_distance(code: Code, method: typing.Optional[str] = None) -> int:
    """Minimum pairwise Hamming distance of a code.

    Args:
        code (Code): A code with at least two words.
        method (str): ``"pairwise"`` scans all pairs, ``"weight"`` takes the minimum nonzero weight (closed
            codes only), ``"both"`` runs both and cross-checks. Defaults to ``"both"`` for codes declared linear
            over a prime alphabet and to ``"pairwise"`` otherwise.
    """
    if code.size < 2:
        raise ValueError("Minimum distance needs at least two words, got {}".format(code.size))
    if method is None:
        method = "both" if code.linear and _is_prime(code.q) else "pairwise"
    if method not in ("pairwise", "weight", "both"):
        raise ValueError("Unknown minimum distance method {!r}".format(method))

    if method in ("weight", "both") and not code.closed:
        raise ValueError("The weight method needs a code closed under addition over a prime alphabet")

    if method == "weight":
        return _min_nonzero_weight(code.words)
    pairwise = _pairwise_min_distance(code.words)
    if method == "both":
        weight = _min_nonzero_weight(code.words)
        if weight != pairwise:
            raise RuntimeError("Pairwise distance {} disagrees with minimum weight {}".format(pairwise, weight))
    return pairwise


def _group_labels(words, positions):
    """Label each word by its projection onto ``positions``."""
    positions = sorted(positions)
    if not positions:
        return np.zeros(len(words), dtype=np.int64), 1
    _, labels = np.unique(words[:, positions], axis=0, return_inverse=True)
    labels = np.asarray(labels).reshape(-1)
    return labels, int(labels.max()) + 1


def _determined_mask(words, positions):
    labels, groups = _group_labels(words, positions)
    representative = np.zeros((groups, words.shape[1]), dtype=words.dtype)
    representative[labels] = words
    return np.all(representative[labels] == words, axis=0)


def is_determined(code: Code, u, j: int) -> bool:
    """Whether the symbol at position ``j`` is a function of the symbols at positions ``u``.

    Words are grouped by their projection onto ``u``; ``j`` is determined iff every group is constant at ``j``.
    """
    u = PositionSet.of(u, code.n)
    if not 0 <= j < code.n:
        raise ValueError("Position {} is out of range for length {}".format(j, code.n))
    if j in u:
        raise ValueError("Position {} belongs to the determining set {}".format(j, sorted(u)))
    labels, groups = _group_labels(code.words, u)
    column = code.words[:, j]
    representative = np.zeros(groups, dtype=column.dtype)
    representative[labels] = column
    return bool(np.all(representative[labels] == column))


def reach(code: Code, u) -> PositionSet:
    """The reach of ``u``: every position outside ``u`` determined by ``u``."""
    u = PositionSet.of(u, code.n)
    mask = _determined_mask(code.words, u)
    mask[sorted(u)] = False
    return PositionSet(int(p) for p in np.flatnonzero(mask))


def max_reach(code: Code, w: int, budget: typing.Optional[int] = None) -> int:
    """Largest reach cardinality over all ``w``-subsets of positions, by exhaustive enumeration."""
    if not 1 <= w <= code.n:
        raise ValueError("Subset size w={} must lie in [1, {}]".format(w, code.n))
    check_budget(math.comb(code.n, w) * code.size, budget, "max_reach over {}-subsets".format(w))
    best = 0
    for u in itertools.combinations(range(code.n), w):
        best = max(best, len(reach(code, u)))
        if best == code.n - w:
            break
    return best


@total_ordering
class ExtendedCount(object):
    """A non-negative count that may be saturated to +infinity.

    Args:
        value (int): The count, or ``None`` for +infinity.
    """

    __slots__ = ("value",)

    def __init__(self, value=None):
        if value is not None and value < 0:
            raise ValueError("Counts are non-negative, got {}".format(value))
        self.value = value

    @property
    def is_infinite(self):
        return self.value is None

    def __int__(self):
        if self.value is None:
            raise OverflowError("Saturated count has no integer value")
        return self.value

    def __add__(self, other):
        if isinstance(other, ExtendedCount):
            other = other.value
            if other is None:
                return ExtendedCount()
        if self.value is None:
            return ExtendedCount()
        return ExtendedCount(self.value + other)

    __radd__ = __add__

    def __eq__(self, other):
        if isinstance(other, ExtendedCount):
            return self.value == other.value
        if isinstance(other, int):
            return self.value is not None and self.value == other
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, ExtendedCount):
            other = other.value
        elif not isinstance(other, int):
            return NotImplemented
        if self.value is None:
            return False
        return other is None or self.value < other

    def __hash__(self):
        return hash(self.value)

    def __str__(self):
        return "inf" if self.value is None else str(self.value)

    def __repr__(self):
        return "ExtendedCount({})".format(self.value)


def _capped_power(base, exponent, cap):
    """``base ** exponent`` if it does not exceed ``cap``, else ``None``."""
    if cap < 1:
        return None
    if exponent * math.log2(base) > math.log2(cap) + 1:
        return None
    value = base ** exponent
    return value if value <= cap else None


def delta_fits(q: int, w: int, linear: bool, limit: int) -> bool:
    """Evaluate ``Delta(w) <= limit`` without materialising ``q ** q ** w``.

    ``Delta(w)`` is ``q ** w`` for linear codes and ``q ** (q ** w)`` otherwise.
    """
    if q < 2 or w < 0:
        raise ValueError("Delta needs q >= 2 and w >= 0, got q={} w={}".format(q, w))
    if limit < 1:
        return False
    if linear:
        return _capped_power(q, w, limit) is not None
    # q ** e <= limit needs e <= log_q(limit), so cap the inner exponent first
    exponent = _capped_power(q, w, max(1, int(math.log2(limit)) + 1))
    if exponent is None:
        return False
    return _capped_power(q, exponent, limit) is not None


def delta_bound(q: int, w: int, linear: bool, ceiling: typing.Optional[int] = None) -> ExtendedCount:
    """``Delta(w)`` as an extended count saturating above ``ceiling``."""
    ceiling = get_delta_ceiling(ceiling)
    if q < 2 or w < 0:
        raise ValueError("Delta needs q >= 2 and w >= 0, got q={} w={}".format(q, w))
    if linear:
        return ExtendedCount(_capped_power(q, w, ceiling))
    exponent = _capped_power(q, w, max(1, int(math.log2(ceiling)) + 1))
    if exponent is None:
        return ExtendedCount()
    return ExtendedCount(_capped_power(q, exponent, ceiling))


def random_code(
    n: int, k: int, q: int = 2, seed: int = 0, linear: bool = True, density: typing.Optional[float] = None
) -> Code:
    """Random ``(n, k)``-code, serialisable in the code file format.

    Linear codes are systematic, ``[I_k | A]`` with random ``A`` (entries nonzero with probability ``density``
    when given). Non-linear codes are ``q ** k`` distinct words drawn uniformly from ``A ** n``.
    """
    if not 1 <= k <= n:
        raise ValueError("Random codes need 1 <= k <= n, got n={} k={}".format(n, k))
    rng = np.random.default_rng(seed)
    messages = np.array(list(itertools.product(range(q), repeat=k)), dtype=np.int64)
    if linear:
        if not _is_prime(q):
            raise ValueError("Linear random codes need a prime alphabet size, got q={}".format(q))
        parity = rng.integers(0, q, size=(k, n - k))
        if density is not None:
            parity = parity * (rng.random((k, n - k)) < density)
        generator = np.concatenate([np.eye(k, dtype=np.int64), parity], axis=1)
        words = messages @ generator % q
        return Code(Alphabet.of_size(q), words, k=k, linear=True)

    if n * math.log2(q) > 62:
        raise ValueError("Non-linear random codes are limited to q ** n < 2 ** 62")
    picks = rng.choice(q ** n, size=q ** k, replace=False)
    digits = (picks[:, None] // q ** np.arange(n - 1, -1, -1)) % q
    return Code(Alphabet.of_size(q), digits, k=k, linear=False)
