"""Microscopic covers: the re-indexing transform, the explicit zero-mask sets,
diagonal points escaping a cover, and interval/block covers of closed null sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from cantor_core import BinaryWord, ClopenSet, check_leaf_depth
from closed_trees import ZeroMask, get_mask, mask_set_words
from errors import IndexCollisionError, PreconditionError, ScheduleMismatchError, UnknownPresetError
from gms_engine import Cover


@dataclass(frozen=True)
class MicroCover:
    """Words sigma_1, sigma_2, ... with ``|sigma_n| = k * n``."""

    k: int
    words: tuple[BinaryWord, ...]
    #: index n -> (level j, provider index) for the words that carry a coverage claim
    designated: Mapping[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise PreconditionError(f"k must be >= 1, got {self.k}")
        object.__setattr__(self, "words", tuple(self.words))
        for n, word in enumerate(self.words, start=1):
            if word.length != self.k * n:
                raise ScheduleMismatchError(f"sigma_{n} has length {word.length}, expected {self.k * n}")

    def word(self, n: int) -> BinaryWord:
        """sigma_n, 1-based."""
        return self.words[n - 1]

    def as_cover(self) -> Cover:
        """The same words on the schedule (n + 1) k, starting at index 0."""
        return Cover.from_words(self.words)


# --- the re-indexing transform --------------------------------------------------

def refine_index(j: int, n: int) -> int:
    """Index 2^j n - (2^(j-1) - 1) assigned to the n-th word of level j."""
    if j < 1 or n < 1:
        raise PreconditionError(f"levels and indices start at 1, got j={j}, n={n}")
    return (n << j) - ((1 << (j - 1)) - 1)


def find_index_collision(max_level: int, max_n: int) -> Optional[tuple[int, tuple[int, int], tuple[int, int]]]:
    seen: dict[int, tuple[int, int]] = {}
    for j in range(1, max_level + 1):
        for n in range(1, max_n + 1):
            i = refine_index(j, n)
            if i in seen:
                return i, seen[i], (j, n)
            seen[i] = (j, n)
    return None


def micro_refine(k: int, provider: Mapping[int, Sequence[BinaryWord]]) -> MicroCover:
    """Interleave the covers of every level into one cover of lengths k n.

    Level j supplies words of length 2^j n k; its n-th word lands at index
    ``refine_index(j, n)`` truncated to that index times k. Every other index
    holds the all-ones filler word.
    """
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    assigned: dict[int, BinaryWord] = {}
    designated: dict[int, tuple[int, int]] = {}
    for j in sorted(provider):
        for n, tau in enumerate(provider[j], start=1):
            if tau.length != (1 << j) * n * k:
                raise ScheduleMismatchError(
                    f"level {j} word {n} has length {tau.length}, expected 2^{j}*{n}*{k} = {(1 << j) * n * k}"
                )
            i = refine_index(j, n)
            if i in assigned:
                raise IndexCollisionError(f"index {i} assigned by level {designated[i][0]} and level {j}")
            assigned[i] = tau.prefix(k * i)
            designated[i] = (j, n)
    size = max(assigned, default=0)
    words = tuple(assigned.get(i, BinaryWord.ones(k * i)) for i in range(1, size + 1))
    return MicroCover(k, words, designated)


def hit_count(cover: MicroCover, y: BinaryWord) -> int:
    """Designated indices n with sigma_n a prefix of y."""
    return sum(1 for i in cover.designated if y.extends(cover.word(i)))


# --- masks and index formulas ---------------------------------------------------

def mask_positions(preset: str) -> ZeroMask:
    return get_mask(preset)


def h(k: int) -> int:
    """The k-th (1-based) coordinate of the triangular mask: (j+1)^2 + (k - j(j+1)/2) - 1
    with j maximal such that j(j+1)/2 < k."""
    if k < 1:
        raise PreconditionError(f"h(k) needs k >= 1, got {k}")
    j = max(0, (math.isqrt(8 * k) - 1) // 2)
    while (j + 1) * (j + 2) // 2 < k:
        j += 1
    while j > 0 and j * (j + 1) // 2 >= k:
        j -= 1
    return (j + 1) ** 2 + (k - j * (j + 1) // 2) - 1


def free_enum(n: int, preset: str = "ternary-blocks") -> int:
    """The n-th (1-based) coordinate outside the ternary mask.

    The free runs are [2 * 3^m - 1, 3^(m+1) - 2], each of length 3^m.
    """
    if preset != "ternary-blocks":
        raise UnknownPresetError(f"free_enum has a closed form only for ternary-blocks, got {preset!r}")
    if n < 1:
        raise PreconditionError(f"free_enum is 1-based, got n={n}")
    power = 1
    before = 0
    while before + power < n:
        before += power
        power *= 3
    return 2 * power - 1 + (n - before - 1)


def diagonal_z(preset: str, sigma: Sequence[BinaryWord], depth: int) -> BinaryWord:
    """A point of length ``depth`` that disagrees with sigma_k at its diagonal coordinate.

    triangular-blocks: sigma_k has length 3k and the coordinate is h(k).
    ternary-blocks: sigma_n has length 5n and the coordinate is free_enum(n).
    All other coordinates are 0.
    """
    if preset == "triangular-blocks":
        factor, position = 3, h
    elif preset == "ternary-blocks":
        factor, position = 5, free_enum
    else:
        raise UnknownPresetError(f"diagonal_z supports triangular-blocks and ternary-blocks, got {preset!r}")
    z = BinaryWord.zeros(depth)
    for index, word in enumerate(sigma, start=1):
        if word.length != factor * index:
            raise PreconditionError(f"sigma_{index} has length {word.length}, expected {factor * index}")
        p = position(index)
        if p >= word.length:
            raise PreconditionError(f"diagonal coordinate {p} lies outside sigma_{index}")
        if p < depth:
            z = z.with_bit(p, 1 - word.bit(p))
    return z


def hit_set(sigma: Sequence[BinaryWord], depth: int) -> ClopenSet:
    """Union of the cylinders of the words, at the given depth."""
    for word in sigma:
        if word.length > depth:
            raise PreconditionError(f"word of length {word.length} does not fit depth {depth}")
    return ClopenSet.from_words(depth, list(sigma))


def hit_set_contains(sigma: Sequence[BinaryWord], word: BinaryWord) -> bool:
    return any(word.extends(s) for s in sigma if s.length <= word.length)


def _as_mask(preset: str | ZeroMask) -> ZeroMask:
    return preset if isinstance(preset, ZeroMask) else get_mask(preset)


def mask_set_trace(preset: str | ZeroMask, depth: int) -> ClopenSet:
    """Leaves that vanish at every mask position below ``depth``."""
    check_leaf_depth(depth)
    mask = _as_mask(preset)
    leaves = 1
    for position in mask.free_positions(depth):
        leaves |= leaves << (1 << (depth - 1 - position))
    return ClopenSet(depth, leaves)


def mask_trace_leaves(preset: str | ZeroMask, depth: int) -> Iterator[BinaryWord]:
    return mask_set_words(_as_mask(preset), depth)


def mask_trace_values(preset: str | ZeroMask, depth: int, max_leaves: int = 1 << 20) -> np.ndarray:
    """Leaf indices of the mask set trace as an int64 array (depth <= 62)."""
    free = _as_mask(preset).free_positions(depth)
    if (1 << len(free)) > max_leaves:
        raise PreconditionError(f"mask trace at depth {depth} has 2^{len(free)} leaves; the bound is {max_leaves}")
    values = np.zeros(1, dtype=np.int64)
    for position in free:
        values = np.concatenate((values, values | np.int64(1 << (depth - 1 - position))))
    return np.sort(values)


def mask_trace_measure(preset: str | ZeroMask, depth: int) -> Fraction:
    return Fraction(1, 1 << _as_mask(preset).count_below(depth))


def verify_diagonal(preset: str, sigma: Sequence[BinaryWord], z: BinaryWord, depth: int) -> bool:
    """Exhaustive check of a diagonal point against the words that fit the depth.

    triangular-blocks: ``z XOR e`` avoids every cylinder for every e in the mask trace.
    ternary-blocks: z is in the mask trace and avoids every cylinder.
    """
    words = [s for s in sigma if s.length <= depth]
    if z.length != depth:
        raise PreconditionError(f"z has length {z.length}, expected {depth}")
    if preset == "ternary-blocks":
        return get_mask(preset).admits(z) and not hit_set_contains(words, z)
    if preset != "triangular-blocks":
        raise UnknownPresetError(f"verify_diagonal supports triangular-blocks and ternary-blocks, got {preset!r}")
    shifted = mask_trace_values(preset, depth) ^ np.int64(z.value)
    hit = np.zeros(shifted.shape, dtype=bool)
    for word in words:
        hit |= (shifted >> (depth - word.length)) == word.value
    return not bool(hit.any())


# --- interval and block covers --------------------------------------------------

@dataclass(frozen=True)
class SmallSetsCover:
    """Consecutive intervals I_n = [start, end] from 0, each with a set S_n of allowed blocks.

    A block is the restriction ``x|I_n`` read as an integer, first coordinate most significant.
    """

    intervals: tuple[tuple[int, int], ...]
    blocks: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "intervals", tuple((int(a), int(b)) for a, b in self.intervals))
        object.__setattr__(self, "blocks", tuple(frozenset(s) for s in self.blocks))
        if len(self.intervals) != len(self.blocks):
            raise PreconditionError(f"{len(self.intervals)} intervals but {len(self.blocks)} block sets")
        expected = 0
        for n, (start, end) in enumerate(self.intervals):
            if start != expected or end < start:
                raise PreconditionError(f"interval {n} = [{start}, {end}] does not continue at {expected}")
            width = end - start + 1
            if any(not 0 <= b < (1 << width) for b in self.blocks[n]):
                raise PreconditionError(f"block set {n} has blocks wider than its interval")
            expected = end + 1

    def ratio(self, n: int) -> Fraction:
        start, end = self.intervals[n]
        return Fraction(len(self.blocks[n]), 1 << (end - start + 1))

    def ratio_bound_holds(self) -> bool:
        return all(self.ratio(n) <= Fraction(1, 2) for n in range(len(self.intervals)))


def small_sets_membership(cover: SmallSetsCover, word: BinaryWord, start_index: int = 0) -> bool:
    """``word|I_n`` is in S_n for every n >= start_index whose interval fits inside the word."""
    for n in range(start_index, len(cover.intervals)):
        first, last = cover.intervals[n]
        if last >= word.length:
            break
        block = (word.value >> (word.length - 1 - last)) & ((1 << (last - first + 1)) - 1)
        if block not in cover.blocks[n]:
            return False
    return True


def tail_measure(cover: SmallSetsCover, start_index: int = 0, depth: Optional[int] = None) -> Fraction:
    """Product of |S_n| / 2^|I_n| over n >= start_index (intervals below ``depth`` when given)."""
    total = Fraction(1)
    for n in range(start_index, len(cover.intervals)):
        if depth is not None and cover.intervals[n][1] >= depth:
            break
        total *= cover.ratio(n)
    return total


def e2_small_sets_cover(depth: int) -> SmallSetsCover:
    """The triangular set as a block cover: I_n = [n(n-1), n(n+1) - 1] and S_n the blocks
    vanishing on the last n coordinates of I_n."""
    intervals = []
    blocks = []
    n = 1
    while n * (n + 1) - 1 < depth:
        intervals.append((n * (n - 1), n * (n + 1) - 1))
        blocks.append(frozenset(v << n for v in range(1 << n)))
        n += 1
    return SmallSetsCover(tuple(intervals), tuple(blocks))
