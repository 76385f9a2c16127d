"""Closed subsets of the Cantor space as depth-d leaf traces.

Covers nowhere-density gaps, k-porosity, upper-porosity witnesses, zero masks
and the masked porous-escape construction that builds a point of a masked set
missing every tree of a porous list.
"""

from __future__ import annotations

import abc
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from cantor_core import BinaryWord, ClopenSet, EMPTY_WORD, leaves_from_array, leaves_to_array, measure
from errors import (
    MaskStarvationError,
    NotNowhereDenseError,
    PorosityError,
    PreconditionError,
    UnknownPresetError,
)


@dataclass(frozen=True)
class ClosedTree(ClopenSet):
    """The depth-d prefix trace of a closed set; a node is alive when some leaf below it is set."""

    @functools.cached_property
    def _alive_levels(self) -> tuple[np.ndarray, ...]:
        levels = [leaves_to_array(self.leaves, self.depth)]
        for _ in range(self.depth):
            levels.append(levels[-1].reshape(-1, 2).any(axis=1))
        levels.reverse()
        for level in levels:
            level.setflags(write=False)
        return tuple(levels)

    @classmethod
    def from_clopen(cls, clopen: ClopenSet) -> "ClosedTree":
        return cls(clopen.depth, clopen.leaves)

    def alive_nodes(self, level: int) -> np.ndarray:
        """Indices of the alive nodes at ``level`` in increasing order."""
        if not 0 <= level <= self.depth:
            raise PreconditionError(f"level {level} outside [0, {self.depth}]")
        return np.flatnonzero(self._alive_levels[level])

    def is_alive(self, word: BinaryWord) -> bool:
        """True when the cylinder of ``word`` meets the trace."""
        if word.length <= self.depth:
            return bool(self._alive_levels[word.length][word.value])
        return bool(self._alive_levels[self.depth][word.value >> (word.length - self.depth)])

    def escape(self, prefix: BinaryWord, k: int) -> Optional[BinaryWord]:
        """Lexicographically least extension of ``prefix`` by ``k`` letters whose cylinder misses the trace."""
        if k < 0:
            raise PreconditionError(f"escape length must be >= 0, got {k}")
        m, d = prefix.length, self.depth
        target = m + k
        if target <= d:
            block = self._alive_levels[target][prefix.value << k:(prefix.value + 1) << k]
            dead = np.flatnonzero(~block)
            return BinaryWord(target, (prefix.value << k) + int(dead[0])) if dead.size else None
        if m >= d:
            return None if self.is_alive(prefix) else prefix.concat(BinaryWord.zeros(k))
        span = d - m
        block = self._alive_levels[d][prefix.value << span:(prefix.value + 1) << span]
        dead = np.flatnonzero(~block)
        if not dead.size:
            return None
        return BinaryWord(target, ((prefix.value << span) + int(dead[0])) << (target - d))


def escape(tree: ClosedTree, prefix: BinaryWord, k: int) -> Optional[BinaryWord]:
    return tree.escape(prefix, k)


def alive_nodes(tree: ClosedTree, level: int) -> list[BinaryWord]:
    return [BinaryWord(level, int(v)) for v in tree.alive_nodes(level)]


def _every_node_escapes(tree: ClosedTree, m: int, k: int) -> bool:
    dead = ~tree._alive_levels[m + k].reshape(1 << m, 1 << k)
    return bool(dead.any(axis=1).all())


def nd_gap(tree: ClosedTree, m: int) -> int:
    """Least k such that every word of length m has a k-letter extension whose cylinder misses the tree.

    The empty tree has gap 0: every node already misses it.
    """
    if not 0 <= m < tree.depth:
        raise PreconditionError(f"nd_gap needs 0 <= m < depth={tree.depth}, got m={m}")
    for k in range(tree.depth - m + 1):
        if _every_node_escapes(tree, m, k):
            return k
    raise NotNowhereDenseError(f"tree of depth {tree.depth} has no nowhere-density gap at level {m}")


def is_nowhere_dense_to_depth(tree: ClosedTree) -> bool:
    try:
        for m in range(tree.depth):
            nd_gap(tree, m)
    except NotNowhereDenseError:
        return False
    return True


def lemma_xd_gamma(tree: ClosedTree, m: int, k: int, alpha: BinaryWord, beta: BinaryWord) -> BinaryWord:
    """A word gamma extending alpha with ``([gamma] + [beta]) ∩ C = ∅``.

    delta is the least escape from ``alpha XOR beta|m`` and gamma is ``beta XOR delta``.
    """
    if alpha.length != m or beta.length != m + k:
        raise PreconditionError(f"need |alpha| = {m} and |beta| = {m + k}, got {alpha.length} and {beta.length}")
    if m < tree.depth:
        gap = nd_gap(tree, m)
        if k < gap:
            raise PreconditionError(f"k={k} is below the nowhere-density gap {gap} at level {m}")
    delta = tree.escape(alpha.xor(beta.prefix(m)), k)
    if delta is None:
        raise PreconditionError(f"no escape of length {k} below level {m}; the tree is not nowhere dense there")
    return beta.xor(delta)


def is_k_porous_to_depth(tree: ClosedTree, k: int) -> bool:
    if not 1 <= k <= max(tree.depth, 1):
        raise PreconditionError(f"porosity constant must satisfy 1 <= k <= depth={tree.depth}, got {k}")
    if tree.depth == 0:
        return tree.is_empty()
    return all(_every_node_escapes(tree, m, k) for m in range(tree.depth - k + 1))


def porosity_constant(tree: ClosedTree) -> Optional[int]:
    """Least k with the tree k-porous to its depth, or None when it is not porous to depth."""
    for k in range(1, max(tree.depth, 1) + 1):
        if is_k_porous_to_depth(tree, k):
            return k
    return None


def porous_density_bound(depth: int, k: int) -> Fraction:
    return (1 - Fraction(1, 1 << k)) ** (depth // k)


def porous_density_check(tree: ClosedTree, k: int) -> bool:
    if not is_k_porous_to_depth(tree, k):
        raise PorosityError(f"tree of depth {tree.depth} is not {k}-porous")
    return measure(tree) <= porous_density_bound(tree.depth, k)


# --- zero masks -----------------------------------------------------------------

class ZeroMask(abc.ABC):
    """A set of coordinates forced to 0; its mask set is every point vanishing there."""

    name: str = ""

    @abc.abstractmethod
    def contains(self, i: int) -> bool: ...

    def positions(self, bound: int) -> list[int]:
        """Mask positions below ``bound`` in increasing order."""
        return [i for i in range(bound) if self.contains(i)]

    def free_positions(self, bound: int) -> list[int]:
        return [i for i in range(bound) if not self.contains(i)]

    def count_below(self, bound: int) -> int:
        return len(self.positions(bound))

    def run_is_free(self, start: int, length: int) -> bool:
        return not any(self.contains(i) for i in range(start, start + length))

    def admits(self, word: BinaryWord) -> bool:
        """True when ``word`` is 0 at every mask position below its length."""
        return all(word.bit(i) == 0 for i in self.positions(word.length))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"


class NoMask(ZeroMask):
    name = "none"

    def contains(self, i: int) -> bool:
        return False

    def positions(self, bound: int) -> list[int]:
        return []


class PowTwoPairsMask(ZeroMask):
    """Positions 2^a and 2^a + 1."""

    name = "pow2-pairs"

    def contains(self, i: int) -> bool:
        return i >= 1 and ((i & (i - 1)) == 0 or (i >= 2 and ((i - 1) & (i - 2)) == 0))

    def positions(self, bound: int) -> list[int]:
        found: set[int] = set()
        power = 1
        while power < bound:
            found.update(p for p in (power, power + 1) if p < bound)
            power <<= 1
        return sorted(found)


class TriangularBlocksMask(ZeroMask):
    """The union of the blocks [n^2, n^2 + n - 1] for n >= 1."""

    name = "triangular-blocks"

    def contains(self, i: int) -> bool:
        n = math.isqrt(i)
        return n >= 1 and i - n * n <= n - 1

    def positions(self, bound: int) -> list[int]:
        out = []
        n = 1
        while n * n < bound:
            out.extend(range(n * n, min(n * n + n, bound)))
            n += 1
        return out


class TernaryBlocksMask(ZeroMask):
    """The union of the blocks [3^m - 1, 2 * 3^m - 2] for m >= 0."""

    name = "ternary-blocks"

    def contains(self, i: int) -> bool:
        power = 1
        while 3 * power - 1 <= i:
            power *= 3
        return power - 1 <= i <= 2 * power - 2

    def positions(self, bound: int) -> list[int]:
        out = []
        power = 1
        while power - 1 < bound:
            out.extend(range(power - 1, min(2 * power - 1, bound)))
            power *= 3
        return out


MASK_PRESETS: dict[str, type[ZeroMask]] = {
    mask.name: mask for mask in (PowTwoPairsMask, TriangularBlocksMask, TernaryBlocksMask, NoMask)
}


def get_mask(name: str) -> ZeroMask:
    try:
        return MASK_PRESETS[name]()
    except KeyError:
        raise UnknownPresetError(f"unknown mask preset {name!r}; choose from {sorted(MASK_PRESETS)}") from None


# --- upper porosity -------------------------------------------------------------

def upper_porosity_witnesses(mask: ZeroMask, x: BinaryWord, k: int) -> list[tuple[int, BinaryWord]]:
    """Every n <= |x| - K where some K-letter extension of x|n leaves the mask set.

    The witness returned for n is ``x|n`` followed by K ones, which leaves the
    set exactly when a mask position lies in [n, n + K).
    """
    if k < 1:
        raise PreconditionError(f"K must be >= 1, got {k}")
    if not mask.admits(x):
        bad = next(i for i in mask.positions(x.length) if x.bit(i))
        raise PreconditionError(f"x has a 1 at mask position {bad}; it is not in the mask set")
    masked = set(mask.positions(x.length))
    witnesses = []
    for n in range(0, x.length - k + 1):
        if any(i in masked for i in range(n, n + k)):
            witnesses.append((n, x.prefix(n).concat(BinaryWord.ones(k))))
    return witnesses


def mask_set_words(mask: ZeroMask, depth: int) -> Iterator[BinaryWord]:
    free = mask.free_positions(depth)
    for choice in range(1 << len(free)):
        value = 0
        for j, position in enumerate(free):
            if choice >> j & 1:
                value |= 1 << (depth - 1 - position)
        yield BinaryWord(depth, value)


def is_upper_porous_trace(mask: ZeroMask, depth: int, k: int, max_members: int = 1 << 16) -> bool:
    """Every member of the mask set's trace at ``depth`` has at least one upper-porosity witness."""
    free = mask.free_positions(depth)
    if (1 << len(free)) > max_members:
        raise PreconditionError(f"mask set trace at depth {depth} has 2^{len(free)} members; the bound is {max_members}")
    return all(upper_porosity_witnesses(mask, x, k) for x in mask_set_words(mask, depth))


# --- porous escapes -------------------------------------------------------------

@dataclass
class EscapeTrace:
    word: BinaryWord
    #: (start, length, escaped prefix) per tree
    blocks: list[tuple[int, int, BinaryWord]] = field(default_factory=list)


def next_free_start(mask: ZeroMask, start: int, length: int, limit: int) -> int:
    """Least s >= start with [s, s + length) free of mask positions and s + length <= limit."""
    s = start
    while s + length <= limit:
        blocked = [i for i in range(s, s + length) if mask.contains(i)]
        if not blocked:
            return s
        s = blocked[-1] + 1
    raise MaskStarvationError(
        f"mask {mask.name!r} has no free run of {length} positions in [{start}, {limit})"
    )


def escape_porous_trace(
    mask: ZeroMask,
    porous_list: Sequence[tuple[int, ClosedTree]],
    depth: Optional[int] = None,
) -> EscapeTrace:
    """Greedy masked escape: zero-pad to the next free run of k_j positions, then escape T_j there."""
    ks = [k for k, _ in porous_list]
    if any(b < a for a, b in zip(ks, ks[1:])):
        raise PreconditionError(f"porosity constants must be nondecreasing, got {ks}")
    for j, (k, tree) in enumerate(porous_list):
        if k < 1 or k > tree.depth or not is_k_porous_to_depth(tree, k):
            raise PorosityError(f"tree {j} (depth {tree.depth}) is not {k}-porous")
    limit = depth if depth is not None else max((tree.depth for _, tree in porous_list), default=0)
    tau = EMPTY_WORD
    trace = EscapeTrace(word=tau)
    for j, (k, tree) in enumerate(porous_list):
        start = next_free_start(mask, tau.length, k, limit)
        alpha = tau.pad_to(start)
        escaped = tree.escape(alpha, k)
        if escaped is None:
            raise PorosityError(
                f"tree {j} of depth {tree.depth} has no escape of length {k} below position {start}"
            )
        tau = escaped
        trace.blocks.append((start, k, tau))
    if tau.length < limit:
        tau = tau.pad_to(limit)
    trace.word = tau
    return trace


def escape_porous(
    mask: ZeroMask,
    porous_list: Sequence[tuple[int, ClosedTree]],
    depth: Optional[int] = None,
) -> BinaryWord:
    return escape_porous_trace(mask, porous_list, depth).word


def verify_escape(mask: ZeroMask, porous_list: Sequence[tuple[int, ClosedTree]], word: BinaryWord) -> list[str]:
    """Independent recheck of an escape word; returns the violations found."""
    problems = [f"1 at mask position {i}" for i in mask.positions(word.length) if word.bit(i)]
    for j, (_, tree) in enumerate(porous_list):
        if tree.is_alive(word):
            problems.append(f"the word meets tree {j}")
    return problems


# --- closed-form pad schedules --------------------------------------------------

def _smallest_pow2_exponent(k: int) -> int:
    m = 0
    while not k < (1 << m) - 2:
        m += 1
    return m


def closed_form_pad_schedule(preset: str, ks: Sequence[int]) -> list[tuple[int, int]]:
    """(start, length) of each escape block under the closed-form pad rule of a preset.

    pow2-pairs starts at 2^M + 2 and triangular-blocks at K^2 - K; one position
    earlier is a mask coordinate in both. ternary-blocks uses blocks of length
    3^p starting at 2 * 3^p - 1.
    """
    blocks: list[tuple[int, int]] = []
    if preset == "pow2-pairs":
        previous = -1
        for k in ks:
            exponent = max(_smallest_pow2_exponent(k), previous + 1)
            blocks.append(((1 << exponent) + 2, k))
            previous = exponent
    elif preset == "triangular-blocks":
        previous = 0
        for k in ks:
            n = max(k, previous + 1)
            blocks.append((n * n - n, k))
            previous = n
    elif preset == "ternary-blocks":
        previous = -1
        for k in ks:
            exponent = 0
            while 3 ** exponent < k:
                exponent += 1
            exponent = max(exponent, previous + 1)
            blocks.append((2 * 3 ** exponent - 1, 3 ** exponent))
            previous = exponent
    else:
        raise UnknownPresetError(f"no closed-form pad schedule for preset {preset!r}")
    return blocks


def greedy_block_starts(mask: ZeroMask, ks: Sequence[int], limit: int) -> list[int]:
    starts = []
    position = 0
    for k in ks:
        start = next_free_start(mask, position, k, limit)
        starts.append(start)
        position = start + k
    return starts


def schedule_is_feasible(mask: ZeroMask, ks: Sequence[int], blocks: Sequence[tuple[int, int]]) -> bool:
    """Blocks lie in mask-free runs, are long enough, increase without overlap, and bound the greedy starts."""
    if len(blocks) != len(ks):
        return False
    end = 0
    for k, (start, length) in zip(ks, blocks):
        if length < k or start < end or not mask.run_is_free(start, length):
            return False
        end = start + length
    greedy = greedy_block_starts(mask, ks, end)
    return all(g <= start for g, (start, _) in zip(greedy, blocks))


# --- seeded generators ----------------------------------------------------------

def random_porous_tree(depth: int, k: int, rng: np.random.Generator, keep: float = 0.95) -> ClosedTree:
    """A random k-porous trace: grow level by level, and whenever all 2^k descendants of a node
    survive, drop one of them."""
    if not 1 <= k <= max(depth, 1):
        raise PreconditionError(f"need 1 <= k <= depth, got k={k}, depth={depth}")
    nodes = np.zeros(1, dtype=np.int64)
    for level in range(1, depth + 1):
        children = np.concatenate((2 * nodes, 2 * nodes + 1))
        children = np.sort(children[rng.random(children.size) < keep])
        if level >= k and children.size:
            groups, counts = np.unique(children >> k, return_counts=True)
            full = groups[counts == (1 << k)]
            if full.size:
                dropped = (full << k) | rng.integers(0, 1 << k, size=full.size)
                children = np.setdiff1d(children, dropped, assume_unique=True)
        nodes = children
    flags = np.zeros(1 << depth, dtype=bool)
    flags[nodes] = True
    return ClosedTree(depth, leaves_from_array(flags))


def random_nowhere_dense_tree(depth: int, rng: np.random.Generator) -> ClosedTree:
    """A random porous trace in which every node above the leaves also has a dead leaf below it."""
    k = int(rng.integers(1, min(3, max(depth, 1)) + 1))
    tree = random_porous_tree(depth, k, rng, keep=float(rng.uniform(0.7, 1.0)))
    if depth == 0:
        return tree
    pairs = leaves_to_array(tree.leaves, depth).reshape(-1, 2).copy()
    twins = np.flatnonzero(pairs.all(axis=1))
    pairs[twins, rng.integers(0, 2, size=twins.size)] = False
    return ClosedTree(depth, leaves_from_array(pairs.reshape(-1)))
