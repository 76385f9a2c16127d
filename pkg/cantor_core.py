"""Depth-bounded Cantor space: binary words, cylinders and clopen sets.

A clopen set at depth d is a bit vector over the 2**d words of length d; the
leaf index of a word is its integer value read most significant bit first.
Binary operations refine both operands to the larger depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from errors import EnumerationTooLargeError, FormatError, PreconditionError
from group_core import index_bit_mask, iter_set_bits

MAX_LEAF_DEPTH = 24


@dataclass(frozen=True, order=True)
class BinaryWord:
    """A finite 0/1 word; ``value`` holds the bits with the first letter most significant."""

    length: int
    value: int = 0

    def __post_init__(self) -> None:
        if self.length < 0:
            raise PreconditionError(f"word length must be >= 0, got {self.length}")
        if self.value < 0 or self.value >> self.length:
            raise PreconditionError(f"value {self.value} does not fit a word of length {self.length}")

    @classmethod
    def parse(cls, text: str) -> "BinaryWord":
        text = text.strip()
        if text in ("", "ε", "-"):
            return cls(0, 0)
        if any(ch not in "01" for ch in text):
            raise FormatError(f"not a 0/1 word: {text!r}")
        return cls(len(text), int(text, 2))

    @classmethod
    def zeros(cls, length: int) -> "BinaryWord":
        return cls(length, 0)

    @classmethod
    def ones(cls, length: int) -> "BinaryWord":
        return cls(length, (1 << length) - 1)

    @classmethod
    def from_bits(cls, bits: "list[int] | tuple[int, ...]") -> "BinaryWord":
        value = 0
        for bit in bits:
            value = (value << 1) | (1 if bit else 0)
        return cls(len(bits), value)

    def __len__(self) -> int:
        return self.length

    def __str__(self) -> str:
        return format(self.value, "b").zfill(self.length) if self.length else ""

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise PreconditionError(f"position {i} outside a word of length {self.length}")
        return (self.value >> (self.length - 1 - i)) & 1

    def bits(self) -> list[int]:
        return [int(ch) for ch in str(self)]

    def prefix(self, n: int) -> "BinaryWord":
        if not 0 <= n <= self.length:
            raise PreconditionError(f"cannot take a prefix of length {n} from a word of length {self.length}")
        return BinaryWord(n, self.value >> (self.length - n))

    def concat(self, other: "BinaryWord") -> "BinaryWord":
        return BinaryWord(self.length + other.length, (self.value << other.length) | other.value)

    def xor(self, other: "BinaryWord") -> "BinaryWord":
        if self.length != other.length:
            raise PreconditionError(f"xor needs equal lengths, got {self.length} and {other.length}")
        return BinaryWord(self.length, self.value ^ other.value)

    def extends(self, other: "BinaryWord") -> bool:
        """True when ``other`` is a prefix of this word."""
        return other.length <= self.length and self.value >> (self.length - other.length) == other.value

    def pad_to(self, length: int) -> "BinaryWord":
        """Append zeros up to ``length``, or truncate when the word is longer."""
        if length <= self.length:
            return self.prefix(length)
        return BinaryWord(length, self.value << (length - self.length))

    def with_bit(self, i: int, bit: int) -> "BinaryWord":
        if not 0 <= i < self.length:
            raise PreconditionError(f"position {i} outside a word of length {self.length}")
        shift = self.length - 1 - i
        return BinaryWord(self.length, (self.value & ~(1 << shift)) | ((bit & 1) << shift))

    def suffix_from(self, n: int) -> "BinaryWord":
        """The letters at positions ``n`` and beyond."""
        if not 0 <= n <= self.length:
            raise PreconditionError(f"cannot drop {n} letters from a word of length {self.length}")
        return BinaryWord(self.length - n, self.value & ((1 << (self.length - n)) - 1))


EMPTY_WORD = BinaryWord(0, 0)


def check_leaf_depth(depth: int, limit: int = MAX_LEAF_DEPTH) -> None:
    if depth < 0:
        raise PreconditionError(f"depth must be >= 0, got {depth}")
    if depth > limit:
        raise EnumerationTooLargeError(f"depth {depth} needs 2^{depth} leaves; leaf vectors stop at depth {limit}")


# --- leaf bit-vector helpers ----------------------------------------------------

def leaves_to_array(leaves: int, depth: int) -> np.ndarray:
    size = 1 << depth
    raw = np.frombuffer(leaves.to_bytes((size + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(bool)


def leaves_from_array(flags: np.ndarray) -> int:
    return int.from_bytes(np.packbits(np.asarray(flags, dtype=bool), bitorder="little").tobytes(), "little")


def xor_translate_leaves(leaves: int, depth: int, value: int) -> int:
    """Leaf vector of ``{v XOR value : v in leaves}`` at the given depth."""
    full = (1 << (1 << depth)) - 1
    for position in iter_set_bits(value):
        mask = index_bit_mask(depth, position)
        width = 1 << position
        leaves = ((leaves & mask) >> width) | ((leaves & (full & ~mask)) << width)
    return leaves


def _cylinder_bits(prefix_value: int, prefix_length: int, depth: int) -> int:
    span = 1 << (depth - prefix_length)
    return ((1 << span) - 1) << (prefix_value * span)


def _refine_leaves(leaves: int, depth: int, new_depth: int) -> int:
    if new_depth == depth:
        return leaves
    flags = leaves_to_array(leaves, depth)
    return leaves_from_array(np.repeat(flags, 1 << (new_depth - depth)))


def _project_leaves(leaves: int, depth: int, new_depth: int) -> int:
    """Leaf vector at a coarser depth: a prefix is kept when any extension is."""
    if new_depth == depth:
        return leaves
    flags = leaves_to_array(leaves, depth).reshape(1 << new_depth, -1)
    return leaves_from_array(flags.any(axis=1))


def _resolution(leaves: int, depth: int) -> int:
    """Least depth at which the set is a union of cylinders."""
    if leaves == 0 or leaves == (1 << (1 << depth)) - 1:
        return 0
    flags = leaves_to_array(leaves, depth)
    for level in range(depth + 1):
        rows = flags.reshape(1 << level, -1)
        if (rows.all(axis=1) | ~rows.any(axis=1)).all():
            return level
    return depth


# --- clopen sets ----------------------------------------------------------------

@dataclass(frozen=True)
class ClopenSet:
    depth: int
    leaves: int = 0

    def __post_init__(self) -> None:
        check_leaf_depth(self.depth)
        if self.leaves < 0 or self.leaves >> (1 << self.depth):
            raise PreconditionError(f"leaf vector does not fit depth {self.depth}")

    @classmethod
    def empty(cls, depth: int) -> "ClopenSet":
        return cls(depth, 0)

    @classmethod
    def full(cls, depth: int) -> "ClopenSet":
        check_leaf_depth(depth)
        return cls(depth, (1 << (1 << depth)) - 1)

    @classmethod
    def from_words(cls, depth: int, words: "list[BinaryWord]") -> "ClopenSet":
        check_leaf_depth(depth)
        leaves = 0
        for word in words:
            if word.length > depth:
                raise PreconditionError(f"word {word} is longer than depth {depth}")
            leaves |= _cylinder_bits(word.value, word.length, depth)
        return cls(depth, leaves)

    @property
    def full_bits(self) -> int:
        return (1 << (1 << self.depth)) - 1

    def is_empty(self) -> bool:
        return self.leaves == 0

    def is_full(self) -> bool:
        return self.leaves == self.full_bits

    def count(self) -> int:
        return self.leaves.bit_count()

    def leaf_indices(self) -> Iterator[int]:
        return iter_set_bits(self.leaves)

    def iter_leaves(self) -> Iterator[BinaryWord]:
        for index in iter_set_bits(self.leaves):
            yield BinaryWord(self.depth, index)

    def contains(self, word: BinaryWord) -> bool:
        """Leaf membership for long words, cylinder inclusion for short ones."""
        if word.length >= self.depth:
            return bool(self.leaves >> word.prefix(self.depth).value & 1)
        block = _cylinder_bits(word.value, word.length, self.depth)
        return self.leaves & block == block

    def meets_cylinder(self, word: BinaryWord) -> bool:
        if word.length >= self.depth:
            return self.contains(word)
        return bool(self.leaves & _cylinder_bits(word.value, word.length, self.depth))

    def to_text(self) -> str:
        digits = max(1, ((1 << self.depth) + 3) // 4)
        return f"depth={self.depth}\n{format(self.leaves, 'x').zfill(digits)}\n"

    @classmethod
    def from_text(cls, text: str) -> "ClopenSet":
        lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
        if len(lines) != 2 or not lines[0].startswith("depth="):
            raise FormatError("expected two lines: 'depth=<d>' then a hex leaf vector")
        try:
            depth = int(lines[0].split("=", 1)[1])
            leaves = int(lines[1], 16)
        except ValueError:
            raise FormatError(f"cannot parse clopen set header {lines[0]!r} / vector {lines[1][:20]!r}") from None
        if depth < 0 or leaves >> (1 << depth):
            raise FormatError(f"hex leaf vector has bits beyond the 2^{depth} leaves of its depth")
        return cls(depth, leaves)

    def __repr__(self) -> str:
        if self.depth <= 5:
            return f"{type(self).__name__}(depth={self.depth}, {[str(w) for w in self.iter_leaves()]})"
        return f"{type(self).__name__}(depth={self.depth}, count={self.count()})"


def cylinder(word: BinaryWord, depth: int) -> ClopenSet:
    """``[β]`` at the given depth: every depth-d extension of the word."""
    if word.length > depth:
        raise PreconditionError(f"cylinder of a word of length {word.length} needs depth >= {word.length}, got {depth}")
    check_leaf_depth(depth)
    return ClopenSet(depth, _cylinder_bits(word.value, word.length, depth))


def refine(a: ClopenSet, depth: int) -> ClopenSet:
    if depth < a.depth:
        raise PreconditionError(f"cannot refine depth {a.depth} to the smaller depth {depth}")
    check_leaf_depth(depth)
    return ClopenSet(depth, _refine_leaves(a.leaves, a.depth, depth))


def _aligned(a: ClopenSet, b: ClopenSet) -> tuple[int, int, int]:
    depth = max(a.depth, b.depth)
    return depth, _refine_leaves(a.leaves, a.depth, depth), _refine_leaves(b.leaves, b.depth, depth)


def complement(a: ClopenSet) -> ClopenSet:
    return ClopenSet(a.depth, a.full_bits & ~a.leaves)


def union(a: ClopenSet, b: ClopenSet) -> ClopenSet:
    depth, left, right = _aligned(a, b)
    return ClopenSet(depth, left | right)


def intersect(a: ClopenSet, b: ClopenSet) -> ClopenSet:
    depth, left, right = _aligned(a, b)
    return ClopenSet(depth, left & right)


def translate(a: ClopenSet, word: BinaryWord) -> ClopenSet:
    """``a XOR w`` for a word of exactly the set's depth."""
    if word.length != a.depth:
        raise PreconditionError(f"translation word has length {word.length}; the set has depth {a.depth}")
    return ClopenSet(a.depth, xor_translate_leaves(a.leaves, a.depth, word.value))


def xor_sumset(a: ClopenSet, b: ClopenSet) -> ClopenSet:
    """Leaf w is set when some a in A and b in B have a XOR b = w.

    Both operands are first projected to the coarser of their resolutions,
    which is exact: past that depth one operand allows every continuation.
    """
    depth, left, right = _aligned(a, b)
    if not left or not right:
        return ClopenSet(depth, 0)
    level = min(_resolution(left, depth), _resolution(right, depth))
    left = _project_leaves(left, depth, level)
    right = _project_leaves(right, depth, level)
    if left.bit_count() > right.bit_count():
        left, right = right, left
    full = (1 << (1 << level)) - 1
    result = 0
    for value in iter_set_bits(left):
        result |= xor_translate_leaves(right, level, value)
        if result == full:
            break
    return ClopenSet(depth, _refine_leaves(result, level, depth))


def measure(a: ClopenSet) -> Fraction:
    return Fraction(a.count(), 1 << a.depth)


def random_word(length: int, rng: np.random.Generator) -> BinaryWord:
    if length == 0:
        return EMPTY_WORD
    return BinaryWord.from_bits([int(bit) for bit in rng.integers(0, 2, size=length)])


def random_clopen(depth: int, rng: np.random.Generator, density: float = 0.5) -> ClopenSet:
    check_leaf_depth(depth)
    return ClopenSet(depth, leaves_from_array(rng.random(1 << depth) < density))
