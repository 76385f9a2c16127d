"""Exact arithmetic of finite abelian groups, their subsets, and Minkowski sums.

Every group here is a finite product of cyclic groups. Elements are mixed-radix
indices (first modulus most significant), subsets are dense bit vectors stored
in a Python ``int`` whose bit ``i`` marks element ``i``.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from errors import ConsistencyError, FormatError, GroupMismatchError, PreconditionError


# --- bit-vector helpers shared with cantor_core -------------------------------

def iter_set_bits(bits: int) -> Iterator[int]:
    """Yield the positions of the set bits of ``bits`` in increasing order."""
    text = bin(bits)[:1:-1]
    position = text.find("1")
    while position != -1:
        yield position
        position = text.find("1", position + 1)


def bits_from_indices(indices: Iterable[int], size: int) -> int:
    """Build a bit vector of ``size`` bits with the given positions set."""
    buffer = bytearray((size + 7) // 8)
    for index in indices:
        if not 0 <= index < size:
            raise PreconditionError(f"bit position {index} outside a vector of {size} bits")
        buffer[index >> 3] |= 1 << (index & 7)
    return int.from_bytes(buffer, "little")


@functools.lru_cache(maxsize=None)
def index_bit_mask(log_size: int, position: int) -> int:
    """Bit vector over 2**log_size indices with bit i set when index i has bit ``position`` set."""
    width = 1 << position
    block = ((1 << width) - 1) << width
    total = 1 << log_size
    return block * (((1 << total) - 1) // ((1 << (width << 1)) - 1))


def bits_to_hex(bits: int, size: int) -> str:
    """Hex digits of the bit vector, zero padded to cover ``size`` bits (bit 0 = element 0)."""
    return format(bits, "x").zfill(max(1, (size + 3) // 4))


def bits_from_hex(text: str, size: int) -> int:
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    if not text or re.fullmatch(r"[0-9a-f]+", text) is None:
        raise FormatError(f"not a hex bit vector: {text!r}")
    bits = int(text, 16)
    if bits >> size:
        raise FormatError(f"hex bit vector {text!r} has bits beyond position {size - 1}")
    return bits


# --- groups -------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteAbelianGroup:
    """The product of cyclic groups of the given moduli."""

    moduli: tuple[int, ...]

    def __post_init__(self) -> None:
        moduli = tuple(int(m) for m in self.moduli)
        if not moduli:
            raise PreconditionError("a group needs at least one cyclic factor")
        if any(m < 2 for m in moduli):
            raise PreconditionError(f"every modulus must be >= 2, got {list(moduli)}")
        object.__setattr__(self, "moduli", moduli)

    @functools.cached_property
    def order(self) -> int:
        return math.prod(self.moduli)

    @functools.cached_property
    def full_bits(self) -> int:
        return (1 << self.order) - 1

    @property
    def identity(self) -> "GroupElement":
        return GroupElement(self, 0)

    def __str__(self) -> str:
        return "x".join(str(m) for m in self.moduli)

    def decode(self, index: int) -> tuple[int, ...]:
        """Digits of ``index`` over the moduli, first modulus most significant."""
        if not 0 <= index < self.order:
            raise PreconditionError(f"element index {index} outside [0, {self.order})")
        digits = []
        for modulus in reversed(self.moduli):
            index, digit = divmod(index, modulus)
            digits.append(digit)
        return tuple(reversed(digits))

    def encode(self, digits: Sequence[int]) -> int:
        if len(digits) != len(self.moduli):
            raise PreconditionError(f"expected {len(self.moduli)} digits, got {len(digits)}")
        index = 0
        for digit, modulus in zip(digits, self.moduli):
            index = index * modulus + (digit % modulus)
        return index

    @functools.cached_property
    def _addition_table(self) -> tuple[tuple[int, ...], ...]:
        decoded = [self.decode(i) for i in range(self.order)]
        return tuple(
            tuple(self.encode([a + b for a, b in zip(decoded[x], decoded[y])]) for y in range(self.order))
            for x in range(self.order)
        )

    @functools.cached_property
    def _negation(self) -> tuple[int, ...]:
        return tuple(self.encode([-d for d in self.decode(i)]) for i in range(self.order))

    def add(self, x: int, y: int) -> int:
        return self._addition_table[x][y]

    def negate(self, x: int) -> int:
        return self._negation[x]

    def negate_bits(self, bits: int) -> int:
        """Bit vector of ``{-a : a in bits}``."""
        negation = self._negation
        result = 0
        for a in iter_set_bits(bits):
            result |= 1 << negation[a]
        return result

    def translate_bits(self, bits: int, y: int) -> int:
        """Bit vector of ``{a + y : a in bits}``."""
        if len(self.moduli) == 1:
            n = self.order
            y %= n
            return ((bits << y) | (bits >> (n - y))) & self.full_bits
        row = self._addition_table
        result = 0
        for a in iter_set_bits(bits):
            result |= 1 << row[a][y]
        return result

    def sumset_bits(self, a: int, b: int) -> int:
        if not a or not b:
            return 0
        if a.bit_count() > b.bit_count():
            a, b = b, a
        result = 0
        for x in iter_set_bits(a):
            result |= self.translate_bits(b, x)
            if result == self.full_bits:
                break
        return result


def parse_group(text: str) -> FiniteAbelianGroup:
    """Parse ``"3"`` as Z_3 and ``"2x2"`` as Z_2 x Z_2."""
    parts = re.split(r"\s*[x×,]\s*", text.strip().lower())
    try:
        moduli = tuple(int(part) for part in parts)
    except ValueError:
        raise FormatError(f"cannot parse group {text!r}; expected moduli like '3' or '2x2'") from None
    try:
        return FiniteAbelianGroup(moduli)
    except PreconditionError as e:
        raise FormatError(f"invalid group {text!r}: {e}") from None


@dataclass(frozen=True)
class GroupElement:
    group: FiniteAbelianGroup
    index: int

    def __post_init__(self) -> None:
        if not 0 <= self.index < self.group.order:
            raise PreconditionError(f"element index {self.index} outside [0, {self.group.order})")

    @property
    def digits(self) -> tuple[int, ...]:
        return self.group.decode(self.index)

    def __add__(self, other: "GroupElement") -> "GroupElement":
        _require_same_group(self.group, other.group)
        return GroupElement(self.group, self.group.add(self.index, other.index))

    def __neg__(self) -> "GroupElement":
        return GroupElement(self.group, self.group.negate(self.index))


@dataclass(frozen=True)
class GroupSubset:
    """A subset of a finite abelian group as a bit vector over element indices."""

    group: FiniteAbelianGroup
    bits: int

    def __post_init__(self) -> None:
        if self.bits < 0 or self.bits >> self.group.order:
            raise PreconditionError(f"bit vector does not fit a group of order {self.group.order}")

    @classmethod
    def from_members(cls, group: FiniteAbelianGroup, members: Iterable[int]) -> "GroupSubset":
        return cls(group, bits_from_indices(members, group.order))

    @classmethod
    def from_hex(cls, group: FiniteAbelianGroup, text: str) -> "GroupSubset":
        return cls(group, bits_from_hex(text, group.order))

    @classmethod
    def empty(cls, group: FiniteAbelianGroup) -> "GroupSubset":
        return cls(group, 0)

    @classmethod
    def full(cls, group: FiniteAbelianGroup) -> "GroupSubset":
        return cls(group, group.full_bits)

    def to_hex(self) -> str:
        return bits_to_hex(self.bits, self.group.order)

    def members(self) -> list[int]:
        return list(iter_set_bits(self.bits))

    def __iter__(self) -> Iterator[int]:
        return iter_set_bits(self.bits)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, element: object) -> bool:
        index = element.index if isinstance(element, GroupElement) else element
        return isinstance(index, int) and 0 <= index < self.group.order and bool(self.bits >> index & 1)

    def is_empty(self) -> bool:
        return self.bits == 0

    def is_full(self) -> bool:
        return self.bits == self.group.full_bits

    def complement(self) -> "GroupSubset":
        return GroupSubset(self.group, self.group.full_bits & ~self.bits)

    def union(self, other: "GroupSubset") -> "GroupSubset":
        _require_same_group(self.group, other.group)
        return GroupSubset(self.group, self.bits | other.bits)

    def intersection(self, other: "GroupSubset") -> "GroupSubset":
        _require_same_group(self.group, other.group)
        return GroupSubset(self.group, self.bits & other.bits)

    def __repr__(self) -> str:
        return f"GroupSubset({self.group}, {self.members()})"


def _require_same_group(left: FiniteAbelianGroup, right: FiniteAbelianGroup) -> None:
    if left != right:
        raise GroupMismatchError(f"operands live in different groups: {left} vs {right}")


def sumset(a: GroupSubset, b: GroupSubset) -> GroupSubset:
    """Minkowski sum ``A + B``; empty when either operand is empty."""
    _require_same_group(a.group, b.group)
    return GroupSubset(a.group, a.group.sumset_bits(a.bits, b.bits))


def translate(a: GroupSubset, y: GroupElement | int) -> GroupSubset:
    index = y.index if isinstance(y, GroupElement) else y
    if isinstance(y, GroupElement):
        _require_same_group(a.group, y.group)
    elif not 0 <= index < a.group.order:
        raise PreconditionError(f"element index {index} outside [0, {a.group.order})")
    return GroupSubset(a.group, a.group.translate_bits(a.bits, index))


def avoiding_translate(a: GroupSubset, f: GroupSubset) -> Optional[int]:
    """Least element index ``y`` with ``(y - A) ∩ F = ∅``, or None when A + F is the whole group.

    ``(y - A) ∩ F = ∅`` says exactly that ``y`` is not in ``A + F``.
    """
    _require_same_group(a.group, f.group)
    reflected = a.group.negate_bits(a.bits)
    for y in range(a.group.order):
        if not a.group.translate_bits(reflected, y) & f.bits:
            return y
    return None


def is_cover(a: GroupSubset, b: GroupSubset) -> bool:
    """True when ``A + B`` is the whole group.

    Computed twice, once from the sumset and once from the avoiding-translate
    form, and the two answers must agree.
    """
    by_sumset = sumset(a, b).is_full()
    by_witness = avoiding_translate(a, b) is None
    if by_sumset != by_witness:
        raise ConsistencyError(
            f"sumset and witness computations disagree for A={a.members()} B={b.members()} in {a.group}"
        )
    return by_sumset


def random_subset(group: FiniteAbelianGroup, rng: np.random.Generator, density: float = 0.5) -> GroupSubset:
    picks = np.flatnonzero(rng.random(group.order) < density)
    return GroupSubset.from_members(group, (int(i) for i in picks))


@dataclass(frozen=True)
class SetFamily:
    """A duplicate-free family of subsets of one group.

    ``members`` is itself a bit vector, indexed by subset code: bit ``c`` is set
    when the subset whose bit vector equals ``c`` belongs to the family.
    """

    group: FiniteAbelianGroup
    members: int

    def __post_init__(self) -> None:
        if self.members < 0 or self.members >> (1 << self.group.order):
            raise PreconditionError(f"family bit vector does not fit the subsets of a group of order {self.group.order}")

    @classmethod
    def from_subsets(cls, group: FiniteAbelianGroup, subsets: Iterable[GroupSubset | int]) -> "SetFamily":
        codes = []
        for subset in subsets:
            if isinstance(subset, GroupSubset):
                _require_same_group(group, subset.group)
                codes.append(subset.bits)
            else:
                codes.append(subset)
        return cls(group, bits_from_indices(codes, 1 << group.order))

    @classmethod
    def empty(cls, group: FiniteAbelianGroup) -> "SetFamily":
        return cls(group, 0)

    @classmethod
    def power_set(cls, group: FiniteAbelianGroup) -> "SetFamily":
        return cls(group, (1 << (1 << group.order)) - 1)

    def codes(self) -> Iterator[int]:
        return iter_set_bits(self.members)

    def subsets(self) -> list[GroupSubset]:
        return [GroupSubset(self.group, code) for code in self.codes()]

    def __len__(self) -> int:
        return self.members.bit_count()

    def __contains__(self, subset: object) -> bool:
        code = subset.bits if isinstance(subset, GroupSubset) else subset
        return isinstance(code, int) and 0 <= code < (1 << self.group.order) and bool(self.members >> code & 1)

    def with_member(self, subset: GroupSubset | int) -> "SetFamily":
        code = subset.bits if isinstance(subset, GroupSubset) else subset
        return SetFamily(self.group, self.members | (1 << code))

    def issubset(self, other: "SetFamily") -> bool:
        _require_same_group(self.group, other.group)
        return not self.members & ~other.members

    def to_hex_list(self) -> list[str]:
        return [bits_to_hex(code, self.group.order) for code in self.codes()]

    @classmethod
    def from_hex_list(cls, group: FiniteAbelianGroup, items: Sequence[str]) -> "SetFamily":
        if isinstance(items, (str, bytes)) or not all(isinstance(item, str) for item in items):
            raise FormatError("a family must be a list of hex subset strings")
        return cls.from_subsets(group, (bits_from_hex(item, group.order) for item in items))

    def __repr__(self) -> str:
        return f"SetFamily({self.group}, {[s.members() for s in self.subsets()]})"
