"""Finite-depth avoidance constructions: nowhere dense lists against covers, and porous sets
against covers with a linear length schedule.

Given closed nowhere dense traces C_0..C_{N-1} and a cover (sigma_n) whose lengths
follow the cumulative gap schedule, ``gms_avoid`` builds y with ``(y + [sigma_n]) ∩ C_n = ∅``
for every n. ``smz_witness_translate`` is the converse search for one translate,
and ``micro_porous_avoid`` is the analogue for a k-porous tree and a cover of
lengths (n+1)k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from cantor_core import (
    BinaryWord,
    ClopenSet,
    EMPTY_WORD,
    complement,
    leaves_to_array,
    random_word,
    xor_sumset,
)
from closed_trees import ClosedTree, is_k_porous_to_depth, lemma_xd_gamma, nd_gap
from errors import FormatError, NotNowhereDenseError, PorosityError, PreconditionError, ScheduleMismatchError


@dataclass(frozen=True)
class Cover:
    """Words sigma_n with ``|sigma_n| = schedule[n]``."""

    schedule: tuple[int, ...]
    words: tuple[BinaryWord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "schedule", tuple(int(k) for k in self.schedule))
        object.__setattr__(self, "words", tuple(self.words))
        if len(self.schedule) != len(self.words):
            raise PreconditionError(f"{len(self.words)} words for a schedule of {len(self.schedule)} lengths")
        for n, (k, word) in enumerate(zip(self.schedule, self.words)):
            if word.length != k:
                raise PreconditionError(f"word {n} has length {word.length}, the schedule asks for {k}")

    @classmethod
    def from_words(cls, words: Sequence[BinaryWord]) -> "Cover":
        return cls(tuple(w.length for w in words), tuple(words))

    def __len__(self) -> int:
        return len(self.words)

    def to_json(self) -> str:
        return json.dumps([str(word) for word in self.words])

    @classmethod
    def from_json(cls, text: str) -> "Cover":
        try:
            items = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError(f"cover file is not JSON: {e}") from None
        if not isinstance(items, list) or not all(isinstance(item, str) for item in items):
            raise FormatError("a cover must be a JSON array of 0/1 strings")
        return cls.from_words([BinaryWord.parse(item) for item in items])


class GmsStep(BaseModel):
    n: int
    m: int
    gap: int
    sigma: str
    gamma: str


class GmsTrace(BaseModel):
    schedule: list[int]
    steps: list[GmsStep] = Field(default_factory=list)
    y: str = ""


def gms_schedule(trees: Sequence[ClosedTree]) -> list[int]:
    """Cumulative lengths: k_0 is the gap at level 0, k_n adds the gap of C_n at level k_{n-1}."""
    schedule: list[int] = []
    level = 0
    for n, tree in enumerate(trees):
        if level >= tree.depth:
            raise NotNowhereDenseError(
                f"tree {n} has depth {tree.depth}; its gap at level {level} is undefined"
            )
        level += nd_gap(tree, level)
        schedule.append(level)
    return schedule


def gms_trace(trees: Sequence[ClosedTree], cover: Cover) -> GmsTrace:
    schedule = gms_schedule(trees)
    if list(cover.schedule) != schedule:
        raise ScheduleMismatchError(f"cover schedule {list(cover.schedule)} differs from the gap schedule {schedule}")
    trace = GmsTrace(schedule=schedule)
    gamma = EMPTY_WORD
    previous = 0
    for n, (tree, sigma) in enumerate(zip(trees, cover.words)):
        gap = schedule[n] - previous
        gamma = lemma_xd_gamma(tree, previous, gap, gamma, sigma)
        trace.steps.append(GmsStep(n=n, m=previous, gap=gap, sigma=str(sigma), gamma=str(gamma)))
        previous = schedule[n]
    trace.y = str(gamma)
    return trace


def gms_avoid(trees: Sequence[ClosedTree], cover: Cover) -> BinaryWord:
    return BinaryWord.parse(gms_trace(trees, cover).y)


def verify_gms_avoidance(trees: Sequence[ClosedTree], cover: Cover, y: BinaryWord) -> list[str]:
    """Check every depth-d leaf x extending sigma_n against C_n; returns the violations found."""
    if len(trees) != len(cover):
        raise ScheduleMismatchError(f"{len(trees)} trees but {len(cover)} cover words")
    violations = []
    for n, (tree, sigma) in enumerate(zip(trees, cover.words)):
        d = tree.depth
        shift = y.pad_to(d).value
        flags = leaves_to_array(tree.leaves, d)
        if sigma.length >= d:
            xs = np.array([sigma.prefix(d).value], dtype=np.int64)
        else:
            span = 1 << (d - sigma.length)
            xs = np.arange(sigma.value * span, (sigma.value + 1) * span, dtype=np.int64)
        hits = xs[flags[xs ^ shift]]
        if hits.size:
            first = BinaryWord(d, int(hits[0]))
            violations.append(f"step {n}: {hits.size} leaves x extending {sigma or 'ε'} land in C_{n}, first x={first}")
    return violations


def smz_witness_translate(x_set: ClopenSet, tree: ClopenSet) -> Optional[BinaryWord]:
    """Least z with ``(X + z) ∩ C = ∅``, or None when ``X + C`` is the whole space."""
    total = xor_sumset(x_set, tree)
    free = total.full_bits & ~total.leaves
    if not free:
        return None
    return BinaryWord(total.depth, (free & -free).bit_length() - 1)


def shortlex_word(n: int) -> BinaryWord:
    """The n-th binary word in shortlex order: ε, 0, 1, 00, 01, ..."""
    length = (n + 1).bit_length() - 1
    return BinaryWord(length, n + 1 - (1 << length))


def smz_cover_via_translate(x_set: ClopenSet, schedule: Sequence[int], depth: int) -> Optional[Cover]:
    """Cover X by words of the given lengths through one translate of a closed set.

    With t_n the shortlex words fitted to length k_n and C the complement of
    their cylinders, a z with ``X ∩ (C + z) = ∅`` gives ``X ⊆ ⋃[t_n XOR z|k_n]``.
    """
    if any(k > depth for k in schedule):
        raise PreconditionError(f"schedule {list(schedule)} has lengths beyond depth {depth}")
    words = [shortlex_word(n).pad_to(k) for n, k in enumerate(schedule)]
    closed = complement(ClopenSet.from_words(depth, words))
    z = smz_witness_translate(x_set, closed)
    if z is None:
        return None
    z = z.pad_to(depth)
    return Cover(tuple(schedule), tuple(w.xor(z.prefix(w.length)) for w in words))


def cover_contains(cover: Cover, word: BinaryWord) -> bool:
    return any(word.extends(sigma) for sigma in cover.words)


def derive_cover(schedule: Sequence[int], rng: np.random.Generator) -> Cover:
    return Cover(tuple(schedule), tuple(random_word(k, rng) for k in schedule))


def _aa_step(tree: ClosedTree, k: int, alpha: BinaryWord, tau: BinaryWord) -> BinaryWord:
    m = alpha.length
    delta = tree.escape(alpha.xor(tau.prefix(m)), k)
    if delta is None:
        raise PorosityError(f"no escape of length {k} below level {m} in a tree of depth {tree.depth}")
    return tau.xor(delta)


def lemma_aa_beta(tree: ClosedTree, k: int, alpha: BinaryWord, tau: BinaryWord) -> BinaryWord:
    """A word beta extending alpha with ``([tau] + [beta]) ∩ E = ∅`` for a k-porous E."""
    if tau.length != alpha.length + k:
        raise PreconditionError(f"need |tau| = |alpha| + k = {alpha.length + k}, got {tau.length}")
    if not is_k_porous_to_depth(tree, k):
        raise PorosityError(f"tree of depth {tree.depth} is not {k}-porous")
    return _aa_step(tree, k, alpha, tau)


def micro_porous_avoid(tree: ClosedTree, k: int, cover: Cover) -> BinaryWord:
    """y with ``(y + [sigma_n]) ∩ E = ∅`` for every n, for a cover with ``|sigma_n| = (n + 1) k``."""
    expected = [(n + 1) * k for n in range(len(cover))]
    if list(cover.schedule) != expected:
        raise ScheduleMismatchError(f"cover schedule {list(cover.schedule)} is not (n+1)*{k} = {expected}")
    if not is_k_porous_to_depth(tree, k):
        raise PorosityError(f"tree of depth {tree.depth} is not {k}-porous")
    alpha = EMPTY_WORD
    for sigma in cover.words:
        alpha = _aa_step(tree, k, alpha, sigma)
    return alpha
