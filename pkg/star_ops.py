"""The star and bounded hat operations on set families over finite groups.

``star(F)`` is the family of all A whose sumset with every member of F misses
some element of the group. Families are bit vectors indexed by subset code
(see ``group_core.SetFamily``), so most of the laws below reduce to a handful
of big-integer operations, and the exhaustive runs over every family of a
small group are vectorized with numpy.
"""

from __future__ import annotations

import functools
import itertools
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from tqdm import tqdm

from errors import EnumerationTooLargeError, PreconditionError
from group_core import (
    FiniteAbelianGroup,
    GroupSubset,
    SetFamily,
    _require_same_group,
    avoiding_translate,
    bits_from_indices,
    index_bit_mask,
    iter_set_bits,
    random_subset,
)

MAX_STAR_ORDER = 20
TABLE_ROUTE_MAX_ORDER = 8
FAMILY_TABLE_MAX_ORDER = 4
MAX_WINDOW_POINTS = 2_000_000

LAW_NAMES = ("duality", "extensive", "antitone", "triple_star", "downward_closed_translation_invariant")


# --- family bit-vector primitives ------------------------------------------------

def downset_mask(bits: int) -> int:
    """Family bit vector of every subset of the subset ``bits``."""
    mask = 1
    for element in iter_set_bits(bits):
        mask |= mask << (1 << element)
    return mask


def upset_mask(bits: int, order: int) -> int:
    """Family bit vector of every superset of ``bits`` inside a group of the given order."""
    rest = ((1 << order) - 1) & ~bits
    return downset_mask(rest) << bits


def _check_order(group: FiniteAbelianGroup, limit: int, what: str) -> None:
    if group.order > limit:
        raise EnumerationTooLargeError(
            f"{what} enumerates all 2^{group.order} subsets of {group}; the bound is order <= {limit}"
        )


@functools.lru_cache(maxsize=None)
def _cover_table(group: FiniteAbelianGroup) -> tuple[int, ...]:
    """For every subset code A, the family bit vector of all B with A + B = G.

    B misses y in A + B exactly when B avoids ``y - A``, so the non-covering B
    are the subsets of the complements of the translates of ``-A``.
    """
    order = group.order
    all_codes = (1 << (1 << order)) - 1
    table = []
    for code in range(1 << order):
        covering = all_codes
        reflected = group.negate_bits(code)
        for y in range(order):
            shifted = group.translate_bits(reflected, y)
            covering &= all_codes & ~downset_mask(group.full_bits & ~shifted)
            if not covering:
                break
        table.append(covering)
    return tuple(table)


def _star_by_table(family: SetFamily) -> int:
    table = _cover_table(family.group)
    covered = 0
    for code in family.codes():
        covered |= table[code]
    return ((1 << (1 << family.group.order)) - 1) & ~covered


def _star_by_downsets(family: SetFamily) -> int:
    group = family.group
    result = (1 << (1 << group.order)) - 1
    for code in family.codes():
        # A + F misses y exactly when A ⊆ y - F^c
        reflected = group.negate_bits(group.full_bits & ~code)
        avoiding = 0
        seen: set[int] = set()
        for y in range(group.order):
            shifted = group.translate_bits(reflected, y)
            if shifted in seen:
                continue
            seen.add(shifted)
            avoiding |= downset_mask(shifted)
        result &= avoiding
        if result == 1:
            break
    return result


# --- operations ----------------------------------------------------------------

def star(family: SetFamily, route: str = "auto", max_order: int = MAX_STAR_ORDER) -> SetFamily:
    """All A with ``A + F != G`` for every F in the family; the power set for an empty family.

    ``route`` selects "table" (precomputed cover table, small groups), "downsets"
    (intersection over F of the down-sets of the sets ``y - F^c``),
    or "auto".
    """
    group = family.group
    _check_order(group, max_order, "star")
    if route == "auto":
        route = "table" if group.order <= TABLE_ROUTE_MAX_ORDER else "downsets"
    if route == "table":
        _check_order(group, TABLE_ROUTE_MAX_ORDER, "the cover-table route of star")
        return SetFamily(group, _star_by_table(family))
    if route == "downsets":
        return SetFamily(group, _star_by_downsets(family))
    raise PreconditionError(f"unknown star route {route!r}; expected 'auto', 'table' or 'downsets'")


class StarMembership(BaseModel):
    member: bool
    #: member code (hex) -> least y with (y - A) ∩ F = ∅, i.e. y outside A + F
    witnesses: dict[str, int] = Field(default_factory=dict)
    #: members F with A + F = G
    covering: list[str] = Field(default_factory=list)


def star_member(family: SetFamily, subset: GroupSubset) -> StarMembership:
    _require_same_group(family.group, subset.group)
    result = StarMembership(member=True)
    for f in family.subsets():
        y = avoiding_translate(subset, f)
        if y is None:
            result.member = False
            result.covering.append(f.to_hex())
        else:
            result.witnesses[f.to_hex()] = y
    return result


def is_downward_closed(family: SetFamily) -> bool:
    order = family.group.order
    for element in range(order):
        with_element = family.members & index_bit_mask(order, element)
        if (with_element >> (1 << element)) & ~family.members:
            return False
    return True


def is_translation_invariant(family: SetFamily) -> bool:
    group = family.group
    for code in family.codes():
        for y in range(1, group.order):
            if not family.members >> group.translate_bits(code, y) & 1:
                return False
    return True


class LawReport(BaseModel):
    duality: bool = True
    extensive: bool = True
    antitone: bool = True
    triple_star: bool = True
    downward_closed_translation_invariant: bool = True
    counterexamples: dict[str, list[str]] = Field(default_factory=dict)

    def all_pass(self) -> bool:
        return all(getattr(self, name) for name in LAW_NAMES)

    def merge(self, other: "LawReport") -> None:
        for name in LAW_NAMES:
            if not getattr(other, name) and getattr(self, name):
                setattr(self, name, False)
                self.counterexamples[name] = other.counterexamples.get(name, [])

    def as_json(self) -> dict:
        out: dict = {name: "pass" if getattr(self, name) else "fail" for name in LAW_NAMES}
        if self.counterexamples:
            out["counterexamples"] = self.counterexamples
        return out


def check_star_laws(family: SetFamily, other: SetFamily) -> LawReport:
    """Evaluate the five star laws on the pair (F, G).

    Duality is tested in both directions; antitonicity is tested on G ⊆ F when
    that holds and always on F ∩ G, which is a subfamily of both.
    """
    _require_same_group(family.group, other.group)
    group = family.group
    star_f = star(family)
    star_g = star(other)
    star2_f = star(star_f)
    star3_f = star(star2_f)
    report = LawReport()

    def fail(name: str, *families: SetFamily) -> None:
        setattr(report, name, False)
        report.counterexamples[name] = [item for fam in families for item in (fam.to_hex_list() or ["<empty>"])]

    if other.issubset(star_f) != family.issubset(star_g):
        fail("duality", family, other)
    if not family.issubset(star2_f):
        fail("extensive", family)
    meet = SetFamily(group, family.members & other.members)
    star_meet = star(meet)
    if (other.issubset(family) and not star_f.issubset(star_g)) or not star_f.issubset(star_meet):
        fail("antitone", family, other)
    if star_f != star3_f:
        fail("triple_star", family)
    if not (is_downward_closed(star_f) and is_translation_invariant(star_f)):
        fail("downward_closed_translation_invariant", family)
    return report


def check_lemma_ccc(family: SetFamily) -> bool:
    """Both sides of: every proper extension of F by one set shrinks F*, iff F = F**.

    Adding A removes exactly the sets B with B + A = G, so the left side is
    read off the cover table (or the down-set route for larger groups).
    """
    group = family.group
    star_f = star(family)
    rhs = star(star_f) == family
    missing = ((1 << (1 << group.order)) - 1) & ~family.members
    if group.order <= TABLE_ROUTE_MAX_ORDER:
        table = _cover_table(group)
        lhs = all(star_f.members & table[code] for code in iter_set_bits(missing))
    else:
        lhs = all(star(family.with_member(code)) != star_f for code in iter_set_bits(missing))
    return lhs == rhs


@functools.lru_cache(maxsize=None)
def _family_star_table(group: FiniteAbelianGroup) -> np.ndarray:
    """star(F) for every family F of the group, indexed by family code."""
    _check_order(group, FAMILY_TABLE_MAX_ORDER, "the all-families star table")
    table = _cover_table(group)
    families = np.arange(1 << (1 << group.order), dtype=np.int64)
    covered = np.zeros_like(families)
    for code, covering in enumerate(table):
        covered |= np.where((families >> code) & 1 == 1, np.int64(covering), np.int64(0))
    table_star = ((1 << (1 << group.order)) - 1) & ~covered
    table_star.setflags(write=False)
    return table_star


@functools.lru_cache(maxsize=None)
def star_image(group: FiniteAbelianGroup) -> frozenset[int]:
    """Codes of every family of the form A* as A ranges over all families."""
    return frozenset(int(code) for code in np.unique(_family_star_table(group)))


def check_fixed_point_characterization(family: SetFamily) -> bool:
    """F = F** iff F = A* for some family A; true when both sides agree."""
    group = family.group
    _check_order(group, FAMILY_TABLE_MAX_ORDER, "the fixed-point search")
    star_f = star(family)
    lhs = star(star_f) == family
    rhs = family.members in star_image(group)
    return lhs == rhs


def parity_family(m: int) -> SetFamily:
    """Subsets of the evens together with subsets of the odds, over Z_{2m}."""
    if m < 1:
        raise PreconditionError(f"parity family needs m >= 1, got {m}")
    group = FiniteAbelianGroup((2 * m,))
    evens = bits_from_indices(range(0, 2 * m, 2), group.order)
    odds = bits_from_indices(range(1, 2 * m, 2), group.order)
    return SetFamily(group, downset_mask(evens) | downset_mask(odds))


def union_closure_counterexample(family: SetFamily) -> Optional[tuple[GroupSubset, GroupSubset]]:
    """A pair of members whose union leaves the family, or None when it is closed under unions."""
    codes = list(family.codes())
    for i, a in enumerate(codes):
        for b in codes[i + 1:]:
            if not family.members >> (a | b) & 1:
                return GroupSubset(family.group, a), GroupSubset(family.group, b)
    return None


def hat_t(family: SetFamily, t: int, max_order: int = MAX_STAR_ORDER) -> SetFamily:
    """All A such that each member F has some T with |T| <= t and A ⊆ T - F^c.

    Translates are taken of ``-F^c`` so that t = 1 reproduces the witness form
    of star and ``star(F) ⊆ hat_t(F, 1)`` holds in every group. The two
    orientations agree in groups of exponent 2 and for symmetric F.
    """
    group = family.group
    _check_order(group, max_order, "hat_t")
    if not 1 <= t <= group.order:
        raise PreconditionError(f"hat_t needs 1 <= t <= {group.order}, got {t}")
    result = (1 << (1 << group.order)) - 1
    for code in family.codes():
        reflected = group.negate_bits(group.full_bits & ~code)
        reachable = 0
        seen: set[int] = set()
        # the down-set only grows with T, so the largest admissible size suffices
        for translates in itertools.combinations(range(group.order), t):
            cover = group.sumset_bits(reflected, bits_from_indices(translates, group.order))
            if cover in seen:
                continue
            seen.add(cover)
            reachable |= downset_mask(cover)
            if cover == group.full_bits:
                break
        result &= reachable
    return SetFamily(group, result)


def are_orthogonal(left: SetFamily, right: SetFamily) -> bool:
    """True when some I in the left family and J in the right family satisfy I ∪ J = G."""
    _require_same_group(left.group, right.group)
    group = left.group
    for code in left.codes():
        if right.members & upset_mask(group.full_bits & ~code, group.order):
            return True
    return False


def ksigma_hat_witness(f: Sequence[int], window: int) -> bool:
    """Check that two translates of the complement of a box cover the box inside a finite window.

    F is the box ``|x(n)| < f(n)`` in ``[-W, W]^d``; the translates are by the
    zero vector and by ``b(n) = 2 f(n) + 1``.
    """
    bounds = np.asarray(f, dtype=np.int64)
    if bounds.ndim != 1 or bounds.size < 1:
        raise PreconditionError("f must be a non-empty vector of positive integers")
    if (bounds <= 0).any():
        raise PreconditionError(f"every f(n) must be positive, got {list(map(int, bounds))}")
    needed = int((3 * bounds + 1).max())
    if window < needed:
        raise PreconditionError(f"window {window} is too small for the b-shifts; need W >= {needed}")
    if (2 * window + 1) ** bounds.size > MAX_WINDOW_POINTS:
        raise EnumerationTooLargeError(f"window [-{window},{window}]^{bounds.size} has too many points")
    axis = np.arange(-window, window + 1, dtype=np.int64)
    points = np.stack(np.meshgrid(*([axis] * bounds.size), indexing="ij"), axis=-1).reshape(-1, bounds.size)
    shift = 2 * bounds + 1
    in_box = (np.abs(points) < bounds).all(axis=1)
    shifted = points - shift
    shifted_in_window = (np.abs(shifted) <= window).all(axis=1)
    shifted_outside_box = ~(np.abs(shifted) < bounds).all(axis=1)
    covered = ~in_box | (shifted_in_window & shifted_outside_box)
    return bool(covered.all())


# --- seeded generators and serialization ---------------------------------------

def random_family(group: FiniteAbelianGroup, rng: np.random.Generator, max_members: int = 6) -> SetFamily:
    count = int(rng.integers(0, max_members + 1))
    density = float(rng.uniform(0.15, 0.85))
    return SetFamily.from_subsets(group, (random_subset(group, rng, density) for _ in range(count)))


def family_to_hex(family: SetFamily) -> list[str]:
    return family.to_hex_list()


def family_from_hex(group: FiniteAbelianGroup, items: Sequence[str]) -> SetFamily:
    return SetFamily.from_hex_list(group, items)


# --- suites --------------------------------------------------------------------

class StarSuiteResult(BaseModel):
    group: str
    mode: str
    families_checked: int
    laws: LawReport
    lemma_ccc: bool = True
    fixed_point: bool = True
    routes_agree: bool = True
    counterexamples: dict[str, list[str]] = Field(default_factory=dict)

    def all_pass(self) -> bool:
        return self.laws.all_pass() and self.lemma_ccc and self.fixed_point and self.routes_agree

    def checks(self) -> list[tuple[str, bool]]:
        prefix = f"star[{self.group}]"
        named = [(f"{prefix}.{name}", getattr(self.laws, name)) for name in LAW_NAMES]
        named.append((f"{prefix}.lemma_ccc", self.lemma_ccc))
        named.append((f"{prefix}.fixed_point", self.fixed_point))
        named.append((f"{prefix}.routes_agree", self.routes_agree))
        return named


def _first_failure(group: FiniteAbelianGroup, ok: np.ndarray) -> list[str]:
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return []
    return SetFamily(group, int(bad[0])).to_hex_list() or ["<empty>"]


def _exhaustive_star_suite(group: FiniteAbelianGroup) -> StarSuiteResult:
    """Every law over every family of a group of order <= 4, vectorized over family codes."""
    table = _family_star_table(group)
    order = group.order
    codes = 1 << order
    families = np.arange(1 << codes, dtype=np.int64)
    star2 = table[table]
    star3 = table[star2]
    laws = LawReport()

    extensive = (families & ~star2) == 0
    triple = table == star3
    antitone = np.ones(families.shape, dtype=bool)
    duality = np.ones(families.shape, dtype=bool)
    ccc_lhs = np.ones(families.shape, dtype=bool)
    for code in range(codes):
        removed = families & ~np.int64(1 << code)
        star_removed = table[removed]
        antitone &= (table & ~star_removed) == 0
        duality &= ((removed & ~table) == 0) == ((families & ~star_removed) == 0)
        absent = ((families >> code) & 1) == 0
        ccc_lhs &= ~absent | (table[families | np.int64(1 << code)] != table)

    closed = np.ones(families.shape, dtype=bool)
    for element in range(order):
        with_element = table & np.int64(index_bit_mask(order, element))
        closed &= ((with_element >> (1 << element)) & ~table) == 0
    for y in range(1, order):
        moved = np.zeros_like(table)
        for code in range(codes):
            moved |= ((table >> code) & 1) << group.translate_bits(code, y)
        closed &= moved == table

    failures = {
        "duality": duality,
        "extensive": extensive,
        "antitone": antitone,
        "triple_star": triple,
        "downward_closed_translation_invariant": closed,
    }
    for name, ok in failures.items():
        if not ok.all():
            setattr(laws, name, False)
            laws.counterexamples[name] = _first_failure(group, ok)

    fixed = star2 == families
    ccc_ok = ccc_lhs == fixed
    image = np.unique(table)
    fixed_point_ok = fixed == np.isin(families, image)

    # the vectorized table must match the down-set route
    sample = [0, 1, codes, (1 << codes) - 1, int(families[len(families) // 3])]
    routes_agree = all(
        int(table[c]) == _star_by_downsets(SetFamily(group, c)) for c in sample if c < (1 << codes)
    )

    result = StarSuiteResult(
        group=str(group),
        mode="exhaustive",
        families_checked=int(families.size),
        laws=laws,
        lemma_ccc=bool(ccc_ok.all()),
        fixed_point=bool(fixed_point_ok.all()),
        routes_agree=routes_agree,
    )
    if not result.lemma_ccc:
        result.counterexamples["lemma_ccc"] = _first_failure(group, ccc_ok)
    if not result.fixed_point:
        result.counterexamples["fixed_point"] = _first_failure(group, fixed_point_ok)
    return result


def run_star_suite(
    group: FiniteAbelianGroup,
    exhaustive: bool = True,
    rng: Optional[np.random.Generator] = None,
    cases: int = 200,
    progress: bool = False,
) -> StarSuiteResult:
    """Run every star law either over all families (order <= 4) or over seeded random pairs."""
    if exhaustive:
        return _exhaustive_star_suite(group)
    if rng is None:
        raise PreconditionError("a seeded run needs a random generator")
    _check_order(group, TABLE_ROUTE_MAX_ORDER, "the seeded star suite")
    laws = LawReport()
    result = StarSuiteResult(group=str(group), mode="seeded", families_checked=0, laws=laws)
    for _ in tqdm(range(cases), desc=f"star laws {group}", disable=not progress):
        family = random_family(group, rng)
        other = random_family(group, rng)
        laws.merge(check_star_laws(family, other))
        if not check_lemma_ccc(family) and result.lemma_ccc:
            result.lemma_ccc = False
            result.counterexamples["lemma_ccc"] = family.to_hex_list()
        if _star_by_table(family) != _star_by_downsets(family) and result.routes_agree:
            result.routes_agree = False
            result.counterexamples["routes_agree"] = family.to_hex_list()
        if group.order <= FAMILY_TABLE_MAX_ORDER and not check_fixed_point_characterization(family):
            if result.fixed_point:
                result.fixed_point = False
                result.counterexamples["fixed_point"] = family.to_hex_list()
        result.families_checked += 1
    return result
