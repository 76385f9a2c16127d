#!/usr/bin/env python3
"""
Tests for finite abelian groups, subsets and Minkowski sums.

Covers:
- Element encoding (first modulus most significant) and group parsing
- Sumsets, translates and the cover predicate against brute force
- Hex serialization of subsets and families
- Group mismatch errors
"""

import sys
from pathlib import Path
from unittest.mock import patch

import pytest
from hypothesis import given, settings, strategies as st

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from errors import ConsistencyError, FormatError, GroupMismatchError, PreconditionError, WorkbenchError  # noqa: E402
from group_core import (  # noqa: E402
    FiniteAbelianGroup,
    GroupElement,
    GroupSubset,
    SetFamily,
    avoiding_translate,
    bits_from_indices,
    index_bit_mask,
    is_cover,
    iter_set_bits,
    parse_group,
    random_subset,
    sumset,
    translate,
)
from tests.test_utils import brute_sumset, seeded_rng  # noqa: E402

Z2 = FiniteAbelianGroup((2,))
Z3 = FiniteAbelianGroup((3,))
Z4 = FiniteAbelianGroup((4,))
Z2xZ2 = FiniteAbelianGroup((2, 2))


def subset(group, *members):
    return GroupSubset.from_members(group, members)


def test_sumset_examples():
    """Singleton sums translate, the empty set absorbs, and a subgroup is closed."""
    assert sumset(subset(Z4, 1), subset(Z4, 0, 2)).members() == [1, 3]
    assert sumset(subset(Z4), GroupSubset.full(Z4)).is_empty()
    diagonal = subset(Z2xZ2, Z2xZ2.encode((0, 0)), Z2xZ2.encode((1, 1)))
    assert sumset(diagonal, diagonal) == diagonal, "the diagonal of Z2 x Z2 is a subgroup"


def test_translate_examples():
    """Translates in Z4 and Z3, and translation by the identity."""
    assert translate(subset(Z4, 0, 1), 2).members() == [2, 3]
    assert translate(subset(Z3, 0, 2), 1).members() == [0, 1]
    a = subset(Z2xZ2, 1, 2)
    assert translate(a, Z2xZ2.identity) == a


def test_is_cover_examples():
    """The full set covers, a proper sumset does not, and {0,1}+{0,2} reaches all of Z4."""
    assert is_cover(subset(Z2, 0, 1), subset(Z2, 0))
    assert not is_cover(subset(Z4, 0), subset(Z4, 0, 2))
    assert is_cover(subset(Z4, 0, 1), subset(Z4, 0, 2))


def test_element_encoding_first_modulus_most_significant():
    """(1,1) in Z2 x Z2 has index 3 and (1,0) has index 2."""
    assert Z2xZ2.encode((1, 1)) == 3
    assert Z2xZ2.encode((1, 0)) == 2
    assert Z2xZ2.decode(2) == (1, 0)
    g = FiniteAbelianGroup((2, 3))
    for index in range(g.order):
        assert g.encode(g.decode(index)) == index


def test_group_elements_add_and_negate():
    g = FiniteAbelianGroup((3, 4))
    x = GroupElement(g, g.encode((2, 3)))
    y = GroupElement(g, g.encode((2, 2)))
    assert (x + y).digits == (1, 1)
    assert (x + -x) == g.identity
    with pytest.raises(PreconditionError):
        GroupElement(g, 12)


def test_parse_group():
    """'3' is Z3, '2x2' is Z2 x Z2, anything else is a format error."""
    assert parse_group("3") == Z3
    assert parse_group("2x2") == Z2xZ2
    assert str(parse_group(" 2 x 4 ")) == "2x4"
    for bad in ("", "x", "three", "1", "2x0"):
        with pytest.raises(FormatError):
            parse_group(bad)


def test_avoiding_translate_is_least_witness():
    """The witness is the least y, and None exactly when the sumset is the whole group."""
    a = subset(Z4, 0)
    assert avoiding_translate(a, subset(Z4, 0, 2)) == 1
    assert avoiding_translate(subset(Z4, 0, 1), subset(Z4, 0, 2)) is None


def test_avoiding_translate_reflects_the_subset():
    """In Z6, A = F = {0,1,3} has A + A = {0,...,4}, so 5 is the witness and A does not cover itself."""
    z6 = FiniteAbelianGroup((6,))
    a = subset(z6, 0, 1, 3)
    assert avoiding_translate(a, a) == 5
    assert not is_cover(a, a)
    # 5 - A = {5, 4, 2} misses F, while A + 5 = {5, 0, 2} does not
    assert not translate(subset(z6, 0, 1, 3), 5).intersection(a).is_empty()


def test_negate_bits():
    z6 = FiniteAbelianGroup((6,))
    assert z6.negate_bits(subset(z6, 0, 1, 3).bits) == subset(z6, 0, 5, 3).bits
    z2xz4 = FiniteAbelianGroup((2, 4))
    for bits in range(1 << z2xz4.order):
        assert z2xz4.negate_bits(z2xz4.negate_bits(bits)) == bits
        expected = {z2xz4.negate(a) for a in iter_set_bits(bits)}
        assert set(iter_set_bits(z2xz4.negate_bits(bits))) == expected


def test_witness_equivalence_is_exhaustive_up_to_order_six():
    """For every pair (A, F): the witness is None exactly when A + F = G, else the least y outside A + F."""
    groups = [FiniteAbelianGroup((n,)) for n in range(2, 7)] + [Z2xZ2, FiniteAbelianGroup((2, 3))]
    for group in groups:
        for a_bits in range(1 << group.order):
            for f_bits in range(1 << group.order):
                a, f = GroupSubset(group, a_bits), GroupSubset(group, f_bits)
                total = sumset(a, f)
                y = avoiding_translate(a, f)
                if y is None:
                    assert total.is_full(), f"no witness but {a} + {f} misses an element in {group}"
                    continue
                assert y not in total, f"witness {y} lies in {a} + {f} in {group}"
                assert all(z in total for z in range(y)), f"witness {y} is not least for {a}, {f} in {group}"
                assert is_cover(a, f) == total.is_full()


def test_cover_disagreement_raises_consistency_error():
    a = subset(Z4, 0, 1)
    b = subset(Z4, 0, 2)
    with patch("group_core.avoiding_translate", return_value=0):
        with pytest.raises(ConsistencyError) as excinfo:
            is_cover(a, b)
    assert isinstance(excinfo.value, WorkbenchError)
    assert excinfo.value.exit_code == 1


def test_sumset_matches_brute_force_on_seeded_subsets():
    rng = seeded_rng(1)
    for group in (Z3, Z4, Z2xZ2, FiniteAbelianGroup((2, 3)), FiniteAbelianGroup((2, 2, 2))):
        for _ in range(50):
            a = random_subset(group, rng)
            b = random_subset(group, rng)
            expected = brute_sumset(group, set(a.members()), set(b.members()))
            assert set(sumset(a, b).members()) == expected, f"sumset mismatch in {group} for {a} + {b}"
            is_cover(a, b)  # raises when the two cover routes disagree


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 63), st.integers(0, 63))
def test_sumset_commutes_in_z6(a_bits, b_bits):
    """A + B = B + A in Z6."""
    g = FiniteAbelianGroup((6,))
    a, b = GroupSubset(g, a_bits), GroupSubset(g, b_bits)
    assert sumset(a, b) == sumset(b, a)


def test_subset_hex_round_trip_and_padding():
    """Bit i is element i; the hex is zero padded to cover the group order."""
    s = subset(FiniteAbelianGroup((8,)), 0, 4)
    assert s.to_hex() == "11"
    assert GroupSubset.from_hex(s.group, "11") == s
    with pytest.raises(FormatError):
        GroupSubset.from_hex(Z3, "f")
    with pytest.raises(FormatError):
        GroupSubset.from_hex(Z3, "zz")


def test_family_codes_and_hex_list():
    family = SetFamily.from_subsets(Z2, [subset(Z2), subset(Z2, 1)])
    assert list(family.codes()) == [0, 2]
    assert family.to_hex_list() == ["0", "2"]
    assert SetFamily.from_hex_list(Z2, ["0", "2"]) == family
    assert subset(Z2, 1) in family and subset(Z2, 0) not in family
    with pytest.raises(FormatError):
        SetFamily.from_hex_list(Z2, "02")


def test_mixed_groups_raise_mismatch():
    with pytest.raises(GroupMismatchError):
        sumset(subset(Z4, 0), subset(Z2xZ2, 0))
    with pytest.raises(GroupMismatchError):
        SetFamily.empty(Z4).issubset(SetFamily.empty(Z2xZ2))


def test_bit_helpers():
    assert list(iter_set_bits(0)) == []
    assert list(iter_set_bits(0b101001)) == [0, 3, 5]
    assert bits_from_indices([0, 9], 10) == (1 << 9) | 1
    with pytest.raises(PreconditionError):
        bits_from_indices([10], 10)
    # indices 0..7 with bit 1 set: 2, 3, 6, 7
    assert list(iter_set_bits(index_bit_mask(3, 1))) == [2, 3, 6, 7]


def main():
    """Run all group tests."""
    tests = [
        ("sumset_examples", test_sumset_examples),
        ("translate_examples", test_translate_examples),
        ("is_cover_examples", test_is_cover_examples),
        ("element_encoding", test_element_encoding_first_modulus_most_significant),
        ("group_elements", test_group_elements_add_and_negate),
        ("parse_group", test_parse_group),
        ("avoiding_translate", test_avoiding_translate_is_least_witness),
        ("avoiding_translate_reflects", test_avoiding_translate_reflects_the_subset),
        ("negate_bits", test_negate_bits),
        ("witness_equivalence", test_witness_equivalence_is_exhaustive_up_to_order_six),
        ("consistency_error", test_cover_disagreement_raises_consistency_error),
        ("sumset_brute_force", test_sumset_matches_brute_force_on_seeded_subsets),
        ("sumset_commutes", test_sumset_commutes_in_z6),
        ("subset_hex", test_subset_hex_round_trip_and_padding),
        ("family_codes", test_family_codes_and_hex_list),
        ("group_mismatch", test_mixed_groups_raise_mismatch),
        ("bit_helpers", test_bit_helpers),
    ]
    passed = 0
    print("🚀 Running cantorstar group tests")
    print("=" * 60)
    for test_name, test_func in tests:
        try:
            test_func()
            print(f"✅ {test_name} PASSED")
            passed += 1
        except Exception as e:
            print(f"❌ {test_name} FAILED: {e}")
    print("=" * 60)
    print(f"Results: {passed}/{len(tests)} tests passed")
    return 0 if passed == len(tests) else 1


if __name__ == "__main__":
    sys.exit(main())
