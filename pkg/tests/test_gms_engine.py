#!/usr/bin/env python3
"""
Tests for the avoidance constructions at finite depth.

Covers:
- Gap schedules and the avoidance recursion, rechecked by exhaustive enumeration
- The translate witness and its cover-or-witness duality against brute force
- The porous step lemma and the porous avoidance recursion
- Cover serialization
"""

import sys
from pathlib import Path

import pytest

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from cantor_core import BinaryWord, ClopenSet, cylinder, intersect, random_clopen, xor_sumset  # noqa: E402
from closed_trees import ClosedTree, random_nowhere_dense_tree, random_porous_tree  # noqa: E402
from errors import FormatError, PorosityError, PreconditionError, ScheduleMismatchError  # noqa: E402
from gms_engine import (  # noqa: E402
    Cover,
    cover_contains,
    derive_cover,
    gms_avoid,
    gms_schedule,
    gms_trace,
    lemma_aa_beta,
    micro_porous_avoid,
    shortlex_word,
    smz_cover_via_translate,
    smz_witness_translate,
    verify_gms_avoidance,
)
from tests.test_utils import seeded_rng, words_of_lengths  # noqa: E402

W = BinaryWord.parse


def singleton_tree(depth):
    return ClosedTree.from_clopen(ClopenSet.from_words(depth, [BinaryWord.zeros(depth)]))


def no_eleven_tree(depth):
    leaves = 0
    for v in range(1 << depth):
        if not v & (v >> 1):
            leaves |= 1 << v
    return ClosedTree(depth, leaves)


def test_schedule_examples():
    assert gms_schedule([singleton_tree(6)]) == [1]
    assert gms_schedule([singleton_tree(6), singleton_tree(6)]) == [1, 2]
    assert gms_schedule([]) == []


def test_schedule_strictly_increasing_on_seeded_trees():
    rng = seeded_rng(12)
    trees = [random_nowhere_dense_tree(12, rng) for _ in range(3)]
    schedule = gms_schedule(trees)
    assert all(a < b for a, b in zip(schedule, schedule[1:])), f"schedule {schedule} is not strictly increasing"


def test_avoid_single_leaf():
    """Against {0^d} with sigma_0 = 0, y starts with 1 and y + [0] misses 0^d."""
    trees = [singleton_tree(4)]
    cover = Cover.from_words([W("0")])
    y = gms_avoid(trees, cover)
    assert str(y) == "1"
    assert verify_gms_avoidance(trees, cover, y) == []


def test_avoid_seeded_instances_rechecked():
    rng = seeded_rng(13)
    for _ in range(20):
        trees = [random_nowhere_dense_tree(12, rng) for _ in range(3)]
        cover = derive_cover(gms_schedule(trees), rng)
        trace = gms_trace(trees, cover)
        y = BinaryWord.parse(trace.y)
        assert [step.n for step in trace.steps] == [0, 1, 2]
        assert verify_gms_avoidance(trees, cover, y) == [], "avoidance recheck found violations"


def test_avoid_rejects_wrong_schedule():
    trees = [singleton_tree(6), singleton_tree(6)]
    with pytest.raises(ScheduleMismatchError):
        gms_avoid(trees, Cover.from_words([W("0"), W("011")]))
    with pytest.raises(ScheduleMismatchError):
        verify_gms_avoidance(trees, Cover.from_words([W("0")]), W("1"))


def test_verify_reports_a_bad_point():
    trees = [singleton_tree(4)]
    cover = Cover.from_words([W("0")])
    violations = verify_gms_avoidance(trees, cover, W("0"))
    assert len(violations) == 1 and "step 0" in violations[0]


def test_witness_translate_edges():
    tree = ClopenSet.from_words(4, [W("0110")])
    assert smz_witness_translate(ClopenSet.empty(4), tree) == BinaryWord.zeros(4)
    assert smz_witness_translate(ClopenSet.full(4), tree) is None


def test_witness_translate_matches_brute_force():
    rng = seeded_rng(14)
    for _ in range(200):
        d = int(rng.integers(1, 7))
        x_set = random_clopen(d, rng, float(rng.uniform(0.05, 0.4)))
        tree = random_clopen(d, rng, float(rng.uniform(0.05, 0.4)))
        brute = [z for z in range(1 << d) if not any((x ^ z) in set(tree.leaf_indices()) for x in x_set.leaf_indices())]
        found = smz_witness_translate(x_set, tree)
        if brute:
            assert found == BinaryWord(d, brute[0]), f"expected least witness {brute[0]}, got {found}"
        else:
            assert found is None
            assert xor_sumset(x_set, tree).is_full(), "no witness must mean the sumset is the whole space"


def test_shortlex_words():
    assert [str(shortlex_word(n)) for n in range(7)] == ["", "0", "1", "00", "01", "10", "11"]


def test_cover_via_translate_covers_x():
    rng = seeded_rng(15)
    built = 0
    for _ in range(30):
        x_set = ClopenSet.from_words(8, words_of_lengths([8, 8], rng))
        cover = smz_cover_via_translate(x_set, [1, 2, 3, 4, 5, 6], 8)
        if cover is None:
            continue
        built += 1
        assert all(cover_contains(cover, w) for w in x_set.iter_leaves()), "cover misses a point of X"
    assert built > 0, "no sparse seeded set produced a cover"
    with pytest.raises(PreconditionError):
        smz_cover_via_translate(ClopenSet.empty(4), [5], 4)


def test_lemma_beta():
    tree = no_eleven_tree(6)
    alpha = W("0")
    tau = W("000")
    beta = lemma_aa_beta(tree, 2, alpha, tau)
    assert beta.extends(alpha) and beta.length == 3
    shifted = xor_sumset(cylinder(tau, 6), cylinder(beta, 6))
    assert intersect(shifted, tree).is_empty()
    assert str(beta) == "011", "the least escape below 0 is 011"
    assert lemma_aa_beta(ClosedTree(4, 0), 1, W("10"), W("101")) == W("101")
    with pytest.raises(PreconditionError):
        lemma_aa_beta(tree, 2, alpha, W("00"))
    with pytest.raises(PorosityError):
        lemma_aa_beta(tree, 1, alpha, W("00"))


def test_micro_porous_avoid():
    tree = no_eleven_tree(6)
    zeros = Cover.from_words([BinaryWord.zeros(2), BinaryWord.zeros(4), BinaryWord.zeros(6)])
    y = micro_porous_avoid(tree, 2, zeros)
    assert verify_gms_avoidance([tree] * 3, zeros, y) == []

    rng = seeded_rng(16)
    for _ in range(10):
        porous = random_porous_tree(8, 2, rng)
        cover = Cover.from_words(words_of_lengths([2, 4, 6, 8], rng))
        y = micro_porous_avoid(porous, 2, cover)
        assert verify_gms_avoidance([porous] * 4, cover, y) == []

    empty_cover = Cover.from_words([BinaryWord.zeros(1), BinaryWord.zeros(2)])
    assert micro_porous_avoid(ClosedTree(4, 0), 1, empty_cover) == BinaryWord.zeros(2)
    with pytest.raises(ScheduleMismatchError):
        micro_porous_avoid(tree, 2, Cover.from_words([W("0")]))


def test_cover_json():
    cover = Cover.from_words([W("0"), W("011")])
    assert cover.to_json() == '["0", "011"]'
    assert Cover.from_json(cover.to_json()) == cover
    for bad in ("not json", '{"a": 1}', '["01", 3]', '["012"]'):
        with pytest.raises(FormatError):
            Cover.from_json(bad)
    with pytest.raises(PreconditionError):
        Cover((1, 2), (W("0"), W("0")))


def main():
    """Run all avoidance tests."""
    tests = [
        ("schedule_examples", test_schedule_examples),
        ("schedule_increasing", test_schedule_strictly_increasing_on_seeded_trees),
        ("avoid_single_leaf", test_avoid_single_leaf),
        ("avoid_seeded", test_avoid_seeded_instances_rechecked),
        ("avoid_wrong_schedule", test_avoid_rejects_wrong_schedule),
        ("verify_bad_point", test_verify_reports_a_bad_point),
        ("witness_edges", test_witness_translate_edges),
        ("witness_brute_force", test_witness_translate_matches_brute_force),
        ("shortlex", test_shortlex_words),
        ("cover_via_translate", test_cover_via_translate_covers_x),
        ("lemma_beta", test_lemma_beta),
        ("micro_porous_avoid", test_micro_porous_avoid),
        ("cover_json", test_cover_json),
    ]
    passed = 0
    print("🚀 Running cantorstar avoidance tests")
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
