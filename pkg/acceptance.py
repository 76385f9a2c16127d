"""Executable acceptance criteria.

Each criterion returns named checks; ``run_acceptance`` runs a selection of
them with one seeded generator and collects the results. Scale "quick" keeps
the same checks but shrinks the exhaustive ranges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from cantor_core import (
    BinaryWord,
    cylinder,
    intersect,
    measure,
    random_clopen,
    random_word,
    xor_sumset,
    xor_translate_leaves,
)
from closed_trees import (
    ClosedTree,
    escape_porous,
    escape_porous_trace,
    get_mask,
    lemma_xd_gamma,
    nd_gap,
    closed_form_pad_schedule,
    porous_density_bound,
    porous_density_check,
    random_nowhere_dense_tree,
    random_porous_tree,
    schedule_is_feasible,
    verify_escape,
)
from errors import FormatError
from gms_engine import derive_cover, gms_avoid, gms_schedule, lemma_aa_beta, smz_witness_translate, verify_gms_avoidance
from group_core import parse_group
from micro_covers import (
    diagonal_z,
    e2_small_sets_cover,
    find_index_collision,
    free_enum,
    h,
    mask_set_trace,
    mask_trace_measure,
    tail_measure,
    verify_diagonal,
)
from star_ops import parity_family, run_star_suite, star

Scale = Literal["full", "quick"]

MASK_PRESET_NAMES = ("pow2-pairs", "triangular-blocks", "ternary-blocks")
# escape lists that place a 3-letter block, which ternary-blocks only fits in a run of length 3^p
SCHEDULE_ESCAPE_KS = ([3], [1, 3], [1, 2, 3])


class Check(BaseModel):
    """One named pass/fail result; serialized with the key ``pass``."""

    model_config = ConfigDict(populate_by_name=True)

    name: str
    passed: bool = Field(alias="pass")
    detail: str = ""


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    run: Callable[["np.random.Generator", Scale, int, bool], list[Check]]


def _check(name: str, passed: bool, detail: str = "") -> Check:
    return Check(name=name, passed=bool(passed), detail=detail)


# --- star operation -------------------------------------------------------------

def star_law_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    groups = ["3"] if scale == "quick" else ["3", "4", "2x2"]
    checks = []
    for text in groups:
        result = run_star_suite(parse_group(text), exhaustive=True, progress=progress)
        for name, ok in result.checks():
            if name.endswith(".fixed_point"):
                continue
            detail = f"{result.families_checked} families"
            law = name.rsplit(".", 1)[1]
            if not ok and law in result.counterexamples:
                detail = f"counterexample {result.counterexamples[law]}"
            checks.append(_check(name, ok, detail))
    return checks


def fixed_point_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    groups = ["2", "3"] if scale == "quick" else ["2", "3", "4"]
    checks = []
    for text in groups:
        result = run_star_suite(parse_group(text), exhaustive=True, progress=progress)
        detail = f"{result.families_checked} families"
        if not result.fixed_point:
            detail = f"counterexample {result.counterexamples.get('fixed_point')}"
        checks.append(_check(f"fixed_point[{text}]", result.fixed_point, detail))
    return checks


def parity_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    checks = []
    for m in (1, 2, 3, 4):
        family = parity_family(m)
        checks.append(_check(f"parity[m={m}].self_star", star(family) == family, f"{len(family)} members"))
    return checks


# --- avoidance constructions ----------------------------------------------------

def gms_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    instances = 20 if scale == "quick" else 100
    max_depth = max(6, min(depth, 14))
    max_trees = min(4, (max_depth - 2) // 3)
    failures: list[str] = []
    for case in tqdm(range(instances), desc="gms instances", disable=not progress):
        count = int(rng.integers(0, max_trees + 1))
        lower = max(6, 3 * count + 2)
        d = int(rng.integers(lower, max_depth + 1))
        trees = [random_nowhere_dense_tree(d, rng) for _ in range(count)]
        cover = derive_cover(gms_schedule(trees), rng)
        y = gms_avoid(trees, cover)
        violations = verify_gms_avoidance(trees, cover, y)
        if violations:
            failures.append(f"case {case}: {violations[0]}")

    pairs = 200 if scale == "quick" else 1000
    mismatches: list[str] = []
    for case in tqdm(range(pairs), desc="translate witnesses", disable=not progress):
        d = int(rng.integers(1, 7))
        x_set = random_clopen(d, rng, float(rng.uniform(0.05, 0.4)))
        tree = random_clopen(d, rng, float(rng.uniform(0.05, 0.4)))
        found = smz_witness_translate(x_set, tree)
        brute = next(
            (z for z in range(1 << d) if xor_translate_leaves(x_set.leaves, d, z) & tree.leaves == 0),
            None,
        )
        expected = None if brute is None else BinaryWord(d, brute)
        if found != expected:
            mismatches.append(f"case {case}: got {found}, brute force {expected}")
    return [
        _check("gms.avoidance", not failures, failures[0] if failures else f"{instances} instances"),
        _check("smz.translate_brute_force", not mismatches, mismatches[0] if mismatches else f"{pairs} pairs"),
    ]


def _brute_nd_gap(tree: ClosedTree, m: int) -> int:
    d = tree.depth
    for k in range(d - m + 1):
        if all(
            any(not cylinder(BinaryWord(m + k, (s << k) | t), d).leaves & tree.leaves for t in range(1 << k))
            for s in range(1 << m)
        ):
            return k
    return -1


def _disjoint(tree: ClosedTree, left: BinaryWord, right: BinaryWord) -> bool:
    d = tree.depth
    return intersect(xor_sumset(cylinder(left, d), cylinder(right, d)), tree).is_empty()


def lemma_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    cases = 50 if scale == "quick" else 200
    xd_failures: list[str] = []
    gap_failures: list[str] = []
    for case in tqdm(range(cases), desc="gamma lemma", disable=not progress):
        d = int(rng.integers(5, 9))
        tree = random_nowhere_dense_tree(d, rng)
        m = int(rng.integers(0, d - 2))
        gap = nd_gap(tree, m)
        if gap != _brute_nd_gap(tree, m):
            gap_failures.append(f"case {case}: nd_gap={gap}, brute force {_brute_nd_gap(tree, m)}")
        k = min(gap + int(rng.integers(0, 2)), d - m)
        alpha = random_word(m, rng)
        beta = random_word(m + k, rng)
        gamma = lemma_xd_gamma(tree, m, k, alpha, beta)
        if not gamma.extends(alpha) or not _disjoint(tree, gamma, beta):
            xd_failures.append(f"case {case}: m={m} k={k} alpha={alpha} beta={beta} gamma={gamma}")

    aa_failures: list[str] = []
    for case in tqdm(range(cases), desc="beta lemma", disable=not progress):
        k = int(rng.integers(1, 4))
        d = int(rng.integers(max(5, k + 1), 10))
        tree = random_porous_tree(d, k, rng, keep=float(rng.uniform(0.7, 1.0)))
        m = int(rng.integers(0, d - k + 1))
        alpha = random_word(m, rng)
        tau = random_word(m + k, rng)
        beta = lemma_aa_beta(tree, k, alpha, tau)
        if not beta.extends(alpha) or not _disjoint(tree, tau, beta):
            aa_failures.append(f"case {case}: k={k} alpha={alpha} tau={tau} beta={beta}")
    return [
        _check("lemma.gamma_disjoint", not xd_failures, xd_failures[0] if xd_failures else f"{cases} cases"),
        _check("lemma.nd_gap_brute_force", not gap_failures, gap_failures[0] if gap_failures else f"{cases} cases"),
        _check("lemma.beta_disjoint", not aa_failures, aa_failures[0] if aa_failures else f"{cases} cases"),
    ]


# --- porosity -------------------------------------------------------------------

def density_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    checks = []
    ks = (1, 2) if scale == "quick" else (1, 2, 3)
    for k in ks:
        depths = [6 * k] if scale == "quick" else sorted({6 * k, 8 * k, min(10 * k, 24)})
        failures = []
        trees = 0
        for d in depths:
            for _ in range(2):
                tree = random_porous_tree(d, k, rng, keep=float(rng.uniform(0.85, 1.0)))
                trees += 1
                if not porous_density_check(tree, k):
                    failures.append(f"depth {d}: measure {measure(tree)} > {porous_density_bound(d, k)}")
        checks.append(_check(f"porosity.density[k={k}]", not failures, failures[0] if failures else f"{trees} trees"))
    return checks


def escape_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    checks = []
    lists = 3 if scale == "quick" else 6
    d = 22
    for preset in MASK_PRESET_NAMES:
        mask = get_mask(preset)
        failures = []
        for case in range(lists):
            count = int(rng.integers(1, 4))
            ks = sorted(int(k) for k in rng.integers(1, 3, size=count))
            porous = [(k, random_porous_tree(d, k, rng, keep=float(rng.uniform(0.8, 1.0)))) for k in ks]
            word = escape_porous(mask, porous, d)
            problems = verify_escape(mask, porous, word)
            if problems or not mask.admits(word):
                failures.append(f"case {case} ks={ks}: {problems}")
        checks.append(_check(f"escape[{preset}]", not failures, failures[0] if failures else f"{lists} tree lists"))
        late = []
        for ks in SCHEDULE_ESCAPE_KS:
            porous = [(k, random_porous_tree(d, k, rng)) for k in ks]
            trace = escape_porous_trace(mask, porous, d)
            planned = closed_form_pad_schedule(preset, ks)
            problems = verify_escape(mask, porous, trace.word)
            if any(start > planned_start for (start, _, _), (planned_start, _) in zip(trace.blocks, planned)):
                problems.append(f"greedy blocks {[b[0] for b in trace.blocks]} start after {planned}")
            if problems:
                late.append(f"ks={ks}: {problems}")
        checks.append(
            _check(f"escape_schedule[{preset}]", not late, late[0] if late else f"{len(SCHEDULE_ESCAPE_KS)} lists with k=3")
        )
        bad = [ks for ks in ([1], [1, 2, 3], [2, 2, 5], [3, 4, 4, 7]) if not schedule_is_feasible(mask, ks, closed_form_pad_schedule(preset, ks))]
        checks.append(_check(f"pad_schedule[{preset}]", not bad, f"infeasible for {bad[0]}" if bad else "4 constant lists"))
    return checks


# --- microscopic sets -----------------------------------------------------------

def index_formula_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    h_bound = 1000 if scale == "quick" else 10_000
    n_bound = 10_000 if scale == "quick" else 100_000
    refine_n = 1000 if scale == "quick" else 10_000

    triangular = get_mask("triangular-blocks").positions(3 * h_bound)
    h_bad = next((k for k in range(1, h_bound + 1) if h(k) != triangular[k - 1]), None)
    h_bound_bad = next((k for k in range(1, h_bound + 1) if not h(k) < 3 * k), None)

    free = get_mask("ternary-blocks").free_positions(5 * n_bound)
    enum_bad = next((n for n in range(1, n_bound + 1) if free_enum(n) != free[n - 1]), None)
    bound_bad = next((n for n in range(1, n_bound + 1) if not free_enum(n) < 5 * n), None)

    collision = find_index_collision(10, refine_n)
    return [
        _check("index.h_matches_mask", h_bad is None, f"first mismatch at k={h_bad}" if h_bad else f"k <= {h_bound}"),
        _check("index.h_below_3k", h_bound_bad is None, f"fails at k={h_bound_bad}" if h_bound_bad else f"k <= {h_bound}"),
        _check("index.free_enum_matches_mask", enum_bad is None, f"first mismatch at n={enum_bad}" if enum_bad else f"n <= {n_bound}"),
        _check("index.free_enum_below_5n", bound_bad is None, f"fails at n={bound_bad}" if bound_bad else f"n <= {n_bound}"),
        _check(
            "index.refine_disjoint",
            collision is None,
            f"index {collision[0]} from {collision[1]} and {collision[2]}" if collision else f"j <= 10, n <= {refine_n}",
        ),
    ]


def _seeded_words(rng: np.random.Generator, factor: int, count: int) -> list[BinaryWord]:
    return [random_word(factor * n, rng) for n in range(1, count + 1)]


def diagonal_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    covers = 2 if scale == "quick" else 5
    checks = []
    for preset, factor, depths in (
        ("triangular-blocks", 3, (12,) if scale == "quick" else (12, 20, 30)),
        ("ternary-blocks", 5, (20,) if scale == "quick" else (20, 30, 60)),
    ):
        failures = []
        for d in depths:
            for _ in range(covers):
                sigma = _seeded_words(rng, factor, d // factor)
                z = diagonal_z(preset, sigma, d)
                if not verify_diagonal(preset, sigma, z, d):
                    failures.append(f"depth {d}: z={z}")
        checks.append(
            _check(f"diagonal[{preset}]", not failures, failures[0] if failures else f"depths {list(depths)}")
        )
    return checks


def measure_checks(rng: np.random.Generator, scale: Scale, depth: int, progress: bool) -> list[Check]:
    checks = []
    for d in (12, 20, 30):
        exact = mask_trace_measure("triangular-blocks", d)
        blocks = tail_measure(e2_small_sets_cover(d))
        ok = exact == blocks
        if d <= 20:
            ok = ok and measure(mask_set_trace("triangular-blocks", d)) == exact
        checks.append(_check(f"measure.triangular[d={d}]", ok, f"mask {exact}, blocks {blocks}"))
    return checks


CRITERIA: tuple[Criterion, ...] = (
    Criterion(1, "star laws", star_law_checks),
    Criterion(2, "fixed-point characterization", fixed_point_checks),
    Criterion(3, "parity family", parity_checks),
    Criterion(4, "avoidance at depth", gms_checks),
    Criterion(5, "gamma and beta lemmas", lemma_checks),
    Criterion(6, "porous density", density_checks),
    Criterion(7, "masked escapes", escape_checks),
    Criterion(8, "index formulas", index_formula_checks),
    Criterion(9, "diagonal points", diagonal_checks),
    Criterion(10, "measure cross-check", measure_checks),
)

SUITES: dict[str, tuple[int, ...]] = {
    "all": tuple(c.number for c in CRITERIA),
    "star": (1, 2, 3),
    "gms": (4, 5),
    "porosity": (6, 7),
    "micro": (8, 9, 10),
}


class AcceptanceReport(BaseModel):
    suite: str
    scale: str
    criteria: list[int]
    checks: list[Check] = Field(default_factory=list)

    def all_pass(self) -> bool:
        return all(check.passed for check in self.checks)

    def failed(self) -> list[Check]:
        return [check for check in self.checks if not check.passed]


def run_acceptance(
    rng: np.random.Generator,
    suite: str = "all",
    scale: Scale = "full",
    depth: int = 14,
    progress: bool = False,
    on_criterion: Optional[Callable[[Criterion, Sequence[Check]], None]] = None,
) -> AcceptanceReport:
    """Run the criteria of a suite in order; ``on_criterion`` sees each criterion's checks."""
    numbers = SUITES.get(suite)
    if numbers is None:
        raise FormatError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    report = AcceptanceReport(suite=suite, scale=scale, criteria=list(numbers))
    for criterion in CRITERIA:
        if criterion.number not in numbers:
            continue
        checks = criterion.run(rng, scale, depth, progress)
        report.checks.extend(checks)
        if on_criterion is not None:
            on_criterion(criterion, checks)
    return report
