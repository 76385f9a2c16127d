#!/usr/bin/env python3
"""
Tests for cantorstar error handling and exit codes.

Every failure must:
- Exit with 2 for bad input or a violated precondition
- Exit with 1 when a check of the trace fails
- Print one machine-readable failure JSON on stderr naming the error type
"""

import json
import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from cantor_core import BinaryWord, ClopenSet  # noqa: E402
from tests.test_utils import (  # noqa: E402
    WorkspaceFixture,
    executor,
    format_cli_error,
    temp_manager,
    validator,
)

FULL_TREE = ClopenSet.full(4).to_text()
SINGLE_LEAF = ClopenSet.from_words(6, [BinaryWord.zeros(6)]).to_text()


def assert_failure(test_name, args, exit_code, error_type, cwd=None):
    result = executor.run_cantorstar(args, cwd=cwd)
    assert result.returncode == exit_code, format_cli_error(test_name, result)
    failure = validator.parse_failure(result.stderr)
    assert failure["error_type"] == error_type, f"{test_name}: expected {error_type}, got {failure}"
    return result, failure


def test_bad_group():
    with temp_manager.create_temp_workspace(WorkspaceFixture(name="bad_group", files={"f.json": "[]"})) as ws:
        assert_failure("bad group", ["star", "compute", "--group", "abc", "--family", str(ws / "f.json")], 2, "FormatError")
        assert_failure("zero modulus", ["star", "compute", "--group", "0", "--family", str(ws / "f.json")], 2, "FormatError")


def test_group_too_large_for_enumeration():
    _, failure = assert_failure("large group", ["star", "laws", "--group", "21"], 2, "PreconditionError")
    assert "max_enumeration_order" in failure["message"]
    assert_failure("exhaustive order 5", ["star", "laws", "--group", "5", "--exhaustive"], 2, "EnumerationTooLargeError")


def test_unknown_preset():
    assert_failure("unknown preset", ["porosity", "upper", "--preset", "checkerboard", "--k", "2"], 2, "UnknownPresetError")
    assert_failure("diagonal preset", ["micro", "diagonal", "--preset", "pow2-pairs"], 2, "FormatError")


def test_missing_inputs():
    assert_failure("missing trees", ["gms", "run", "--trees", "/nonexistent/trees", "--derive-cover"], 2, "FormatError")
    assert_failure("missing tree", ["porosity", "gap", "--tree", "/nonexistent/a.tree"], 2, "FormatError")
    assert_failure("missing provider", ["micro", "refine", "--k", "1", "--provider", "/nonexistent/levels"], 2, "FormatError")


def test_malformed_files():
    fixture = WorkspaceFixture(
        name="malformed",
        files={
            "bad.tree": "this is not a tree\n",
            "wide.tree": "depth=1\nff\n",
            "family.json": '{"not": "a list"}',
            "x.clopen": SINGLE_LEAF,
        },
    )
    with temp_manager.create_temp_workspace(fixture) as ws:
        assert_failure("bad tree", ["porosity", "gap", "--tree", str(ws / "bad.tree")], 2, "FormatError")
        assert_failure("wide tree", ["porosity", "gap", "--tree", str(ws / "wide.tree")], 2, "FormatError")
        assert_failure(
            "bad family",
            ["star", "compute", "--group", "3", "--family", str(ws / "family.json")],
            2,
            "FormatError",
        )
        assert_failure(
            "both modes",
            ["gms", "translate", "--x-set", str(ws / "x.clopen"), "--closed", str(ws / "x.clopen"), "--schedule", "1,2"],
            2,
            "FormatError",
        )
        assert_failure(
            "bad schedule",
            ["gms", "translate", "--x-set", str(ws / "x.clopen"), "--schedule", "1,two"],
            2,
            "FormatError",
        )


def test_gms_run_needs_a_cover():
    fixture = WorkspaceFixture(name="no_cover", files={"trees/a.tree": SINGLE_LEAF})
    with temp_manager.create_temp_workspace(fixture) as ws:
        _, failure = assert_failure("no cover", ["gms", "run", "--trees", str(ws / "trees")], 2, "FormatError")
        assert "--derive-cover" in failure["message"]


def test_schedule_mismatch():
    """Two single-leaf trees need the schedule [1, 2]; a cover of lengths [1, 3] is rejected."""
    fixture = WorkspaceFixture(
        name="mismatch",
        files={
            "trees/a.tree": SINGLE_LEAF,
            "trees/b.tree": SINGLE_LEAF,
            "cover.json": json.dumps(["0", "011"]),
        },
    )
    with temp_manager.create_temp_workspace(fixture) as ws:
        assert_failure(
            "schedule mismatch",
            ["gms", "run", "--trees", str(ws / "trees"), "--cover", str(ws / "cover.json")],
            2,
            "ScheduleMismatchError",
        )


def test_micro_refine_bad_lengths():
    fixture = WorkspaceFixture(name="refine_bad", files={"levels/level-1.json": json.dumps(["011"])})
    with temp_manager.create_temp_workspace(fixture) as ws:
        assert_failure(
            "refine lengths",
            ["micro", "refine", "--k", "1", "--provider", str(ws / "levels")],
            2,
            "ScheduleMismatchError",
        )


def test_not_nowhere_dense():
    with temp_manager.create_temp_workspace(WorkspaceFixture(name="full", files={"full.tree": FULL_TREE})) as ws:
        assert_failure("full gap", ["porosity", "gap", "--tree", str(ws / "full.tree"), "--m", "0"], 2, "NotNowhereDenseError")
        assert_failure(
            "full escape",
            ["porosity", "escape", "--preset", "none", "--trees", str(ws)],
            2,
            "PorosityError",
        )


def test_failed_check_exits_one_with_trace():
    """A failed check still prints the trace, then the failure JSON names the checks."""
    with temp_manager.create_temp_workspace(WorkspaceFixture(name="check", files={"full.tree": FULL_TREE})) as ws:
        result, failure = assert_failure(
            "failed check",
            ["porosity", "check", "--tree", str(ws / "full.tree"), "--k", "1"],
            1,
            "CheckFailed",
        )
        assert failure["status"] == "failed"
        assert failure["checks"] == ["porous[k=1]"]
        trace = validator.parse_trace(result.stdout)
        assert trace["checks"] == [{"name": "porous[k=1]", "pass": False}]
        assert trace["result"]["porosity_constant"] is None


def test_leaf_depth_limit():
    assert_failure(
        "leaf depth",
        ["--max-leaf-depth", "10", "porosity", "density", "--k", "2", "--depth", "12"],
        2,
        "EnumerationTooLargeError",
    )


def test_errors_are_logged():
    with temp_manager.create_temp_workspace(WorkspaceFixture(name="error_log")) as ws:
        log_path = ws / "run-log.json"
        result = executor.run_cantorstar(["--log-file", str(log_path), "star", "laws", "--group", "21"])
        assert result.returncode == 2, format_cli_error("error log", result)
        log = json.loads(log_path.read_text())
        assert log["overall_status"] == "COMPLETED_WITH_ERRORS"
        assert log["errors_encountered_summary"], "the error should be summarized in the run log"


def main():
    """Run all error handling tests."""
    tests = [
        ("bad_group", test_bad_group),
        ("group_too_large", test_group_too_large_for_enumeration),
        ("unknown_preset", test_unknown_preset),
        ("missing_inputs", test_missing_inputs),
        ("malformed_files", test_malformed_files),
        ("gms_run_needs_cover", test_gms_run_needs_a_cover),
        ("schedule_mismatch", test_schedule_mismatch),
        ("refine_bad_lengths", test_micro_refine_bad_lengths),
        ("not_nowhere_dense", test_not_nowhere_dense),
        ("failed_check", test_failed_check_exits_one_with_trace),
        ("leaf_depth_limit", test_leaf_depth_limit),
        ("errors_logged", test_errors_are_logged),
    ]
    passed = 0
    print("🚀 Running cantorstar error handling tests")
    print("=" * 60)
    for test_name, test_func in tests:
        print(f"\n🧪 Testing: {test_name}")
        try:
            test_func()
            print(f"✅ {test_name} PASSED")
            passed += 1
        except Exception as e:
            print(f"❌ {test_name} FAILED: {e}")
    print("=" * 60)
    print(f"Results: {passed}/{len(tests)} tests passed")
    if passed == len(tests):
        print("🎉 All error handling tests passed!")
        return 0
    print("💥 Some error handling tests failed")
    return 1


if __name__ == "__main__":
    sys.exit(main())
