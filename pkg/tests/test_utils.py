#!/usr/bin/env python3
"""
Shared testing utilities for the cantorstar test suite.

Provides reusable infrastructure for:
- Temporary workspace management with automatic cleanup
- Brute-force oracles written straight from the definitions, independent of the fast routes
- Seeded generators for families, words and trees
- A subprocess executor for the cantorstar CLI and validators for its JSON traces
"""

import json
import os
import shutil
import subprocess
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

# Add parent directory to path FIRST so the modules can be imported
sys.path.insert(0, str(Path(__file__).parent.parent))

from cantor_core import BinaryWord, ClopenSet  # noqa: E402
from closed_trees import ClosedTree  # noqa: E402
from group_core import FiniteAbelianGroup, SetFamily  # noqa: E402

TEST_SEED = 20240917


# --- brute-force oracles ---------------------------------------------------------

def brute_sumset(group: FiniteAbelianGroup, a: set[int], b: set[int]) -> set[int]:
    return {group.add(x, y) for x in a for y in b}


def brute_star(family: SetFamily) -> set[int]:
    """Codes A with A + F != G for every member F, by direct enumeration."""
    group = family.group
    members = [set(s.members()) for s in family.subsets()]
    everything = set(range(group.order))
    result = set()
    for code in range(1 << group.order):
        a = {i for i in range(group.order) if code >> i & 1}
        if all(brute_sumset(group, a, f) != everything for f in members):
            result.add(code)
    return result


def brute_nd_gap(tree: ClosedTree, m: int) -> int:
    """Least k such that every level-m node has a k-letter extension whose leaves all miss the tree."""
    d = tree.depth
    leaves = set(tree.leaf_indices())
    for k in range(d - m + 1):
        ok = True
        for s in range(1 << m):
            found = False
            for t in range(1 << k):
                node = (s << k) | t
                span = d - m - k
                if not any(((node << span) | r) in leaves for r in range(1 << span)):
                    found = True
                    break
            if not found:
                ok = False
                break
        if ok:
            return k
    return -1


def brute_xor_sumset(a: ClopenSet, b: ClopenSet) -> set[int]:
    assert a.depth == b.depth, "brute_xor_sumset needs equal depths"
    return {x ^ y for x in a.leaf_indices() for y in b.leaf_indices()}


# --- seeded generators -----------------------------------------------------------

def seeded_rng(offset: int = 0) -> np.random.Generator:
    return np.random.default_rng(TEST_SEED + offset)


def words_of_lengths(lengths: List[int], rng: np.random.Generator) -> List[BinaryWord]:
    return [BinaryWord(k, int(rng.integers(0, 1 << k))) if k else BinaryWord(0, 0) for k in lengths]


def parity_tree(depth: int, parity: int = 0) -> ClosedTree:
    """Leaves with an even (or odd) number of ones."""
    leaves = 0
    for v in range(1 << depth):
        if bin(v).count("1") % 2 == parity:
            leaves |= 1 << v
    return ClosedTree(depth, leaves)


# --- temporary workspaces --------------------------------------------------------

@dataclass
class WorkspaceFixture:
    """Files to lay out in a temporary directory before running the CLI."""
    name: str
    files: Dict[str, str] = field(default_factory=dict)  # filepath -> content
    directories: List[str] = field(default_factory=list)


class TempWorkspaceManager:
    """Manages temporary workspace directories with automatic cleanup."""

    def __init__(self):
        self.temp_dirs: List[Path] = []

    @contextmanager
    def create_temp_workspace(self, fixture: WorkspaceFixture):
        temp_dir = Path(tempfile.mkdtemp(prefix=f"cantorstar_test_{fixture.name}_"))
        self.temp_dirs.append(temp_dir)
        try:
            for directory in fixture.directories:
                (temp_dir / directory).mkdir(parents=True, exist_ok=True)
            for filepath, content in fixture.files.items():
                file_path = temp_dir / filepath
                file_path.parent.mkdir(parents=True, exist_ok=True)
                file_path.write_text(content, encoding="utf-8")
            yield temp_dir
        finally:
            shutil.rmtree(temp_dir, ignore_errors=True)
            if temp_dir in self.temp_dirs:
                self.temp_dirs.remove(temp_dir)

    def cleanup_all(self):
        for temp_dir in self.temp_dirs[:]:
            shutil.rmtree(temp_dir, ignore_errors=True)
        self.temp_dirs.clear()

    def __del__(self):
        self.cleanup_all()


# --- CLI execution ---------------------------------------------------------------

class CantorstarCommandExecutor:
    """Runs cantorstar.py in a subprocess with a clean CANTORSTAR_* environment."""

    def __init__(self, script_path: Optional[Path] = None):
        if script_path is None:
            script_path = Path(__file__).parent.parent / "cantorstar.py"
        self.script_path = script_path

    def run_cantorstar(
        self,
        args: List[str],
        cwd: Optional[Path] = None,
        env: Optional[Dict[str, str]] = None,
        timeout: Optional[int] = None,
    ) -> subprocess.CompletedProcess:
        """Timeout defaults to the CANTORSTAR_TEST_TIMEOUT env var or 300 seconds."""
        if timeout is None:
            timeout = int(os.environ.get("CANTORSTAR_TEST_TIMEOUT", "300"))
        process_env = {k: v for k, v in os.environ.items() if not k.startswith("CANTORSTAR_")}
        process_env["PYTHONIOENCODING"] = "utf-8"
        if env:
            process_env.update(env)
        cmd = [sys.executable, str(self.script_path), *args]
        return subprocess.run(
            cmd,
            capture_output=True,
            text=True,
            cwd=str(cwd) if cwd else None,
            timeout=timeout,
            env=process_env,
        )


def format_cli_error(test_name: str, result: subprocess.CompletedProcess) -> str:
    return "\n".join([
        f"{test_name}: exit code {result.returncode}",
        f"Command: {' '.join(str(a) for a in result.args)}",
        f"STDOUT (last 1000 chars): {result.stdout[-1000:]}",
        f"STDERR (last 1000 chars): {result.stderr[-1000:]}",
    ])


class TraceValidator:
    """Parses and validates the JSON documents the CLI prints."""

    TRACE_KEYS = {"command", "seed", "depth", "params", "steps", "result", "checks"}

    @staticmethod
    def parse_trace(stdout: str) -> Dict[str, Any]:
        trace = json.loads(stdout)
        missing = TraceValidator.TRACE_KEYS - set(trace)
        assert not missing, f"trace is missing keys {sorted(missing)}: {stdout[:300]}"
        for check in trace["checks"]:
            assert set(check) == {"name", "pass"}, f"check entries must be {{name, pass}}, got {check}"
        return trace

    @staticmethod
    def parse_failure(stderr: str) -> Dict[str, Any]:
        """The failure JSON is the last line of stderr that parses as a JSON object."""
        for line in reversed(stderr.strip().splitlines()):
            line = line.strip()
            if line.startswith("{"):
                try:
                    payload = json.loads(line)
                except json.JSONDecodeError:
                    continue
                assert payload.get("status") in ("error", "failed"), f"unexpected status in {payload}"
                assert "error_type" in payload and "message" in payload, f"incomplete failure JSON {payload}"
                return payload
        raise AssertionError(f"no failure JSON on stderr: {stderr[-500:]}")


# Global instances for easy access
temp_manager = TempWorkspaceManager()
executor = CantorstarCommandExecutor()
validator = TraceValidator()
