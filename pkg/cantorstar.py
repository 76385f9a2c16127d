#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# Copyright 2025 Andrew Hundt
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
cantorstar.py

Purpose:
    A batch workbench for the star operation on families of small sets and for
    finite-depth avoidance constructions on the Cantor space.
    - Checks the star laws over finite abelian groups, exhaustively or on seeded samples.
    - Runs the nowhere-dense avoidance construction against a cover and re-checks it.
    - Computes nowhere-density gaps, porosity constants, density bounds and masked escapes.
    - Builds the microscopic re-indexed covers, the explicit zero-mask sets and diagonal points.
    - Runs the acceptance suite.

Output:
    Every subcommand prints one deterministic JSON trace on stdout:
        {command, seed, depth, params, steps, result, checks: [{name, pass}]}
    Failures additionally print {"status", "error_type", "message", "checks"?} on stderr.
    Exit codes: 0 success, 1 a check failed, 2 bad input (usage, format, precondition).
    With --log-file a timestamped JSON run log of every action is written as well.

How to Use:
    cantorstar star laws --group 3 --exhaustive
    cantorstar gms run --trees trees/ --derive-cover --seed 7
    cantorstar porosity escape --preset ternary-blocks --trees porous/
    cantorstar micro counterexample --preset triangular-blocks --depth 30
    cantorstar verify all --depth 14 --seed 20240917

Configuration (highest precedence first):
    command-line options > JSON config file (--config-file) > CANTORSTAR_* environment variables > defaults
"""

import atexit
import datetime
import json
import os
import re
import sys
import traceback
from pathlib import Path
from typing import Any, Callable, List, Literal, Optional, Tuple, Type

import numpy as np
import typer
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing_extensions import Annotated, override

import acceptance
from cantor_core import MAX_LEAF_DEPTH, BinaryWord, ClopenSet, check_leaf_depth, measure, random_word
from closed_trees import (
    ClosedTree,
    escape_porous_trace,
    get_mask,
    is_k_porous_to_depth,
    is_nowhere_dense_to_depth,
    is_upper_porous_trace,
    nd_gap,
    porosity_constant,
    porous_density_bound,
    porous_density_check,
    random_porous_tree,
    verify_escape,
)
from errors import FormatError, PorosityError, PreconditionError, WorkbenchError
from gms_engine import (
    Cover,
    cover_contains,
    derive_cover,
    gms_schedule,
    gms_trace,
    smz_cover_via_translate,
    smz_witness_translate,
    verify_gms_avoidance,
)
from group_core import GroupSubset, parse_group
from micro_covers import (
    diagonal_z,
    free_enum,
    h,
    mask_set_trace,
    mask_trace_measure,
    micro_refine,
    verify_diagonal,
)
from star_ops import (
    family_from_hex,
    family_to_hex,
    parity_family,
    run_star_suite,
    star,
    star_member,
    union_closure_counterexample,
)

CANTORSTAR_VERSION = "0.1.0"


# ==============================================================================
# CONSOLE OUTPUT
# ==============================================================================

_ASCII_FALLBACKS = {"✅": "[OK]", "❌": "[FAIL]", "⚠️": "[WARNING]", "\U0001f4a5": "[CRITICAL]"}


def _make_text_safe_for_console(text: str) -> str:
    encoding = sys.stderr.encoding or "utf-8"
    try:
        text.encode(encoding)
        return text
    except (UnicodeEncodeError, LookupError):
        for emoji, replacement in _ASCII_FALLBACKS.items():
            text = text.replace(emoji, replacement)
        return text


def safe_typer_secho(message: str, **kwargs) -> None:
    """typer.secho with ASCII fallbacks for consoles that cannot print the status symbols."""
    typer.secho(_make_text_safe_for_console(message), **kwargs)


# ==============================================================================
# CONFIGURATION
# ==============================================================================

class WorkbenchSettings(BaseSettings):
    """Resolved settings shared by every subcommand.

    Load order (highest precedence first):
    1. Command-line options (passed to ``__init__``)
    2. JSON config file named by ``config_file``
    3. Environment variables (``CANTORSTAR_SEED=7``)
    4. Field defaults
    """

    model_config = SettingsConfigDict(env_prefix="CANTORSTAR_", extra="forbid")

    config_file: Optional[Path] = None
    seed: int = 20240917
    depth: int = Field(default=12, ge=0, le=62)
    max_enumeration_order: int = Field(default=20, ge=1, le=24)
    max_leaf_depth: int = Field(default=MAX_LEAF_DEPTH, ge=1, le=MAX_LEAF_DEPTH)
    cases: int = Field(default=200, ge=1)
    log_file_name: Optional[str] = None
    verbose: bool = False
    scale: Literal["full", "quick"] = "full"

    @classmethod
    @override
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings,
        env_settings,
        dotenv_settings,
        file_secret_settings,
    ) -> Tuple[Any, ...]:
        """Sources in precedence order: init (CLI), config file, environment.

        The config file path is read from the CLI first, then from the environment.
        """
        config_file_path = init_settings().get("config_file") or env_settings().get("config_file")
        sources: List[Any] = [init_settings]
        if config_file_path:
            path = Path(config_file_path)
            if not path.is_file():
                raise FormatError(f"config file not found: '{path}'")
            try:
                file_settings = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise FormatError(f"could not parse config file '{path}': {e}") from None
            if not isinstance(file_settings, dict):
                raise FormatError(f"config file '{path}' must hold a JSON object")

            def config_source() -> dict:
                return file_settings

            sources.append(config_source)
        sources.append(env_settings)
        return tuple(sources)

    def rng(self, seed: Optional[int] = None) -> np.random.Generator:
        return np.random.default_rng(self.seed if seed is None else seed)


# ==============================================================================
# RUN LOG
# ==============================================================================

_log_data_global: dict = {}
_verbose_console = False

# Log save mode constants for clarity at call sites
CHECKPOINT_SAVE = True   # Quick save on errors (no status updates)
FINAL_SAVE = False       # Complete save with status updates


def _init_log(config: Optional[WorkbenchSettings] = None) -> None:
    global _log_data_global, _verbose_console
    invocation_context: dict = {}
    if sys.argv:
        invocation_context["command_line"] = " ".join(sys.argv)
    if config is not None:
        invocation_context["settings"] = config.model_dump(mode="json")
        _verbose_console = config.verbose
    _log_data_global = {
        "script_name": Path(__file__).name,
        "cantorstar_version": CANTORSTAR_VERSION,
        "start_time_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "end_time_utc": None,
        "overall_status": "IN_PROGRESS",
        "invocation_context": invocation_context,
        "actions": [],
        "final_summary": "",
        "errors_encountered_summary": [],
    }


def _write_log_to_disk(log_file_path: Path, log_data: dict) -> bool:
    """Write the run log with flush and fsync; returns False when the file cannot be written."""
    try:
        with open(log_file_path, "w", encoding="utf-8") as f:
            json.dump(log_data, f, indent=2)
            f.flush()
            os.fsync(f.fileno())
        return True
    except OSError:
        return False


def _log_action(action_name: str, status: str, message: str = "", details: Optional[dict] = None) -> None:
    """Record one user-meaningful event in the run log.

    Status is INFO, SUCCESS, WARN or ERROR. WARN and ERROR are always echoed to
    stderr; INFO and SUCCESS only with --verbose. Never split one event across calls.
    """
    status = status.upper()
    entry = {
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "action": action_name,
        "status": status,
        "message": message,
        "details": details or {},
    }
    _log_data_global.setdefault("actions", []).append(entry)
    if status == "ERROR":
        summary = f"Action: {action_name}, Message: {message}"
        if details and "exception" in details:
            summary += f", Exception: {details['exception']}"
        _log_data_global.setdefault("errors_encountered_summary", []).append(summary)

    if status in ("WARN", "ERROR") or _verbose_console:
        colors = {"INFO": None, "SUCCESS": typer.colors.GREEN, "WARN": typer.colors.YELLOW, "ERROR": typer.colors.RED}
        safe_typer_secho(f"[{status}] {action_name}: {message}", fg=colors.get(status), err=True)


def _save_log(config: WorkbenchSettings, checkpoint: bool = FINAL_SAVE) -> None:
    """Save the run log to ``config.log_file_name`` when one is configured.

    A checkpoint save writes the current state as-is; a final save first fills
    in the end time and overall status.
    """
    if not _log_data_global or not config.log_file_name:
        return
    if not checkpoint:
        _log_data_global["end_time_utc"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        if _log_data_global.get("overall_status") == "IN_PROGRESS":
            if _log_data_global.get("errors_encountered_summary"):
                _log_data_global["overall_status"] = "COMPLETED_WITH_ERRORS"
                _log_data_global["final_summary"] = "Run completed with errors. Check 'errors_encountered_summary'."
            else:
                _log_data_global["overall_status"] = "SUCCESS"
                _log_data_global["final_summary"] = "Run completed successfully."
    log_file_path = Path(config.log_file_name)
    if not _write_log_to_disk(log_file_path, _log_data_global) and not checkpoint:
        safe_typer_secho(f"⚠️ Failed to save JSON log to '{log_file_path}'", fg=typer.colors.YELLOW, err=True)


# ==============================================================================
# TRACES AND FAILURE REPORTING
# ==============================================================================

class TraceCheck(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    passed: bool = Field(alias="pass")


class Trace(BaseModel):
    """The deterministic JSON document every subcommand prints; never holds timestamps."""

    command: str
    seed: int
    depth: int
    params: dict[str, Any] = Field(default_factory=dict)
    steps: list[Any] = Field(default_factory=list)
    result: Any = None
    checks: list[TraceCheck] = Field(default_factory=list)

    def add_check(self, name: str, passed: bool) -> None:
        self.checks.append(TraceCheck(name=name, passed=bool(passed)))

    def failed_checks(self) -> list[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", by_alias=True), indent=2)


def _emit_failure(status: str, error_type: str, message: str, checks: Optional[list[str]] = None) -> None:
    payload: dict[str, Any] = {"status": status, "error_type": error_type, "message": message}
    if checks is not None:
        payload["checks"] = checks
    typer.echo(json.dumps(payload), err=True)


def _execute(ctx: typer.Context, command: str, build: Callable[[WorkbenchSettings], Trace]) -> None:
    """Run one subcommand body, print its trace, and map failures to exit codes."""
    settings: WorkbenchSettings = ctx.obj
    _log_action(command, "INFO", f"Running '{command}'.")
    try:
        trace = build(settings)
        typer.echo(trace.to_json())
        failed = trace.failed_checks()
        if failed:
            message = f"{len(failed)} of {len(trace.checks)} checks failed"
            _log_action(command, "ERROR", message, details={"failed_checks": failed})
            _emit_failure("failed", "CheckFailed", message, failed)
            raise typer.Exit(code=1)
        _log_action(command, "SUCCESS", f"'{command}' finished; {len(trace.checks)} checks passed.")
    except typer.Exit:
        raise
    except WorkbenchError as e:
        _log_action(command, "ERROR", str(e), details={"exception": type(e).__name__})
        _emit_failure("error", type(e).__name__, str(e))
        raise typer.Exit(code=e.exit_code)
    except ValidationError as e:
        _log_action(command, "ERROR", "invalid value", details={"exception": str(e)})
        _emit_failure("error", "ValidationError", str(e))
        raise typer.Exit(code=2)
    except Exception as e:
        _log_action(command, "ERROR", f"unexpected error: {e}", details={"exception": traceback.format_exc()})
        _emit_failure("error", type(e).__name__, str(e))
        raise typer.Exit(code=1)
    finally:
        _save_log(settings, checkpoint=FINAL_SAVE)


# ==============================================================================
# FILE HELPERS
# ==============================================================================

def _read_text(path: Path, what: str) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"cannot read {what} '{path}': {e.strerror}") from None


def _load_tree(path: Path, settings: WorkbenchSettings) -> ClosedTree:
    tree = ClosedTree.from_clopen(ClopenSet.from_text(_read_text(path, "tree file")))
    check_leaf_depth(tree.depth, settings.max_leaf_depth)
    return tree


def _load_trees(directory: Path, settings: WorkbenchSettings) -> list[ClosedTree]:
    """Every ``*.tree`` file of a directory, in file-name order."""
    if not directory.is_dir():
        raise FormatError(f"tree directory not found: '{directory}'")
    paths = sorted(directory.glob("*.tree"))
    _log_action("load_trees", "INFO", f"Loaded {len(paths)} trees from '{directory}'.", details={"files": [p.name for p in paths]})
    return [_load_tree(path, settings) for path in paths]


def _load_words(path: Path, what: str) -> list[BinaryWord]:
    return list(Cover.from_json(_read_text(path, what)).words)


def _load_family(group_text: str, path: Path):
    group = parse_group(group_text)
    try:
        items = json.loads(_read_text(path, "family file"))
    except json.JSONDecodeError as e:
        raise FormatError(f"family file '{path}' is not JSON: {e}") from None
    if not isinstance(items, list):
        raise FormatError("a family file must be a JSON array of hex subset codes")
    return family_from_hex(group, items)


def _parse_int_list(text: Optional[str], what: str) -> Optional[list[int]]:
    if text is None:
        return None
    try:
        return [int(item) for item in text.replace(" ", "").split(",") if item]
    except ValueError:
        raise FormatError(f"{what} must be a comma-separated list of integers, got {text!r}") from None


# ==============================================================================
# TYPER APPLICATION
# ==============================================================================

app = typer.Typer(
    name="cantorstar",
    add_completion=False,
    rich_markup_mode="markdown",
    help="**Star operations, avoidance constructions and microscopic covers at finite depth.**",
    pretty_exceptions_enable=True,
    pretty_exceptions_show_locals=False,
)
star_app = typer.Typer(help="The star operation on families of subsets of a finite abelian group.")
gms_app = typer.Typer(help="Avoiding nowhere dense sets with translates of covers.")
porosity_app = typer.Typer(help="Nowhere-density gaps, porosity and masked escapes.")
micro_app = typer.Typer(help="Microscopic covers, zero-mask sets and diagonal points.")
verify_app = typer.Typer(help="The acceptance suite.")
app.add_typer(star_app, name="star")
app.add_typer(gms_app, name="gms")
app.add_typer(porosity_app, name="porosity")
app.add_typer(micro_app, name="micro")
app.add_typer(verify_app, name="verify")

SeedOption = Annotated[Optional[int], typer.Option("--seed", help="Seed for the random generator (overrides the global seed).")]
DepthOption = Annotated[Optional[int], typer.Option("--depth", help="Working depth (overrides the global depth).")]


# --- star -----------------------------------------------------------------------

@star_app.command("laws")
def star_laws(
    ctx: typer.Context,
    group: Annotated[str, typer.Option("--group", help="Group moduli, e.g. '3', '4' or '2x2'.")] = "3",
    exhaustive: Annotated[bool, typer.Option("--exhaustive", help="Check every family (order <= 4).")] = False,
    seed: SeedOption = None,
    cases: Annotated[Optional[int], typer.Option("--cases", help="Seeded family pairs to check.")] = None,
):
    """Check duality, extensivity, antitonicity, the triple-star law, closure of F*, the ccc lemma and the fixed-point characterization."""
    def build(settings: WorkbenchSettings) -> Trace:
        g = parse_group(group)
        if g.order > settings.max_enumeration_order:
            raise PreconditionError(f"group order {g.order} exceeds max_enumeration_order={settings.max_enumeration_order}")
        n = cases or settings.cases
        result = run_star_suite(g, exhaustive=exhaustive, rng=settings.rng(seed), cases=n, progress=settings.verbose)
        trace = Trace(
            command="star laws",
            seed=settings.seed if seed is None else seed,
            depth=g.order,
            params={"group": str(g), "mode": result.mode, "cases": None if exhaustive else n},
            result=result.model_dump(mode="json"),
        )
        for name, ok in result.checks():
            trace.add_check(name, ok)
        return trace

    _execute(ctx, "star laws", build)


@star_app.command("compute")
def star_compute(
    ctx: typer.Context,
    group: Annotated[str, typer.Option("--group", help="Group moduli, e.g. '3' or '2x2'.")],
    family: Annotated[Path, typer.Option("--family", help="JSON array of hex subset codes.")],
):
    """Print F* and F** for a family read from a file."""
    def build(settings: WorkbenchSettings) -> Trace:
        fam = _load_family(group, family)
        star_f = star(fam, max_order=settings.max_enumeration_order)
        star2_f = star(star_f, max_order=settings.max_enumeration_order)
        trace = Trace(
            command="star compute",
            seed=settings.seed,
            depth=fam.group.order,
            params={"group": str(fam.group), "family": family_to_hex(fam)},
            result={"star": family_to_hex(star_f), "star_star": family_to_hex(star2_f), "fixed_point": star2_f == fam},
        )
        trace.add_check("star.extensive", fam.issubset(star2_f))
        return trace

    _execute(ctx, "star compute", build)


@star_app.command("member")
def star_member_command(
    ctx: typer.Context,
    group: Annotated[str, typer.Option("--group", help="Group moduli, e.g. '3' or '2x2'.")],
    family: Annotated[Path, typer.Option("--family", help="JSON array of hex subset codes.")],
    subset: Annotated[str, typer.Option("--subset", help="Hex code of the subset A.")],
):
    """Decide A in F* and list, per member F, the least y with (y - A) missing F."""
    def build(settings: WorkbenchSettings) -> Trace:
        fam = _load_family(group, family)
        membership = star_member(fam, GroupSubset.from_hex(fam.group, subset))
        return Trace(
            command="star member",
            seed=settings.seed,
            depth=fam.group.order,
            params={"group": str(fam.group), "family": family_to_hex(fam), "subset": subset},
            result=membership.model_dump(mode="json"),
        )

    _execute(ctx, "star member", build)


@star_app.command("parity")
def star_parity(
    ctx: typer.Context,
    m: Annotated[int, typer.Option("--m", help="Half the group order: the family lives over Z_{2m}.")] = 2,
):
    """Verify that the parity family over Z_{2m} is its own star, and show it is not closed under unions."""
    def build(settings: WorkbenchSettings) -> Trace:
        fam = parity_family(m)
        pair = union_closure_counterexample(fam)
        trace = Trace(
            command="star parity",
            seed=settings.seed,
            depth=fam.group.order,
            params={"m": m},
            result={
                "members": len(fam),
                "union_counterexample": None if pair is None else [pair[0].to_hex(), pair[1].to_hex()],
            },
        )
        trace.add_check(f"parity[m={m}].self_star", star(fam, max_order=settings.max_enumeration_order) == fam)
        return trace

    _execute(ctx, "star parity", build)


# --- gms ------------------------------------------------------------------------

@gms_app.command("run")
def gms_run(
    ctx: typer.Context,
    trees: Annotated[Path, typer.Option("--trees", help="Directory of '*.tree' files, used in file-name order.")],
    cover: Annotated[Optional[Path], typer.Option("--cover", help="JSON array of cover words; written here when derived.")] = None,
    derive_cover_flag: Annotated[bool, typer.Option("--derive-cover", help="Draw a seeded cover that fits the gap schedule.")] = False,
    seed: SeedOption = None,
):
    """Build y with (y + [sigma_n]) missing C_n for every n, and re-check it exhaustively."""
    def build(settings: WorkbenchSettings) -> Trace:
        tree_list = _load_trees(trees, settings)
        if derive_cover_flag:
            cover_obj = derive_cover(gms_schedule(tree_list), settings.rng(seed))
            if cover is not None:
                cover.write_text(cover_obj.to_json() + "\n", encoding="utf-8")
                _log_action("write_cover", "SUCCESS", f"Derived cover written to '{cover}'.")
        elif cover is not None:
            cover_obj = Cover.from_json(_read_text(cover, "cover file"))
        else:
            raise FormatError("gms run needs --cover FILE or --derive-cover")
        result = gms_trace(tree_list, cover_obj)
        y = BinaryWord.parse(result.y)
        violations = verify_gms_avoidance(tree_list, cover_obj, y)
        trace = Trace(
            command="gms run",
            seed=settings.seed if seed is None else seed,
            depth=max((t.depth for t in tree_list), default=0),
            params={"trees": len(tree_list), "derived_cover": derive_cover_flag},
            steps=[step.model_dump() for step in result.steps],
            result={"schedule": result.schedule, "y": result.y, "cover": [str(w) for w in cover_obj.words], "violations": violations},
        )
        trace.add_check("gms.avoidance", not violations)
        return trace

    _execute(ctx, "gms run", build)


@gms_app.command("verify")
def gms_verify(
    ctx: typer.Context,
    trees: Annotated[Path, typer.Option("--trees", help="Directory of '*.tree' files.")],
    cover: Annotated[Path, typer.Option("--cover", help="JSON array of cover words.")],
    y: Annotated[Optional[str], typer.Option("--y", help="Candidate word; computed by the construction when omitted.")] = None,
):
    """Check (y XOR x) outside C_n for every n and every leaf x extending sigma_n."""
    def build(settings: WorkbenchSettings) -> Trace:
        tree_list = _load_trees(trees, settings)
        cover_obj = Cover.from_json(_read_text(cover, "cover file"))
        word = BinaryWord.parse(y) if y is not None else BinaryWord.parse(gms_trace(tree_list, cover_obj).y)
        violations = verify_gms_avoidance(tree_list, cover_obj, word)
        trace = Trace(
            command="gms verify",
            seed=settings.seed,
            depth=max((t.depth for t in tree_list), default=0),
            params={"trees": len(tree_list), "y": str(word)},
            steps=violations,
            result={"violations": len(violations)},
        )
        trace.add_check("gms.avoidance", not violations)
        return trace

    _execute(ctx, "gms verify", build)


@gms_app.command("translate")
def gms_translate(
    ctx: typer.Context,
    x_set: Annotated[Path, typer.Option("--x-set", help="Clopen set X ('depth=d' + hex).")],
    closed: Annotated[Optional[Path], typer.Option("--closed", help="Clopen set C; prints the least z with (X + z) missing C.")] = None,
    schedule: Annotated[Optional[str], typer.Option("--schedule", help="Comma-separated lengths; builds a cover of X through one translate.")] = None,
):
    """Find one translate avoiding a closed set, or cover X with words of a prescribed length schedule."""
    def build(settings: WorkbenchSettings) -> Trace:
        xs = ClopenSet.from_text(_read_text(x_set, "clopen file"))
        lengths = _parse_int_list(schedule, "--schedule")
        if (closed is None) == (lengths is None):
            raise FormatError("give exactly one of --closed or --schedule")
        trace = Trace(command="gms translate", seed=settings.seed, depth=xs.depth)
        if closed is not None:
            cs = ClopenSet.from_text(_read_text(closed, "clopen file"))
            z = smz_witness_translate(xs, cs)
            trace.params = {"mode": "witness"}
            trace.result = {"z": "cover" if z is None else str(z)}
            return trace
        found = smz_cover_via_translate(xs, lengths, xs.depth)
        trace.params = {"mode": "cover", "schedule": lengths}
        if found is None:
            trace.result = {"cover": None}
            return trace
        trace.result = {"cover": [str(w) for w in found.words]}
        trace.add_check("cover.contains_x", all(cover_contains(found, leaf) for leaf in xs.iter_leaves()))
        return trace

    _execute(ctx, "gms translate", build)


# --- porosity -------------------------------------------------------------------

@porosity_app.command("gap")
def porosity_gap(
    ctx: typer.Context,
    tree: Annotated[Path, typer.Option("--tree", help="Tree file ('depth=d' + hex).")],
    m: Annotated[Optional[int], typer.Option("--m", help="Level; every level below the depth when omitted.")] = None,
):
    """Nowhere-density gaps of a tree."""
    def build(settings: WorkbenchSettings) -> Trace:
        t = _load_tree(tree, settings)
        levels = [m] if m is not None else list(range(t.depth))
        gaps = {str(level): nd_gap(t, level) for level in levels}
        trace = Trace(command="porosity gap", seed=settings.seed, depth=t.depth, params={"m": m}, result={"gaps": gaps})
        if m is None:
            trace.add_check("nowhere_dense_to_depth", is_nowhere_dense_to_depth(t))
        return trace

    _execute(ctx, "porosity gap", build)


@porosity_app.command("check")
def porosity_check(
    ctx: typer.Context,
    tree: Annotated[Path, typer.Option("--tree", help="Tree file ('depth=d' + hex).")],
    k: Annotated[int, typer.Option("--k", help="Porosity constant to check.")],
):
    """Check that a tree is k-porous to its depth."""
    def build(settings: WorkbenchSettings) -> Trace:
        t = _load_tree(tree, settings)
        trace = Trace(
            command="porosity check",
            seed=settings.seed,
            depth=t.depth,
            params={"k": k},
            result={"porosity_constant": porosity_constant(t)},
        )
        trace.add_check(f"porous[k={k}]", is_k_porous_to_depth(t, k))
        return trace

    _execute(ctx, "porosity check", build)


@porosity_app.command("density")
def porosity_density(
    ctx: typer.Context,
    k: Annotated[int, typer.Option("--k", help="Porosity constant.")],
    tree: Annotated[Optional[Path], typer.Option("--tree", help="Tree file; a seeded k-porous tree is drawn when omitted.")] = None,
    depth: DepthOption = None,
    seed: SeedOption = None,
):
    """Check the leaf density of a k-porous tree against (1 - 2^-k)^floor(depth / k)."""
    def build(settings: WorkbenchSettings) -> Trace:
        if tree is not None:
            t = _load_tree(tree, settings)
        else:
            d = settings.depth if depth is None else depth
            check_leaf_depth(d, settings.max_leaf_depth)
            t = random_porous_tree(d, k, settings.rng(seed))
        ok = porous_density_check(t, k)
        trace = Trace(
            command="porosity density",
            seed=settings.seed if seed is None else seed,
            depth=t.depth,
            params={"k": k, "generated": tree is None},
            result={"measure": str(measure(t)), "bound": str(porous_density_bound(t.depth, k))},
        )
        trace.add_check(f"density[k={k}]", ok)
        return trace

    _execute(ctx, "porosity density", build)


@porosity_app.command("escape")
def porosity_escape(
    ctx: typer.Context,
    preset: Annotated[str, typer.Option("--preset", help="Zero-mask preset: pow2-pairs, triangular-blocks, ternary-blocks or none.")],
    trees: Annotated[Path, typer.Option("--trees", help="Directory of '*.tree' files.")],
    ks: Annotated[Optional[str], typer.Option("--ks", help="Comma-separated porosity constants, one per tree.")] = None,
    depth: DepthOption = None,
):
    """Build a point of the mask set that misses every porous tree."""
    def build(settings: WorkbenchSettings) -> Trace:
        mask = get_mask(preset)
        tree_list = _load_trees(trees, settings)
        constants = _parse_int_list(ks, "--ks")
        if constants is None:
            constants = []
            for j, t in enumerate(tree_list):
                k = porosity_constant(t)
                if k is None:
                    raise PorosityError(f"tree {j} is not porous to its depth")
                constants.append(k)
            # the construction consumes constants in nondecreasing order
            order = sorted(range(len(tree_list)), key=lambda j: constants[j])
            tree_list = [tree_list[j] for j in order]
            constants = [constants[j] for j in order]
        if len(constants) != len(tree_list):
            raise FormatError(f"{len(constants)} constants for {len(tree_list)} trees")
        porous = list(zip(constants, tree_list))
        result = escape_porous_trace(mask, porous, depth)
        problems = verify_escape(mask, porous, result.word)
        trace = Trace(
            command="porosity escape",
            seed=settings.seed,
            depth=result.word.length,
            params={"preset": preset, "ks": constants},
            steps=[{"start": start, "k": k, "prefix": str(prefix)} for start, k, prefix in result.blocks],
            result={"word": str(result.word), "problems": problems},
        )
        trace.add_check("escape.mask_set", mask.admits(result.word))
        trace.add_check("escape.avoids_trees", not problems)
        return trace

    _execute(ctx, "porosity escape", build)


@porosity_app.command("upper")
def porosity_upper(
    ctx: typer.Context,
    preset: Annotated[str, typer.Option("--preset", help="Zero-mask preset.")],
    k: Annotated[int, typer.Option("--k", help="Witness length K.")],
    depth: DepthOption = None,
):
    """Check that every member of the mask set's trace has an upper-porosity witness."""
    def build(settings: WorkbenchSettings) -> Trace:
        d = settings.depth if depth is None else depth
        mask = get_mask(preset)
        trace = Trace(command="porosity upper", seed=settings.seed, depth=d, params={"preset": preset, "k": k})
        trace.add_check(f"upper_porous[{preset}]", is_upper_porous_trace(mask, d, k))
        return trace

    _execute(ctx, "porosity upper", build)


# --- micro ----------------------------------------------------------------------

_LEVEL_FILE = re.compile(r"level-(\d+)\.json")


@micro_app.command("refine")
def micro_refine_command(
    ctx: typer.Context,
    k: Annotated[int, typer.Option("--k", help="Length unit: the result has |sigma_n| = k n.")],
    provider: Annotated[Path, typer.Option("--provider", help="Directory of level-<j>.json cover files.")],
    out: Annotated[Optional[Path], typer.Option("--out", help="Write the assembled words here as JSON.")] = None,
):
    """Interleave the level covers into one cover with lengths k n."""
    def build(settings: WorkbenchSettings) -> Trace:
        if not provider.is_dir():
            raise FormatError(f"provider directory not found: '{provider}'")
        levels = {}
        for path in sorted(provider.iterdir()):
            match = _LEVEL_FILE.fullmatch(path.name)
            if match:
                levels[int(match.group(1))] = _load_words(path, "provider file")
        cover = micro_refine(k, levels)
        if out is not None:
            out.write_text(cover.as_cover().to_json() + "\n", encoding="utf-8")
            _log_action("write_micro_cover", "SUCCESS", f"Assembled cover written to '{out}'.")
        return Trace(
            command="micro refine",
            seed=settings.seed,
            depth=max((w.length for w in cover.words), default=0),
            params={"k": k, "levels": sorted(levels)},
            result={
                "words": [str(w) for w in cover.words],
                "designated": {str(i): list(pair) for i, pair in sorted(cover.designated.items())},
            },
        )

    _execute(ctx, "micro refine", build)


@micro_app.command("counterexample")
def micro_counterexample(
    ctx: typer.Context,
    preset: Annotated[str, typer.Option("--preset", help="Zero-mask preset.")] = "triangular-blocks",
    depth: DepthOption = None,
    out: Annotated[Optional[Path], typer.Option("--out", help="Write the mask set's trace ('depth=d' + hex) here.")] = None,
):
    """Describe the mask set of a preset at a depth: positions, exact measure and index tables."""
    def build(settings: WorkbenchSettings) -> Trace:
        d = settings.depth if depth is None else depth
        mask = get_mask(preset)
        positions = mask.positions(d)
        result: dict[str, Any] = {
            "mask_positions": positions,
            "free_coordinates": d - len(positions),
            "measure": str(mask_trace_measure(mask, d)),
        }
        trace = Trace(command="micro counterexample", seed=settings.seed, depth=d, params={"preset": preset})
        if preset == "triangular-blocks":
            table = []
            index = 1
            while h(index) < d:
                table.append([index, h(index)])
                index += 1
            result["h_table"] = table
            trace.add_check("h_matches_mask", [entry[1] for entry in table] == positions)
        elif preset == "ternary-blocks":
            table = []
            index = 1
            while free_enum(index) < d:
                table.append([index, free_enum(index)])
                index += 1
            result["k_table"] = table
            trace.add_check("k_matches_free", [entry[1] for entry in table] == mask.free_positions(d))
            trace.add_check("k_below_5n", all(kn < 5 * n for n, kn in table))
        if out is not None:
            check_leaf_depth(d, settings.max_leaf_depth)
            out.write_text(mask_set_trace(mask, d).to_text(), encoding="utf-8")
            _log_action("write_mask_trace", "SUCCESS", f"Mask set trace written to '{out}'.")
        trace.result = result
        return trace

    _execute(ctx, "micro counterexample", build)


@micro_app.command("diagonal")
def micro_diagonal(
    ctx: typer.Context,
    preset: Annotated[str, typer.Option("--preset", help="triangular-blocks (|sigma_k| = 3k) or ternary-blocks (|sigma_n| = 5n).")],
    cover: Annotated[Optional[Path], typer.Option("--cover", help="JSON array of cover words; seeded when omitted.")] = None,
    depth: DepthOption = None,
    seed: SeedOption = None,
):
    """Build the diagonal point that escapes a cover and check it exhaustively."""
    def build(settings: WorkbenchSettings) -> Trace:
        d = settings.depth if depth is None else depth
        factor = {"triangular-blocks": 3, "ternary-blocks": 5}.get(preset)
        if factor is None:
            get_mask(preset)
            raise FormatError(f"micro diagonal supports triangular-blocks and ternary-blocks, got {preset!r}")
        if cover is not None:
            sigma = _load_words(cover, "cover file")
        else:
            rng = settings.rng(seed)
            sigma = [random_word(factor * n, rng) for n in range(1, d // factor + 1)]
        z = diagonal_z(preset, sigma, d)
        trace = Trace(
            command="micro diagonal",
            seed=settings.seed if seed is None else seed,
            depth=d,
            params={"preset": preset, "words": len(sigma)},
            result={"z": str(z), "sigma": [str(w) for w in sigma]},
        )
        trace.add_check(f"diagonal[{preset}]", verify_diagonal(preset, sigma, z, d))
        return trace

    _execute(ctx, "micro diagonal", build)


def _acceptance_trace(settings: WorkbenchSettings, suite: str, command: str, depth: Optional[int], seed: Optional[int]) -> Trace:
    d = settings.depth if depth is None else depth

    def report(criterion: acceptance.Criterion, checks) -> None:
        failed = [c.name for c in checks if not c.passed]
        status = "ERROR" if failed else "SUCCESS"
        _log_action(f"criterion_{criterion.number}", status, f"{criterion.title}: {len(checks) - len(failed)}/{len(checks)} checks passed.")

    result = acceptance.run_acceptance(settings.rng(seed), suite, settings.scale, d, settings.verbose, report)
    trace = Trace(
        command=command,
        seed=settings.seed if seed is None else seed,
        depth=d,
        params={"suite": suite, "scale": settings.scale, "criteria": result.criteria},
        steps=[check.model_dump(by_alias=True) for check in result.checks],
    )
    trace.result = {"passed": sum(c.passed for c in result.checks), "total": len(result.checks)}
    for check in result.checks:
        trace.add_check(check.name, check.passed)
    return trace


@micro_app.command("verify")
def micro_verify(ctx: typer.Context, depth: DepthOption = None, seed: SeedOption = None):
    """Index formulas, diagonal points and the measure cross-check."""
    _execute(ctx, "micro verify", lambda settings: _acceptance_trace(settings, "micro", "micro verify", depth, seed))


# --- verify ---------------------------------------------------------------------

@verify_app.command("all")
def verify_all(ctx: typer.Context, depth: DepthOption = None, seed: SeedOption = None):
    """Run every acceptance criterion; exit 0 only when all pass."""
    _execute(ctx, "verify all", lambda settings: _acceptance_trace(settings, "all", "verify all", depth, seed))


@verify_app.command("suite")
def verify_suite(
    ctx: typer.Context,
    name: Annotated[str, typer.Argument(help="One of: all, star, gms, porosity, micro.")],
    depth: DepthOption = None,
    seed: SeedOption = None,
):
    """Run the acceptance criteria of one area."""
    _execute(ctx, f"verify {name}", lambda settings: _acceptance_trace(settings, name, f"verify {name}", depth, seed))


# --- entry point ----------------------------------------------------------------

@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    config_file: Annotated[Optional[Path], typer.Option("--config-file", "-c", help="Path to a JSON config file.")] = None,
    version: Annotated[Optional[bool], typer.Option("--version", help="Show version and exit.", is_eager=True)] = None,
    seed: Annotated[Optional[int], typer.Option("--seed", help="Seed of the single random generator.")] = None,
    depth: Annotated[Optional[int], typer.Option("--depth", help="Default working depth.")] = None,
    cases: Annotated[Optional[int], typer.Option("--cases", help="Default number of seeded cases.")] = None,
    scale: Annotated[Optional[str], typer.Option("--scale", help="Acceptance scale: full or quick.")] = None,
    max_enumeration_order: Annotated[Optional[int], typer.Option("--max-enumeration-order", help="Largest group order for exhaustive enumeration.")] = None,
    max_leaf_depth: Annotated[Optional[int], typer.Option("--max-leaf-depth", help="Largest depth at which leaf vectors are materialized.")] = None,
    log_file_name: Annotated[Optional[str], typer.Option("--log-file", help="Write the JSON run log to this file.")] = None,
    verbose: Annotated[Optional[bool], typer.Option("--verbose", "-v", help="Echo every action and show progress bars.")] = None,
):
    """Resolve the settings once and hand them to the subcommand."""
    if version:
        typer.echo(f"cantorstar version: {CANTORSTAR_VERSION}")
        raise typer.Exit()
    if ctx.resilient_parsing:
        return

    # Filter out None values so config files and environment variables can fill them
    cli_kwargs = {k: v for k, v in ctx.params.items() if v is not None and k != "version"}
    try:
        settings = WorkbenchSettings(**cli_kwargs)
    except ValidationError as e:
        safe_typer_secho("❌ Configuration validation error:", fg=typer.colors.RED, bold=True, err=True)
        for error in e.errors():
            field = " -> ".join(str(loc) for loc in error["loc"])
            safe_typer_secho(f"  • {field}: {error['msg']}", fg=typer.colors.RED, err=True)
        _emit_failure("error", "ValidationError", str(e))
        raise typer.Exit(code=2)
    except WorkbenchError as e:
        _emit_failure("error", type(e).__name__, str(e))
        raise typer.Exit(code=e.exit_code)

    ctx.obj = settings
    _init_log(settings)

    def atexit_callback() -> None:
        """Fallback log saver for unexpected termination."""
        if _log_data_global.get("overall_status") == "IN_PROGRESS":
            _save_log(settings, checkpoint=CHECKPOINT_SAVE)

    atexit.register(atexit_callback)

    if ctx.invoked_subcommand is None:
        typer.echo(ctx.get_help())
        raise typer.Exit()


if __name__ == "__main__":
    try:
        sys.exit(app())
    except Exception as e:
        safe_typer_secho(f"\n\U0001f4a5 A critical error occurred during startup: {e}", fg=typer.colors.RED, bold=True, err=True)
        safe_typer_secho(traceback.format_exc(), fg=typer.colors.RED, err=True)
    sys.exit(1)
