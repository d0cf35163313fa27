"""Migration threshold table: offline estimation and online update.

A threshold is the largest x86 load (runnable-process count) at which
staying local is still no worse than the calibrated migration total; the
scheduler migrates only when the observed load strictly exceeds it.
Estimation raises the modeled load until local execution exceeds each
migration scenario's end-to-end time.  At run time, completion reports
refine the table: an x86 completion that turned out slower than a
migration scenario lowers that scenario's threshold to the observed
load, while a migrated completion that turned out slower than local
execution raises the corresponding threshold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Callable

from .model import FunctionProfile, PlatformSpec, SystemState, TargetKind, exec_time

CostModel = Callable[[FunctionProfile, TargetKind, SystemState, PlatformSpec], float]

DEFAULT_MAX_LOAD = 200


class TableFormatError(Exception):
    """A threshold table file could not be parsed."""


@dataclass(frozen=True)
class ThresholdEntry:
    """Per-application thresholds plus the last observed per-target times."""

    app_id: str
    kernel_id: str
    fpga_thr: int
    arm_thr: int
    last_x86_exec: float
    last_arm_exec: float
    last_fpga_exec: float

    def __post_init__(self):
        if self.fpga_thr < 0 or self.arm_thr < 0:
            raise ValueError(f"{self.app_id}: thresholds must be >= 0")
        for name in ("last_x86_exec", "last_arm_exec", "last_fpga_exec"):
            if getattr(self, name) < 0:
                raise ValueError(f"{self.app_id}: {name} must be >= 0")


@dataclass(frozen=True)
class ExecutionRecord:
    """One completed function execution as reported by a client."""

    app_id: str
    target: TargetKind
    exec_time_ms: float
    load_at_start: int

    def __post_init__(self):
        if self.exec_time_ms <= 0:
            raise ValueError("exec_time_ms must be > 0")
        if self.load_at_start < 0:
            raise ValueError("load_at_start must be >= 0")


def estimate_thresholds(
    profile: FunctionProfile,
    spec: PlatformSpec,
    cost_model: CostModel = exec_time,
    max_load: int = DEFAULT_MAX_LOAD,
) -> ThresholdEntry:
    """Calibrate thresholds for one profile against the cost model.

    Returns the largest load in ``[0, max_load]`` at which the modeled
    x86 time still does not exceed the migration total, independently for
    FPGA and ARM.  0 means the migration target is faster even against an
    idle x86; ``max_load`` means the model never favors migrating.
    """
    if max_load < 1:
        raise ValueError("max_load must be >= 1")

    def largest_ok(budget_ms: float) -> int:
        best = 0
        for n in range(0, max_load + 1):
            state = SystemState(runnable_x86_processes=n)
            if cost_model(profile, TargetKind.X86, state, spec) <= budget_ms:
                best = n
        return best

    return ThresholdEntry(
        app_id=profile.app_id,
        kernel_id=profile.kernel.kernel_id if profile.kernel else "",
        fpga_thr=largest_ok(profile.fpga_exec_total_ms),
        arm_thr=largest_ok(profile.arm_exec_total_ms),
        last_x86_exec=profile.x86_exec_isolated_ms,
        last_arm_exec=profile.arm_exec_total_ms,
        last_fpga_exec=profile.fpga_exec_total_ms,
    )


def estimate_table(
    profiles: list[FunctionProfile],
    spec: PlatformSpec,
    cost_model: CostModel = exec_time,
    max_load: int = DEFAULT_MAX_LOAD,
) -> dict[str, ThresholdEntry]:
    return {p.app_id: estimate_thresholds(p, spec, cost_model, max_load) for p in profiles}


def increase_threshold(threshold: int) -> int:
    """Raise a threshold by 10%, at least by 1 (keeps growth bounded but
    able to reach any level in logarithmically many steps)."""
    return threshold + max(1, math.ceil(0.1 * threshold))


def update_on_completion(entry: ThresholdEntry, rec: ExecutionRecord) -> ThresholdEntry:
    """Apply one completion report to an entry; pure, returns the new entry.

    x86 completions can only lower a threshold, and only to the observed
    load when it lies strictly below the current threshold; ARM/FPGA
    completions can only raise their own threshold.  The per-target last
    observed time is refreshed on every report.
    """
    if rec.app_id != entry.app_id:
        raise ValueError(f"record for {rec.app_id!r} applied to entry {entry.app_id!r}")

    if rec.target is TargetKind.X86:
        updated = replace(entry, last_x86_exec=rec.exec_time_ms)
        if rec.exec_time_ms > entry.last_fpga_exec and rec.load_at_start < entry.fpga_thr:
            return replace(updated, fpga_thr=rec.load_at_start)
        if rec.exec_time_ms > entry.last_arm_exec and rec.load_at_start < entry.arm_thr:
            return replace(updated, arm_thr=rec.load_at_start)
        return updated

    if rec.target is TargetKind.ARM:
        updated = replace(entry, last_arm_exec=rec.exec_time_ms)
        if rec.exec_time_ms > entry.last_x86_exec:
            updated = replace(updated, arm_thr=increase_threshold(entry.arm_thr))
        return updated

    updated = replace(entry, last_fpga_exec=rec.exec_time_ms)
    if rec.exec_time_ms > entry.last_x86_exec:
        updated = replace(updated, fpga_thr=increase_threshold(entry.fpga_thr))
    return updated


TABLE_CSV_COLUMNS = [
    "app_id",
    "kernel_id",
    "fpga_thr",
    "arm_thr",
    "last_x86_exec",
    "last_arm_exec",
    "last_fpga_exec",
]


def table_store(table: dict[str, ThresholdEntry], path: str) -> None:
    """Write a threshold table as CSV, rows sorted by app_id."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_CSV_COLUMNS)
        for app_id in sorted(table):
            e = table[app_id]
            writer.writerow(
                [e.app_id, e.kernel_id, e.fpga_thr, e.arm_thr,
                 e.last_x86_exec, e.last_arm_exec, e.last_fpga_exec]
            )


def table_load(path: str) -> dict[str, ThresholdEntry]:
    """Read a threshold table; raises :class:`TableFormatError` with the
    offending line number on any malformed or invariant-violating row."""
    table: dict[str, ThresholdEntry] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return {}
        if header != TABLE_CSV_COLUMNS:
            raise TableFormatError(f"{path}:1: expected header {TABLE_CSV_COLUMNS}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TABLE_CSV_COLUMNS):
                raise TableFormatError(
                    f"{path}:{lineno}: expected {len(TABLE_CSV_COLUMNS)} columns, got {len(row)}"
                )
            app_id, kernel_id = row[0], row[1]
            try:
                entry = ThresholdEntry(
                    app_id=app_id,
                    kernel_id=kernel_id,
                    fpga_thr=int(row[2]),
                    arm_thr=int(row[3]),
                    last_x86_exec=float(row[4]),
                    last_arm_exec=float(row[5]),
                    last_fpga_exec=float(row[6]),
                )
            except ValueError as exc:
                raise TableFormatError(f"{path}:{lineno}: {exc}") from None
            if app_id in table:
                raise TableFormatError(f"{path}:{lineno}: duplicate app_id {app_id!r}")
            table[app_id] = entry
    return table
