"""Threshold-driven execution migration across x86, ARM, and FPGA targets:
calibration, dynamic threshold refinement, kernel packing, a scheduler
protocol, and a deterministic discrete-event simulator."""

from .model import (
    FunctionProfile,
    LoadClass,
    PlatformSpec,
    SystemState,
    TargetKind,
    classify_load,
    exec_time,
    sample_load,
)
from .packing import ConfigImage, KernelResource, pack_auto, pack_manual, plan_summary
from .scheduler import FpgaState, MigrationDecision, decide
from .sim import Policy, SimMetrics, SimScenario, run, run_repeated
from .thresholds import (
    ExecutionRecord,
    ThresholdEntry,
    estimate_thresholds,
    table_load,
    table_store,
    update_on_completion,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigImage",
    "ExecutionRecord",
    "FpgaState",
    "FunctionProfile",
    "KernelResource",
    "LoadClass",
    "MigrationDecision",
    "PlatformSpec",
    "Policy",
    "SimMetrics",
    "SimScenario",
    "SystemState",
    "TargetKind",
    "ThresholdEntry",
    "classify_load",
    "decide",
    "estimate_thresholds",
    "exec_time",
    "pack_auto",
    "pack_manual",
    "plan_summary",
    "run",
    "run_repeated",
    "sample_load",
    "table_load",
    "table_store",
    "update_on_completion",
]
