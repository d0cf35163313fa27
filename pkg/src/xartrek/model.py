"""Hardware platform model, per-function performance profiles, and the
contention cost model shared by threshold estimation and the simulator.

Execution targets carry the wire flag values directly (x86=0, ARM=1,
FPGA=2).  CPU contention follows processor sharing: with ``n`` runnable
processes on ``c`` cores each process runs at rate ``min(1, c/n)``, so an
isolated duration scales by ``max(1, n/c)``.  The FPGA is immune to CPU
load; its queueing is the simulator's job, not the cost model's.

Profile files use a key-value section format, one section per profiled
application::

    [digit2000]
    function = digit_rec
    x86_ms = 3521
    arm_ms = 8963
    fpga_ms = 1229
    kernel = KNL_HW_DR200
    kernel_area = 14
    calls_per_run = 1

``x86_ms`` is the isolated local time; ``arm_ms`` and ``fpga_ms`` are
end-to-end times for the same unit of work with migration/transfer
overhead already included.  ``kernel``/``kernel_area`` are optional (a
profile without them can never execute on the FPGA).
"""

from __future__ import annotations

import configparser
import enum
from dataclasses import dataclass

from .packing import KernelResource


class ModelError(Exception):
    """Base class for platform-model failures."""


class NoKernelError(ModelError):
    """FPGA execution requested for a profile without a hardware kernel."""


class ProfileFormatError(ModelError):
    """A profile or platform file could not be parsed."""


class TargetKind(enum.IntEnum):
    """Execution target; the integer value is the migration flag."""

    X86 = 0
    ARM = 1
    FPGA = 2


class LoadClass(enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


@dataclass(frozen=True)
class PlatformSpec:
    """Core counts, FPGA capacity, and fixed overhead knobs.

    The overhead fields default to 0 because calibrated profiles already
    fold migration/transfer costs into their end-to-end times; non-zero
    values are only meaningful for synthetic profiles.
    """

    x86_cores: int = 6
    arm_cores: int = 96
    fpga_area_capacity: float = 100.0
    reconfig_latency_ms: float = 2000.0
    ethernet_migration_overhead_ms: float = 0.0
    pcie_transfer_overhead_ms: float = 0.0
    load_sampler_period_ms: float = 100.0

    def __post_init__(self):
        if self.x86_cores < 1:
            raise ValueError("x86_cores must be >= 1")
        if self.arm_cores < 0:
            raise ValueError("arm_cores must be >= 0")
        if self.fpga_area_capacity < 0:
            raise ValueError("fpga_area_capacity must be >= 0")
        for name in (
            "reconfig_latency_ms",
            "ethernet_migration_overhead_ms",
            "pcie_transfer_overhead_ms",
            "load_sampler_period_ms",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class FunctionProfile:
    """Calibrated per-target execution times for one selected function."""

    function_id: str
    app_id: str
    x86_exec_isolated_ms: float
    arm_exec_total_ms: float
    fpga_exec_total_ms: float
    kernel: KernelResource | None = None
    calls_per_run: int = 1

    def __post_init__(self):
        for name in ("x86_exec_isolated_ms", "arm_exec_total_ms", "fpga_exec_total_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{self.app_id}: {name} must be > 0")
        if self.calls_per_run < 1:
            raise ValueError(f"{self.app_id}: calls_per_run must be >= 1")


@dataclass
class SystemState:
    """Instantaneous occupancy snapshot used by the cost model."""

    runnable_x86_processes: int = 0
    runnable_arm_processes: int = 0
    fpga_queue_depth: int = 0
    clock_ms: float = 0.0

    def __post_init__(self):
        for name in ("runnable_x86_processes", "runnable_arm_processes", "fpga_queue_depth"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def exec_time(
    profile: FunctionProfile,
    target: TargetKind,
    state: SystemState,
    spec: PlatformSpec,
) -> float:
    """Predicted end-to-end time (ms) for one call of ``profile`` on ``target``.

    CPU targets scale by the processor-sharing factor; migration/transfer
    overheads are one-shot costs and are added unscaled.  FPGA time is
    load-independent (queueing is modeled by the simulator).
    """
    if target is TargetKind.X86:
        factor = max(1.0, state.runnable_x86_processes / spec.x86_cores)
        return profile.x86_exec_isolated_ms * factor
    if target is TargetKind.ARM:
        if spec.arm_cores == 0:
            raise ModelError("platform has no ARM cores")
        factor = max(1.0, state.runnable_arm_processes / spec.arm_cores)
        return profile.arm_exec_total_ms * factor + spec.ethernet_migration_overhead_ms
    if profile.kernel is None:
        raise NoKernelError(f"{profile.app_id}: no hardware kernel for FPGA execution")
    return profile.fpga_exec_total_ms + spec.pcie_transfer_overhead_ms


def sample_load(state: SystemState) -> int:
    """The x86 load reading: count of runnable processes on the x86 host."""
    return state.runnable_x86_processes


def classify_load(n_processes: int, spec: PlatformSpec) -> LoadClass:
    """Bucket a process count into low/medium/high.

    Boundaries (n equal to the core counts) fall into MEDIUM, the
    conservative bucket.
    """
    if n_processes < 0:
        raise ValueError("n_processes must be >= 0")
    if n_processes < spec.x86_cores:
        return LoadClass.LOW
    if n_processes <= spec.x86_cores + spec.arm_cores:
        return LoadClass.MEDIUM
    return LoadClass.HIGH


# --- profile / platform file I/O ------------------------------------------

_PROFILE_KEYS = {"function", "x86_ms", "arm_ms", "fpga_ms", "kernel", "kernel_area", "calls_per_run"}


def _parser_for(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        if not parser.read(path):
            raise ProfileFormatError(f"cannot read file {path!r}")
    except configparser.Error as exc:
        raise ProfileFormatError(f"{path}: {exc}") from None
    return parser


def profiles_load(path: str) -> list[FunctionProfile]:
    """Load profiles from the section format documented in the module docstring."""
    parser = _parser_for(path)
    profiles = []
    for app_id in parser.sections():
        section = parser[app_id]
        unknown = sorted(set(section) - _PROFILE_KEYS)
        if unknown:
            raise ProfileFormatError(f"{path}: [{app_id}]: unknown key(s) {', '.join(unknown)}")
        try:
            kernel = None
            if "kernel" in section:
                if "kernel_area" not in section:
                    raise ProfileFormatError(f"{path}: [{app_id}]: kernel without kernel_area")
                kernel = KernelResource(
                    kernel_id=section["kernel"],
                    area=float(section["kernel_area"]),
                    function_id=section.get("function", app_id),
                )
            profile = FunctionProfile(
                function_id=section.get("function", app_id),
                app_id=app_id,
                x86_exec_isolated_ms=float(section["x86_ms"]),
                arm_exec_total_ms=float(section["arm_ms"]),
                fpga_exec_total_ms=float(section["fpga_ms"]),
                kernel=kernel,
                calls_per_run=int(section.get("calls_per_run", "1")),
            )
        except KeyError as exc:
            raise ProfileFormatError(f"{path}: [{app_id}]: missing key {exc}") from None
        except ValueError as exc:
            raise ProfileFormatError(f"{path}: [{app_id}]: {exc}") from None
        profiles.append(profile)
    return profiles


def profiles_store(profiles: list[FunctionProfile], path: str) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for p in profiles:
        section = {
            "function": p.function_id,
            "x86_ms": repr(p.x86_exec_isolated_ms),
            "arm_ms": repr(p.arm_exec_total_ms),
            "fpga_ms": repr(p.fpga_exec_total_ms),
        }
        if p.kernel is not None:
            section["kernel"] = p.kernel.kernel_id
            section["kernel_area"] = repr(p.kernel.area)
        if p.calls_per_run != 1:
            section["calls_per_run"] = str(p.calls_per_run)
        parser[p.app_id] = section
    with open(path, "w") as fh:
        parser.write(fh)


def profiles_by_app(profiles: list[FunctionProfile]) -> dict[str, FunctionProfile]:
    out: dict[str, FunctionProfile] = {}
    for p in profiles:
        if p.app_id in out:
            raise ProfileFormatError(f"duplicate profile for app {p.app_id!r}")
        out[p.app_id] = p
    return out


def kernels_of(profiles: list[FunctionProfile]) -> list[KernelResource]:
    """Distinct kernels referenced by a profile set (two apps may share one)."""
    seen: dict[str, KernelResource] = {}
    for p in profiles:
        if p.kernel is not None and p.kernel.kernel_id not in seen:
            seen[p.kernel.kernel_id] = p.kernel
    return list(seen.values())


_PLATFORM_KEYS = {
    "x86_cores": int,
    "arm_cores": int,
    "fpga_area_capacity": float,
    "reconfig_latency_ms": float,
    "ethernet_migration_overhead_ms": float,
    "pcie_transfer_overhead_ms": float,
    "load_sampler_period_ms": float,
}


def platform_load(path: str) -> PlatformSpec:
    """Load a platform description; section ``[platform]``, defaults apply."""
    parser = _parser_for(path)
    if "platform" not in parser:
        raise ProfileFormatError(f"{path}: missing [platform] section")
    section = parser["platform"]
    unknown = sorted(set(section) - set(_PLATFORM_KEYS))
    if unknown:
        raise ProfileFormatError(f"{path}: [platform]: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, conv in _PLATFORM_KEYS.items():
        if key in section:
            try:
                kwargs[key] = conv(section[key])
            except ValueError:
                raise ProfileFormatError(f"{path}: [platform]: bad value for {key}") from None
    try:
        return PlatformSpec(**kwargs)
    except ValueError as exc:
        raise ProfileFormatError(f"{path}: [platform]: {exc}") from None


def platform_store(spec: PlatformSpec, path: str) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["platform"] = {
        "x86_cores": str(spec.x86_cores),
        "arm_cores": str(spec.arm_cores),
        "fpga_area_capacity": repr(spec.fpga_area_capacity),
        "reconfig_latency_ms": repr(spec.reconfig_latency_ms),
        "ethernet_migration_overhead_ms": repr(spec.ethernet_migration_overhead_ms),
        "pcie_transfer_overhead_ms": repr(spec.pcie_transfer_overhead_ms),
        "load_sampler_period_ms": repr(spec.load_sampler_period_ms),
    }
    with open(path, "w") as fh:
        parser.write(fh)
