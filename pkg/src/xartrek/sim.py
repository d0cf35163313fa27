"""Deterministic discrete-event simulation of the x86/ARM/FPGA platform.

Processes arrive, ask the scheduling policy where to run their selected
function, execute under processor sharing on the CPUs or FIFO queueing on
the FPGA, and report completions back to the threshold table.  Time is
integer microseconds internally (event ordering never depends on float
rounding); all reported durations are milliseconds.

Execution model:

* x86 and ARM are processor-sharing pools: n processes on c cores each
  progress at rate min(1, c/n).  Occupancy changes re-scale everything
  (event-driven, tentative completion events invalidated by generation).
* The FPGA runs one invocation at a time per kernel, FIFO, no preemption.
  Work admitted to a kernel queue runs to completion even if a later
  reconfiguration drops that kernel from the loaded image.
* Reconfigurations take ``PlatformSpec.reconfig_latency_ms``; kernel
  availability switches only at completion (requests meanwhile see the
  stale set, which is what hides the latency).
* Background-load processes model external CPU pressure: they occupy the
  x86 pool (raising the load reading and stealing capacity) but produce
  no metrics.  ``service_ms=None`` keeps them runnable for the whole run.

Policies: the full threshold-driven policy, or constant-flag baselines.
Under the threshold policy a process prefetches its kernel's image at
arrival (asynchronously, dropped if the FPGA is busy) and every call is
decided against the live x86 occupancy, the requester itself excluded
(requests are strictly pre-invocation).  The always-FPGA baseline has no
latency hiding: a call whose kernel is not loaded waits for a synchronous
reconfiguration before executing.
"""

from __future__ import annotations

import heapq
import math
import random
import statistics
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

from .model import (
    FunctionProfile,
    NoKernelError,
    PlatformSpec,
    TargetKind,
    kernels_of,
    profiles_by_app,
)
from .packing import ConfigImage, pack_auto
from .scheduler import (
    FLAG_ARM,
    FLAG_FPGA,
    FLAG_X86,
    FpgaState,
    UnknownKernelError,
    decide,
)
from .thresholds import (
    ExecutionRecord,
    estimate_table,
    table_load,
    update_on_completion,
)


class SimError(Exception):
    pass


class SimConfigError(SimError):
    """Scenario is malformed (unknown app, missing table entry, ...)."""


class SimTimeoutError(SimError):
    """Simulated time exceeded the scenario's cap before completion."""


class Policy(Enum):
    XARTREK = "xartrek"
    ALWAYS_X86 = "always-x86"
    ALWAYS_ARM = "always-arm"
    ALWAYS_FPGA = "always-fpga"


# --- workloads ---------------------------------------------------------------


@dataclass(frozen=True)
class FixedSet:
    apps: tuple[str, ...]


@dataclass(frozen=True)
class RandomSet:
    count: int
    seed: int | None = None
    with_replacement: bool = True


@dataclass(frozen=True)
class Periodic:
    waves: int
    apps_per_wave: int
    interval_ms: float
    seed: int | None = None


@dataclass(frozen=True)
class Throughput:
    app: str
    images: int
    duration_ms: float


@dataclass(frozen=True)
class MixSweep:
    """A family of fixed mixes; expand with :func:`expand_mix_sweep`."""

    fractions: tuple[float, ...]
    total_apps: int = 10
    swept_app: str = "cg-a"
    fill_app: str = "digit2000"


Workload = FixedSet | RandomSet | Periodic | Throughput | MixSweep


@dataclass(frozen=True)
class BackgroundLoad:
    """x86-occupancy-only processes; service_ms=None means whole-run."""

    count: int
    service_ms: float | None = None

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.service_ms is not None and self.service_ms <= 0:
            raise ValueError("service_ms must be > 0 when set")


@dataclass(frozen=True)
class FromEstimation:
    max_load: int = 200


@dataclass(frozen=True)
class FromTable:
    path: str


ThresholdSource = FromEstimation | FromTable


@dataclass(frozen=True)
class SimScenario:
    platform: PlatformSpec
    profiles: tuple[FunctionProfile, ...]
    workload: Workload
    policy: Policy = Policy.XARTREK
    threshold_source: ThresholdSource = FromEstimation()
    plan: tuple[ConfigImage, ...] | None = None
    preload_image: str | None = None
    background: BackgroundLoad | None = None
    seed: int = 0
    max_sim_ms: float = 86_400_000.0
    scenario_id: str = "scenario"


@dataclass(frozen=True)
class AppCompletion:
    app_id: str
    completion_ms: float
    target: int  # flag of the target that served most calls


@dataclass
class SimMetrics:
    completions: list[AppCompletion] = field(default_factory=list)
    mean_completion_ms: float | None = None
    throughput_ips: float | None = None
    migration_counts: Counter = field(default_factory=Counter)
    reconfiguration_count: int = 0
    calls_completed: int = 0
    x86_work_delivered_ms: float = 0.0
    load_trace: list[tuple[float, int]] = field(default_factory=list)


@dataclass(frozen=True)
class RepeatedMetrics:
    runs: tuple[SimMetrics, ...]
    mean_completion_ms: float | None
    stddev_completion_ms: float | None
    mean_throughput_ips: float | None
    stddev_throughput_ips: float | None


# --- workload generation -------------------------------------------------


def _ms_to_us(ms: float) -> int:
    return int(round(ms * 1000.0))


def _work_us(ms: float) -> int:
    # execution demands are clamped to one microsecond so no call ever
    # completes in zero simulated time
    return max(1, _ms_to_us(ms))


def gen_workload(
    workload: Workload,
    seed: int,
    app_ids: list[str],
) -> list[tuple[int, str, int | None]]:
    """Deterministic arrival schedule: (time_us, app_id, calls_override).

    ``seed`` drives the random draws unless the workload pins its own.
    Random draws are with replacement unless the workload says otherwise.
    """
    if isinstance(workload, FixedSet):
        return [(0, app, None) for app in workload.apps]
    if isinstance(workload, RandomSet):
        rng = random.Random(workload.seed if workload.seed is not None else seed)
        population = sorted(app_ids)
        if workload.with_replacement:
            drawn = [rng.choice(population) for _ in range(workload.count)]
        else:
            if workload.count > len(population):
                raise SimConfigError(
                    f"cannot draw {workload.count} apps without replacement from {len(population)}"
                )
            drawn = rng.sample(population, workload.count)
        return [(0, app, None) for app in drawn]
    if isinstance(workload, Periodic):
        rng = random.Random(workload.seed if workload.seed is not None else seed)
        population = sorted(app_ids)
        schedule = []
        for wave in range(workload.waves):
            at = _ms_to_us(workload.interval_ms) * wave
            for _ in range(workload.apps_per_wave):
                schedule.append((at, rng.choice(population), None))
        return schedule
    if isinstance(workload, Throughput):
        return [(0, workload.app, workload.images)]
    raise SimConfigError("MixSweep describes a scenario family; expand it first")


def expand_mix_sweep(scenario: SimScenario) -> list[tuple[float, SimScenario]]:
    """One FixedSet scenario per swept fraction."""
    workload = scenario.workload
    if not isinstance(workload, MixSweep):
        raise SimConfigError("scenario workload is not a MixSweep")
    points = []
    for fraction in workload.fractions:
        if not 0.0 <= fraction <= 1.0:
            raise SimConfigError(f"fraction {fraction} out of [0, 1]")
        n_swept = round(fraction * workload.total_apps)
        apps = (workload.swept_app,) * n_swept + (workload.fill_app,) * (
            workload.total_apps - n_swept
        )
        points.append(
            (
                fraction,
                replace(
                    scenario,
                    workload=FixedSet(apps=apps),
                    scenario_id=f"{scenario.scenario_id}/frac={fraction:g}",
                ),
            )
        )
    return points


# --- processor-sharing pool ------------------------------------------------

_WORK_EPS_US = 1e-3


class _SharedPool:
    """Processor-sharing pool over integer-microsecond event time."""

    def __init__(self, cores: int):
        self.cores = max(1, cores)
        self.jobs: dict[int, float] = {}  # jid -> remaining work (us)
        self.permanent = 0  # occupants that never finish
        self.last_us = 0
        self.delivered_us = 0.0
        self.generation = 0

    def occupancy(self) -> int:
        return len(self.jobs) + self.permanent

    def rate(self) -> float:
        n = self.occupancy()
        return 1.0 if n <= self.cores else self.cores / n

    def advance(self, now_us: int) -> None:
        elapsed = now_us - self.last_us
        if elapsed:
            r = self.rate()
            if self.jobs:
                for jid in self.jobs:
                    self.jobs[jid] -= elapsed * r
                self.delivered_us += elapsed * r * len(self.jobs)
            self.last_us = now_us
        else:
            self.last_us = now_us

    def add(self, now_us: int, jid: int, work_us: float) -> None:
        self.advance(now_us)
        self.jobs[jid] = work_us
        self.generation += 1

    def pop_finished(self) -> list[int]:
        done = [jid for jid, rem in self.jobs.items() if rem <= _WORK_EPS_US]
        for jid in done:
            del self.jobs[jid]
        if done:
            self.generation += 1
        return done

    def next_tick(self, now_us: int) -> int | None:
        if not self.jobs:
            return None
        wait = min(self.jobs.values()) / self.rate()
        return now_us + max(0, math.ceil(wait - _WORK_EPS_US))


# --- event kinds -------------------------------------------------------------

_PRIO_WAVE = 0
_PRIO_ARRIVAL = 1
_PRIO_RECONFIG = 2
_PRIO_COMPLETION = 3
_PRIO_CALL = 4
_PRIO_SAMPLE = 5


@dataclass
class _Proc:
    pid: int
    app_id: str
    profile: FunctionProfile
    calls_total: int
    arrival_us: int
    calls_done: int = 0
    call_start_us: int = 0
    call_flag: int = FLAG_X86
    call_load: int = 0
    targets: Counter = field(default_factory=Counter)


class _Engine:
    def __init__(self, scenario: SimScenario, probe: Callable | None = None):
        self.scenario = scenario
        self.spec = scenario.platform
        self.probe = probe
        self.profiles = profiles_by_app(list(scenario.profiles))

        if scenario.plan is not None:
            plan = list(scenario.plan)
        else:
            kernels = kernels_of(list(scenario.profiles))
            plan = pack_auto(kernels, self.spec.fpga_area_capacity) if kernels else []
        self.fpga = FpgaState(plan=plan, loaded_image=scenario.preload_image)

        if scenario.policy is Policy.XARTREK:
            source = scenario.threshold_source
            if isinstance(source, FromTable):
                self.table = table_load(source.path)
            else:
                self.table = estimate_table(
                    list(scenario.profiles), self.spec, max_load=source.max_load
                )
        else:
            self.table = {}

        self.heap: list[tuple[int, int, int, str, object]] = []
        self.seq = 0
        self.now_us = 0
        self.metrics = SimMetrics()
        self.x86 = _SharedPool(self.spec.x86_cores)
        self.arm = _SharedPool(max(1, self.spec.arm_cores))
        self.fpga_queues: dict[str, list[tuple[_Proc, int]]] = {}
        self.fpga_busy: set[str] = set()
        self.pending_fpga: dict[str, list[_Proc]] = {}
        self.jid_to_proc: dict[int, tuple[_Proc, int]] = {}  # jid -> (proc, flag)
        self.next_jid = 0
        self.apps_total = 0
        self.apps_done = 0
        self.apps_started = 0
        self.live_pids: set[int] = set()
        self.end_us: int | None = None
        self.sampler_period_us = max(1, _ms_to_us(self.spec.load_sampler_period_ms))

    # -- event plumbing

    def push(self, time_us: int, prio: int, tag: str, payload: object = None) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (time_us, prio, self.seq, tag, payload))

    def load_reading(self) -> int:
        return self.x86.occupancy()

    # -- setup

    def prepare(self) -> None:
        schedule = gen_workload(
            self.scenario.workload, self.scenario.seed, list(self.profiles)
        )
        for _, app_id, _ in schedule:
            if app_id not in self.profiles:
                raise SimConfigError(f"workload references unknown app {app_id!r}")
        if self.scenario.policy is Policy.XARTREK:
            for _, app_id, _ in schedule:
                if app_id not in self.table:
                    raise SimConfigError(f"no threshold entry for app {app_id!r}")

        if isinstance(self.scenario.workload, Throughput):
            self.end_us = _ms_to_us(self.scenario.workload.duration_ms)
        if isinstance(self.scenario.workload, Periodic):
            interval_us = _ms_to_us(self.scenario.workload.interval_ms)
            for wave in range(self.scenario.workload.waves):
                self.push(interval_us * wave, _PRIO_WAVE, "wave", wave)

        bg = self.scenario.background
        if bg is not None:
            if bg.service_ms is None:
                self.x86.permanent = bg.count
            else:
                for _ in range(bg.count):
                    jid = self._new_jid()
                    self.x86.add(0, jid, float(_work_us(bg.service_ms)))
                self._reschedule_pool("x86")

        pid = 0
        for at_us, app_id, calls_override in schedule:
            profile = self.profiles[app_id]
            calls = calls_override if calls_override is not None else profile.calls_per_run
            proc = _Proc(
                pid=pid, app_id=app_id, profile=profile,
                calls_total=calls, arrival_us=at_us,
            )
            pid += 1
            self.push(at_us, _PRIO_ARRIVAL, "arrival", proc)
        self.apps_total = pid
        self.push(0, _PRIO_SAMPLE, "sample", None)

    def _new_jid(self) -> int:
        self.next_jid += 1
        return self.next_jid

    # -- main loop

    def run(self) -> SimMetrics:
        self.prepare()
        max_us = _ms_to_us(self.scenario.max_sim_ms)
        while self.heap:
            time_us, prio, _, tag, payload = heapq.heappop(self.heap)
            if self.end_us is not None and time_us > self.end_us:
                break
            if time_us > max_us:
                raise SimTimeoutError(
                    f"simulation exceeded {self.scenario.max_sim_ms} ms "
                    f"({self.apps_done}/{self.apps_total} applications completed)"
                )
            self.now_us = time_us
            getattr(self, f"_on_{tag}")(payload)
            if self.probe is not None:
                self.probe(tag, time_us, self._conservation_counts())
            if self.apps_done == self.apps_total and self.end_us is None:
                break
        if self.apps_done < self.apps_total and self.end_us is None:
            raise SimError("event queue drained before all applications completed")
        return self._finalize()

    def _conservation_counts(self) -> tuple[int, int, int, int]:
        """(completed, live, started, total); live is tracked independently
        of the counters so tests can cross-check conservation."""
        return (self.apps_done, len(self.live_pids), self.apps_started, self.apps_total)

    def _finalize(self) -> SimMetrics:
        m = self.metrics
        if m.completions:
            m.mean_completion_ms = statistics.fmean(c.completion_ms for c in m.completions)
        if isinstance(self.scenario.workload, Throughput):
            m.throughput_ips = m.calls_completed / (self.scenario.workload.duration_ms / 1000.0)
        m.x86_work_delivered_ms = self.x86.delivered_us / 1000.0
        return m

    # -- event handlers

    def _on_wave(self, wave: int) -> None:
        pass  # arrivals are pre-scheduled; the wave event marks the boundary

    def _on_sample(self, _payload) -> None:
        self.metrics.load_trace.append((self.now_us / 1000.0, self.load_reading()))
        if self.apps_done < self.apps_total:
            self.push(self.now_us + self.sampler_period_us, _PRIO_SAMPLE, "sample", None)

    def _on_arrival(self, proc: _Proc) -> None:
        self.apps_started += 1
        self.live_pids.add(proc.pid)
        if self.scenario.policy is Policy.XARTREK and proc.profile.kernel is not None:
            kernel_id = proc.profile.kernel.kernel_id
            if kernel_id not in self.fpga.available_kernels and not self.fpga.busy:
                try:
                    image = self.fpga.image_for(kernel_id)
                except UnknownKernelError:
                    image = None
                if image is not None:
                    self._begin_reconfiguration(image)
        self.push(self.now_us, _PRIO_CALL, "call", proc)

    def _on_call(self, proc: _Proc) -> None:
        proc.call_start_us = self.now_us
        policy = self.scenario.policy
        if policy is Policy.XARTREK:
            load = self.load_reading()
            entry = self.table[proc.app_id]
            decision = decide(load, entry, self.fpga)
            if decision.reconfigure is not None and not self.fpga.busy:
                self._begin_reconfiguration(decision.reconfigure)
            proc.call_flag, proc.call_load = decision.flag, load
        elif policy is Policy.ALWAYS_X86:
            proc.call_flag, proc.call_load = FLAG_X86, self.load_reading()
        elif policy is Policy.ALWAYS_ARM:
            proc.call_flag, proc.call_load = FLAG_ARM, self.load_reading()
        else:
            proc.call_flag, proc.call_load = FLAG_FPGA, self.load_reading()
            self._dispatch_always_fpga(proc)
            return
        self._dispatch(proc)

    def _dispatch(self, proc: _Proc) -> None:
        self.metrics.migration_counts[proc.call_flag] += 1
        profile = proc.profile
        if proc.call_flag == FLAG_X86:
            jid = self._new_jid()
            self.jid_to_proc[jid] = (proc, FLAG_X86)
            self.x86.add(self.now_us, jid, float(_work_us(profile.x86_exec_isolated_ms)))
            self._reschedule_pool("x86")
        elif proc.call_flag == FLAG_ARM:
            overhead_us = _ms_to_us(self.spec.ethernet_migration_overhead_ms)
            if overhead_us:
                self.push(self.now_us + overhead_us, _PRIO_CALL, "arm_join", proc)
            else:
                self._on_arm_join(proc)
        else:
            if profile.kernel is None:
                raise NoKernelError(f"{proc.app_id}: FPGA target but no kernel")
            self._enqueue_fpga(proc, profile.kernel.kernel_id)

    def _on_arm_join(self, proc: _Proc) -> None:
        jid = self._new_jid()
        self.jid_to_proc[jid] = (proc, FLAG_ARM)
        self.arm.add(self.now_us, jid, float(_work_us(proc.profile.arm_exec_total_ms)))
        self._reschedule_pool("arm")

    def _dispatch_always_fpga(self, proc: _Proc) -> None:
        self.metrics.migration_counts[FLAG_FPGA] += 1
        profile = proc.profile
        if profile.kernel is None:
            raise NoKernelError(f"{proc.app_id}: FPGA target but no kernel")
        kernel_id = profile.kernel.kernel_id
        if kernel_id in self.fpga.available_kernels:
            self._enqueue_fpga(proc, kernel_id)
            return
        # no latency hiding here: the call blocks until its image is loaded
        image = self.fpga.image_for(kernel_id)
        self.pending_fpga.setdefault(image, []).append(proc)
        if not self.fpga.busy:
            self._begin_reconfiguration(image)

    def _enqueue_fpga(self, proc: _Proc, kernel_id: str) -> None:
        service_us = _work_us(
            proc.profile.fpga_exec_total_ms + self.spec.pcie_transfer_overhead_ms
        )
        queue = self.fpga_queues.setdefault(kernel_id, [])
        queue.append((proc, service_us))
        if kernel_id not in self.fpga_busy:
            self._start_fpga_service(kernel_id)

    def _start_fpga_service(self, kernel_id: str) -> None:
        proc, service_us = self.fpga_queues[kernel_id][0]
        self.fpga_busy.add(kernel_id)
        self.push(self.now_us + service_us, _PRIO_COMPLETION, "fpga_done", kernel_id)

    def _on_fpga_done(self, kernel_id: str) -> None:
        proc, _ = self.fpga_queues[kernel_id].pop(0)
        self.fpga_busy.discard(kernel_id)
        self._call_completed(proc, FLAG_FPGA)
        if self.fpga_queues[kernel_id]:
            self._start_fpga_service(kernel_id)

    def _begin_reconfiguration(self, image: str) -> None:
        started = self.fpga.begin_reconfiguration(image, self.now_us / 1000.0, self.spec)
        if started:
            self.metrics.reconfiguration_count += 1
            done_us = self.now_us + _ms_to_us(self.spec.reconfig_latency_ms)
            self.push(done_us, _PRIO_RECONFIG, "reconfig_done", None)

    def _on_reconfig_done(self, _payload) -> None:
        self.fpga.complete_reconfiguration(self.now_us / 1000.0)
        loaded = self.fpga.loaded_image
        for proc in self.pending_fpga.pop(loaded, []):
            self._enqueue_fpga(proc, proc.profile.kernel.kernel_id)
        if self.pending_fpga and not self.fpga.busy:
            self._begin_reconfiguration(next(iter(self.pending_fpga)))

    def _reschedule_pool(self, which: str) -> None:
        pool = self.x86 if which == "x86" else self.arm
        tick = pool.next_tick(self.now_us)
        if tick is not None:
            self.push(tick, _PRIO_COMPLETION, "pool_tick", (which, pool.generation))

    def _on_pool_tick(self, payload: tuple[str, int]) -> None:
        which, generation = payload
        pool = self.x86 if which == "x86" else self.arm
        if generation != pool.generation:
            return  # membership changed since this tick was scheduled
        pool.advance(self.now_us)
        for jid in pool.pop_finished():
            owner = self.jid_to_proc.pop(jid, None)
            if owner is not None:
                proc, flag = owner
                self._call_completed(proc, flag)
        self._reschedule_pool(which)

    def _call_completed(self, proc: _Proc, flag: int) -> None:
        proc.targets[flag] += 1
        self.metrics.calls_completed += 1
        proc.calls_done += 1
        if proc.calls_done >= proc.calls_total:
            self.apps_done += 1
            self.live_pids.discard(proc.pid)
            main_target = proc.targets.most_common(1)[0][0]
            duration_ms = (self.now_us - proc.arrival_us) / 1000.0
            if self.scenario.policy is Policy.XARTREK:
                # the report fires once, when the application terminates;
                # for single-call applications this is the call's own time
                record = ExecutionRecord(
                    app_id=proc.app_id,
                    target=TargetKind(main_target),
                    exec_time_ms=duration_ms,
                    load_at_start=proc.call_load,
                )
                self.table[proc.app_id] = update_on_completion(self.table[proc.app_id], record)
            self.metrics.completions.append(
                AppCompletion(
                    app_id=proc.app_id,
                    completion_ms=duration_ms,
                    target=main_target,
                )
            )
        else:
            self.push(self.now_us, _PRIO_CALL, "call", proc)


def run(scenario: SimScenario, probe: Callable | None = None) -> SimMetrics:
    """Execute one scenario to completion (or its time cap) and return metrics."""
    return _Engine(scenario, probe=probe).run()


def _shift_workload_seed(workload: Workload, offset: int) -> Workload:
    if isinstance(workload, (RandomSet, Periodic)) and workload.seed is not None:
        return replace(workload, seed=workload.seed + offset)
    return workload


def run_repeated(scenario: SimScenario, repeats: int) -> RepeatedMetrics:
    """Run ``repeats`` independent repetitions with seeds seed, seed+1, ..."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    runs = []
    for i in range(repeats):
        variant = replace(
            scenario,
            seed=scenario.seed + i,
            workload=_shift_workload_seed(scenario.workload, i),
        )
        runs.append(run(variant))
    means = [m.mean_completion_ms for m in runs if m.mean_completion_ms is not None]
    ips = [m.throughput_ips for m in runs if m.throughput_ips is not None]
    return RepeatedMetrics(
        runs=tuple(runs),
        mean_completion_ms=statistics.fmean(means) if means else None,
        stddev_completion_ms=(statistics.stdev(means) if len(means) > 1 else 0.0) if means else None,
        mean_throughput_ips=statistics.fmean(ips) if ips else None,
        stddev_throughput_ips=(statistics.stdev(ips) if len(ips) > 1 else 0.0) if ips else None,
    )


# --- scenario files ----------------------------------------------------------


def scenario_load(path: str) -> SimScenario:
    """Load a scenario from its key-value section format.

    Sections: ``[scenario]`` (id, policy, seed, profiles, and optional
    table/plan/preload_image/max_sim_ms), ``[platform]`` (same keys as a
    platform file, all optional), ``[workload]`` (kind plus its
    parameters), and optional ``[background]`` (count, service_ms).
    Referenced files are resolved relative to the scenario file.
    """
    import configparser
    import os

    from .model import platform_load, profiles_load
    from .packing import plan_load

    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        if not parser.read(path):
            raise SimConfigError(f"cannot read scenario file {path!r}")
    except configparser.Error as exc:
        raise SimConfigError(f"{path}: {exc}") from None
    base_dir = os.path.dirname(os.path.abspath(path))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base_dir, p)

    try:
        if "scenario" not in parser or "workload" not in parser:
            raise SimConfigError(f"{path}: needs [scenario] and [workload] sections")
        head = parser["scenario"]
        if "profiles" not in head:
            raise SimConfigError(f"{path}: [scenario] must name a profiles file")
        profiles = profiles_load(resolve(head["profiles"]))

        if "platform" in parser:
            platform = platform_load(path)
        else:
            platform = PlatformSpec()

        w = parser["workload"]
        kind = w.get("kind", "")
        workload: Workload
        if kind == "fixed_set":
            apps = tuple(a.strip() for a in w["apps"].split(",") if a.strip())
            workload = FixedSet(apps=apps)
        elif kind == "random_set":
            workload = RandomSet(
                count=int(w["count"]),
                seed=int(w["seed"]) if "seed" in w else None,
                with_replacement=w.get("with_replacement", "true").lower() != "false",
            )
        elif kind == "periodic":
            workload = Periodic(
                waves=int(w["waves"]),
                apps_per_wave=int(w["apps_per_wave"]),
                interval_ms=float(w["interval_ms"]),
                seed=int(w["seed"]) if "seed" in w else None,
            )
        elif kind == "throughput":
            workload = Throughput(
                app=w["app"], images=int(w["images"]), duration_ms=float(w["duration_ms"])
            )
        elif kind == "mix_sweep":
            workload = MixSweep(
                fractions=tuple(float(f) for f in w["fractions"].split(",")),
                total_apps=int(w.get("total_apps", "10")),
                swept_app=w.get("swept_app", "cg-a"),
                fill_app=w.get("fill_app", "digit2000"),
            )
        else:
            raise SimConfigError(f"{path}: unknown workload kind {kind!r}")

        background = None
        if "background" in parser:
            b = parser["background"]
            service = b.get("service_ms", "").strip()
            background = BackgroundLoad(
                count=int(b["count"]),
                service_ms=float(service) if service else None,
            )

        threshold_source: ThresholdSource = FromEstimation()
        if "table" in head:
            threshold_source = FromTable(path=resolve(head["table"]))
        plan = None
        if "plan" in head:
            plan = tuple(plan_load(resolve(head["plan"])))

        return SimScenario(
            platform=platform,
            profiles=tuple(profiles),
            workload=workload,
            policy=Policy(head.get("policy", "xartrek")),
            threshold_source=threshold_source,
            plan=plan,
            preload_image=head.get("preload_image") or None,
            background=background,
            seed=int(head.get("seed", "0")),
            max_sim_ms=float(head.get("max_sim_ms", "86400000")),
            scenario_id=head.get("id", os.path.basename(path)),
        )
    except SimConfigError:
        raise
    except Exception as exc:
        raise SimConfigError(f"{path}: {exc}") from None
