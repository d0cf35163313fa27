"""Command-line harness: calibrate thresholds, pack kernels, run experiment
suites against all policies, serve/query the scheduler, and aggregate
metrics into plot-ready matrices.

Exit codes: 0 success, 2 bad input or schema error, 3 simulation error,
4 endpoint/protocol error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from collections import Counter
from dataclasses import replace

from . import defaults, experiments, model, packing, protocol, sim, thresholds
from .scheduler import FLAG_X86, FpgaState
from .sim import Policy

log = logging.getLogger("xartrek.cli")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SIM = 3
EXIT_PROTOCOL = 4

METRICS_CSV_COLUMNS = [
    "scenario_id", "policy", "repeat", "app_id", "completion_ms", "target_executed",
]
SUMMARY_CSV_COLUMNS = [
    "suite", "scenario_id", "x_label", "x_value", "policy", "repeats",
    "mean_completion_ms", "stddev_completion_ms",
    "throughput_ips", "stddev_throughput_ips",
    "migrations_x86", "migrations_arm", "migrations_fpga", "reconfigurations",
]

_POLICY_NAMES = {p.value: p for p in Policy}


def _parse_policies(text: str) -> list[Policy]:
    policies = []
    for name in text.split(","):
        name = name.strip()
        if name not in _POLICY_NAMES:
            raise ValueError(
                f"unknown policy {name!r}; choose from {', '.join(sorted(_POLICY_NAMES))}"
            )
        policies.append(_POLICY_NAMES[name])
    if not policies:
        raise ValueError("at least one policy is required")
    return policies


def _load_inputs(args) -> tuple[list[model.FunctionProfile], model.PlatformSpec]:
    if args.profiles:
        profiles = model.profiles_load(args.profiles)
    else:
        profiles = defaults.reference_profiles()
    if args.platform:
        platform = model.platform_load(args.platform)
    else:
        platform = defaults.default_platform()
    return profiles, platform


# --- calibrate ----------------------------------------------------------------


def cmd_calibrate(args) -> int:
    profiles, platform = _load_inputs(args)
    if not profiles:
        print("warning: no profiles found; writing an empty table", file=sys.stderr)
    table = thresholds.estimate_table(profiles, platform, max_load=args.max_load)
    thresholds.table_store(table, args.out)
    for app_id in sorted(table):
        entry = table[app_id]
        print(f"{app_id}: fpga_thr={entry.fpga_thr} arm_thr={entry.arm_thr}")
    print(f"wrote {len(table)} row(s) to {args.out}")
    return EXIT_OK


# --- pack ---------------------------------------------------------------------


def cmd_pack(args) -> int:
    profiles, platform = _load_inputs(args)
    kernels = model.kernels_of(profiles)
    capacity = args.capacity if args.capacity is not None else platform.fpga_area_capacity
    if args.assign:
        assignments = {}
        for item in args.assign:
            kernel_id, sep, image_id = item.partition("=")
            if not sep or not kernel_id or not image_id:
                raise packing.PackingError(f"bad --assign {item!r}; expected KERNEL=IMAGE")
            if kernel_id in assignments:
                raise packing.AssignmentError(f"kernel {kernel_id!r} assigned twice")
            assignments[kernel_id] = image_id
        plan = packing.pack_manual(assignments, kernels, capacity)
    else:
        plan = packing.pack_auto(kernels, capacity)
    packing.plan_store(plan, args.out)
    if args.text_out:
        packing.plan_store_text(plan, args.text_out)
    print(packing.plan_summary(plan, capacity).to_text())
    print(f"wrote plan to {args.out}")
    return EXIT_OK


# --- run ------------------------------------------------------------------------


def _summary_row(point, policy, repeats, aggregate) -> list:
    counts = sum((m.migration_counts for m in aggregate.runs), Counter())
    reconfigs = sum(m.reconfiguration_count for m in aggregate.runs)
    return [
        point.suite,
        point.scenario.scenario_id,
        point.x_label,
        point.x_value,
        policy.value,
        repeats,
        _fmt(aggregate.mean_completion_ms),
        _fmt(aggregate.stddev_completion_ms),
        _fmt(aggregate.mean_throughput_ips),
        _fmt(aggregate.stddev_throughput_ips),
        counts.get(0, 0),
        counts.get(1, 0),
        counts.get(2, 0),
        reconfigs,
    ]


def _fmt(value) -> str:
    return "" if value is None else repr(value)


def _gain_pct(xartrek: float, baseline: float, higher_is_better: bool) -> float | None:
    if baseline == 0:
        return None
    if higher_is_better:
        return (xartrek - baseline) / baseline * 100.0
    return (baseline - xartrek) / baseline * 100.0


def cmd_run(args) -> int:
    if not args.scenario and not args.suite:
        raise ValueError("nothing to run: give --suite (repeatable) or --scenario FILE")
    if args.scenario and args.suite:
        raise ValueError("--scenario and --suite are mutually exclusive")
    profiles, platform = _load_inputs(args)
    policies = _parse_policies(args.policies)
    os.makedirs(args.out, exist_ok=True)

    if args.scenario:
        base = sim.scenario_load(args.scenario)
        if isinstance(base.workload, sim.MixSweep):
            points = [
                experiments.SuitePoint("scenario", "fraction", fraction, scenario)
                for fraction, scenario in sim.expand_mix_sweep(base)
            ]
        else:
            points = [experiments.SuitePoint("scenario", "point", 0.0, base)]
        # a scenario file states its preload explicitly; apply it to every policy
        def instantiate(point, policy):
            return replace(point.scenario, policy=policy)
    else:
        apps = sorted({p.app_id for p in profiles if p.calls_per_run == 1})
        points = []
        for suite in args.suite:
            points.extend(experiments.build_suite(suite, profiles, platform, args.seed, apps))

        def instantiate(point, policy):
            return experiments.scenario_for_policy(point, policy)

    metrics_rows: list[list] = []
    summary_rows: list[list] = []
    per_point: dict[tuple[str, float], dict[Policy, sim.RepeatedMetrics]] = {}

    for point in points:
        for policy in policies:
            scenario = instantiate(point, policy)
            aggregate = sim.run_repeated(scenario, args.repeats)
            per_point.setdefault((point.suite, point.x_value), {})[policy] = aggregate
            summary_rows.append(_summary_row(point, policy, args.repeats, aggregate))
            for repeat, metrics in enumerate(aggregate.runs):
                for completion in metrics.completions:
                    metrics_rows.append(
                        [
                            scenario.scenario_id,
                            policy.value,
                            repeat,
                            completion.app_id,
                            repr(completion.completion_ms),
                            completion.target,
                        ]
                    )

    metrics_path = os.path.join(args.out, "metrics.csv")
    with open(metrics_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_COLUMNS)
        writer.writerows(metrics_rows)
    summary_path = os.path.join(args.out, "summary.csv")
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_CSV_COLUMNS)
        writer.writerows(summary_rows)

    _print_gains(per_point, policies)
    print(f"wrote {metrics_path} and {summary_path}")
    return EXIT_OK


def _print_gains(per_point, policies) -> None:
    if Policy.XARTREK not in policies:
        return
    for (suite, x_value), results in per_point.items():
        ours = results.get(Policy.XARTREK)
        if ours is None:
            continue
        higher_is_better = ours.mean_throughput_ips is not None
        our_value = ours.mean_throughput_ips if higher_is_better else ours.mean_completion_ms
        if our_value is None:
            continue
        for policy, aggregate in results.items():
            if policy is Policy.XARTREK:
                continue
            base_value = (
                aggregate.mean_throughput_ips if higher_is_better else aggregate.mean_completion_ms
            )
            if base_value is None:
                continue
            gain = _gain_pct(our_value, base_value, higher_is_better)
            if gain is None:
                continue
            metric = "throughput" if higher_is_better else "mean completion"
            print(
                f"{suite} x={x_value:g}: {Policy.XARTREK.value} vs {policy.value}: "
                f"{gain:+.1f}% ({metric})"
            )


# --- report ---------------------------------------------------------------------


def cmd_report(args) -> int:
    rows = []
    for path in args.summary:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(SUMMARY_CSV_COLUMNS) - set(reader.fieldnames or [])
            if missing:
                raise model.ProfileFormatError(
                    f"{path}: summary file missing column(s) {sorted(missing)}"
                )
            rows.extend(reader)
    os.makedirs(args.out, exist_ok=True)
    suites = sorted({r["suite"] for r in rows})
    written = []
    for suite in suites:
        suite_rows = [r for r in rows if r["suite"] == suite]
        use_throughput = any(r["throughput_ips"] for r in suite_rows)
        metric = "throughput_ips" if use_throughput else "mean_completion_ms"
        policies = sorted({r["policy"] for r in suite_rows})
        xs = sorted({float(r["x_value"]) for r in suite_rows})
        matrix_path = os.path.join(args.out, f"report-{suite}.csv")
        with open(matrix_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["policy"] + [f"x={x:g}" for x in xs])
            for policy in policies:
                row = [policy]
                for x in xs:
                    cell = ""
                    for r in suite_rows:
                        if r["policy"] == policy and float(r["x_value"]) == x and r[metric]:
                            cell = r[metric]
                            break
                    row.append(cell)
                writer.writerow(row)
        written.append(matrix_path)
    for path in written:
        print(f"wrote {path}")
    if not written:
        print("no summary rows; nothing to report")
    return EXIT_OK


# --- serve / client --------------------------------------------------------------


def _make_load_source(spec: str):
    if spec == "proc":

        def from_proc() -> int:
            # /proc/loadavg's fourth field is "runnable/total"
            with open("/proc/loadavg") as fh:
                runnable = fh.read().split()[3].split("/")[0]
            return max(0, int(runnable) - 1)  # exclude the sampling process

        return from_proc
    fixed = int(spec)

    def constant() -> int:
        return fixed

    return constant


def cmd_serve(args) -> int:
    profiles, platform = _load_inputs(args)
    table_path = args.table or os.environ.get(protocol.TABLE_ENV)
    if table_path:
        table = thresholds.table_load(table_path)
    else:
        table = thresholds.estimate_table(profiles, platform)
    if args.plan:
        plan = packing.plan_load(args.plan)
    else:
        kernels = model.kernels_of(profiles)
        plan = packing.pack_auto(kernels, platform.fpga_area_capacity) if kernels else []
    preload = args.preload
    if preload is None and plan:
        preload = plan[0].image_id
    fpga = FpgaState(plan=plan, loaded_image=preload)
    endpoint = protocol.resolve_endpoint(args.endpoint)
    load_source = _make_load_source(args.load)
    print(f"serving on {endpoint} (preloaded: {preload or 'nothing'})")
    protocol.serve(endpoint, table, fpga, load_source, platform)
    print("shutdown complete")
    return EXIT_OK


def cmd_client(args) -> int:
    endpoint = protocol.resolve_endpoint(args.endpoint)
    if args.query_kernels:
        kernel_ids = protocol.client_query_kernels(endpoint, args.timeout_ms)
        for kernel_id in kernel_ids:
            print(kernel_id)
        return EXIT_OK
    if args.shutdown:
        ok = protocol.client_shutdown(endpoint, args.timeout_ms)
        return EXIT_OK if ok else EXIT_PROTOCOL
    if args.report:
        target, exec_ms, load = args.report.split(":")
        record = thresholds.ExecutionRecord(
            app_id=args.app,
            target=model.TargetKind(int(target)),
            exec_time_ms=float(exec_ms),
            load_at_start=int(load),
        )
        protocol.report_once(endpoint, record, args.timeout_ms)
        print("ack")
        return EXIT_OK
    flag = protocol.request_once(endpoint, args.app, args.function, args.timeout_ms)
    print(flag)
    return EXIT_OK


def cmd_init(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    profiles_path = os.path.join(args.out, "profiles.ini")
    platform_path = os.path.join(args.out, "platform.ini")
    defaults.write_reference_files(profiles_path, platform_path)
    print(f"wrote {profiles_path} and {platform_path}")
    return EXIT_OK


# --- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xartrek",
        description="threshold-driven x86/ARM/FPGA migration: calibration, packing, "
        "simulation suites, and the scheduler protocol",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    common_inputs = argparse.ArgumentParser(add_help=False)
    common_inputs.add_argument("--profiles", help="profile file (default: bundled reference set)")
    common_inputs.add_argument("--platform", help="platform file (default: bundled platform)")

    p = sub.add_parser("calibrate", parents=[common_inputs],
                       help="estimate migration thresholds from profiles")
    p.add_argument("--out", required=True, help="threshold table CSV to write")
    p.add_argument("--max-load", type=int, default=thresholds.DEFAULT_MAX_LOAD)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("pack", parents=[common_inputs],
                       help="group kernels into configuration images")
    p.add_argument("--out", required=True, help="plan CSV to write")
    p.add_argument("--text-out", help="also write the plan in key-value form")
    p.add_argument("--capacity", type=float, help="area capacity (default: platform's)")
    p.add_argument("--assign", action="append",
                   help="manual KERNEL=IMAGE assignment (repeatable; default: first-fit decreasing)")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("run", parents=[common_inputs],
                       help="run experiment suites or a scenario file")
    p.add_argument("--suite", action="append", choices=experiments.SUITES,
                   help="built-in suite to run (repeatable)")
    p.add_argument("--scenario", help="scenario file to run instead of suites")
    p.add_argument("--policies", default="xartrek,always-x86,always-fpga",
                   help="comma-separated policies to compare")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="pivot summary CSVs into per-suite matrices")
    p.add_argument("--summary", action="append", required=True,
                   help="summary.csv from a run (repeatable)")
    p.add_argument("--out", default="results", help="output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", parents=[common_inputs], help="run the scheduler server")
    p.add_argument("--endpoint", help=f"unix path or host:port (env {protocol.ENDPOINT_ENV})")
    p.add_argument("--table", help=f"threshold table CSV (env {protocol.TABLE_ENV}; "
                                   "default: estimate from profiles)")
    p.add_argument("--plan", help="plan CSV (default: auto-pack from profiles)")
    p.add_argument("--preload", help="image to preload (default: first image)")
    p.add_argument("--load", default="0",
                   help="load source: integer for a fixed reading, or 'proc'")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("client", help="issue one scheduler request/report")
    p.add_argument("--endpoint", help=f"unix path or host:port (env {protocol.ENDPOINT_ENV})")
    p.add_argument("--timeout-ms", type=float, default=protocol.DEFAULT_TIMEOUT_MS)
    p.add_argument("--app", help="application id")
    p.add_argument("--function", help="function id", default="")
    p.add_argument("--report", help="send a completion instead: TARGET:EXEC_MS:LOAD")
    p.add_argument("--query-kernels", action="store_true")
    p.add_argument("--shutdown", action="store_true")
    p.set_defaults(func=cmd_client)

    p = sub.add_parser("init", help="write the bundled reference input files")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_init)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (
        model.ModelError,
        packing.PackingError,
        thresholds.TableFormatError,
        sim.SimConfigError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except sim.SimError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    except (protocol.ProtocolError, protocol.EndpointError, OSError) as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        if args.command == "client" and not (args.query_kernels or args.shutdown or args.report):
            print(FLAG_X86)  # fail-safe answer mirrors the client library
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
