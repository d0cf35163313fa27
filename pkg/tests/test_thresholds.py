from __future__ import annotations

import random

import pytest

from xartrek.model import FunctionProfile, TargetKind
from xartrek.packing import KernelResource
from xartrek.thresholds import (
    ExecutionRecord,
    TableFormatError,
    ThresholdEntry,
    estimate_thresholds,
    increase_threshold,
    table_load,
    table_store,
    update_on_completion,
)


def scan_oracle(profile, spec, budget_ms, max_load=200):
    """Independent linear scan: largest n whose modeled x86 time fits."""
    best = 0
    for n in range(max_load + 1):
        t = profile.x86_exec_isolated_ms * max(1.0, n / spec.x86_cores)
        if t <= budget_ms:
            best = n
    return best


class TestEstimate:
    def test_fpga_faster_in_isolation_gives_zero(self, profile_map, platform):
        entry = estimate_thresholds(profile_map["digit2000"], platform)
        assert entry.fpga_thr == 0

    def test_cga_against_scan_oracle(self, profile_map, platform):
        entry = estimate_thresholds(profile_map["cg-a"], platform)
        # 2182 * n/6 <= 10597  <=>  n <= 29.1;  2182 * n/6 <= 8406  <=>  n <= 23.1
        assert entry.fpga_thr == scan_oracle(profile_map["cg-a"], platform, 10597.0) == 29
        assert entry.arm_thr == scan_oracle(profile_map["cg-a"], platform, 8406.0) == 23

    def test_zero_pattern_matches_isolated_comparison(self, profiles, platform):
        for profile in profiles:
            entry = estimate_thresholds(profile, platform)
            assert (entry.fpga_thr == 0) == (
                profile.x86_exec_isolated_ms > profile.fpga_exec_total_ms
            )

    def test_entry_seeded_from_profile(self, profile_map, platform):
        p = profile_map["facedet320"]
        entry = estimate_thresholds(p, platform)
        assert entry.kernel_id == "KNL_HW_FD320"
        assert (entry.last_x86_exec, entry.last_arm_exec, entry.last_fpga_exec) == (
            175.0, 642.0, 332.0,
        )

    def test_fpga_hostile_profile_caps_at_max_load(self, platform):
        # x86 vastly faster than the hardware kernel: the threshold saturates,
        # i.e. migration is never predicted profitable within the scan range
        hostile = FunctionProfile(
            function_id="graph_walk", app_id="bfs1000",
            x86_exec_isolated_ms=3.36, arm_exec_total_ms=50_000.0,
            fpga_exec_total_ms=726.5,
            kernel=KernelResource("KNL_HW_BFS", 10.0, "graph_walk"),
        )
        entry = estimate_thresholds(hostile, platform, max_load=200)
        assert entry.fpga_thr == 200

    def test_agrees_with_oracle_on_random_corpus(self, platform):
        rng = random.Random(91)
        for _ in range(200):
            profile = FunctionProfile(
                function_id="f", app_id="synthetic",
                x86_exec_isolated_ms=rng.uniform(1, 5000),
                arm_exec_total_ms=rng.uniform(1, 20000),
                fpga_exec_total_ms=rng.uniform(1, 20000),
                kernel=KernelResource("k", 1.0, "f"),
            )
            entry = estimate_thresholds(profile, platform)
            assert entry.fpga_thr == scan_oracle(profile, platform, profile.fpga_exec_total_ms)
            assert entry.arm_thr == scan_oracle(profile, platform, profile.arm_exec_total_ms)

    def test_custom_cost_model_is_used(self, profile_map, platform):
        def flat_cost(profile, target, state, spec):
            return profile.x86_exec_isolated_ms  # load-independent

        entry = estimate_thresholds(profile_map["cg-a"], platform, cost_model=flat_cost)
        assert entry.fpga_thr == 200  # always fits the budget
        assert entry.arm_thr == 200


def entry(**overrides) -> ThresholdEntry:
    base = dict(
        app_id="app", kernel_id="k", fpga_thr=16, arm_thr=31,
        last_x86_exec=175.0, last_arm_exec=642.0, last_fpga_exec=332.0,
    )
    base.update(overrides)
    return ThresholdEntry(**base)


def rec(target, exec_ms, load, app="app"):
    return ExecutionRecord(
        app_id=app, target=target, exec_time_ms=exec_ms, load_at_start=load
    )


class TestUpdate:
    def test_x86_slower_than_fpga_lowers_fpga_threshold_to_load(self):
        updated = update_on_completion(entry(), rec(TargetKind.X86, 400.0, 10))
        assert updated.fpga_thr == 10
        assert updated.last_x86_exec == 400.0
        assert updated.arm_thr == 31

    def test_x86_slower_than_arm_lowers_arm_threshold(self):
        e = entry(fpga_thr=0, arm_thr=23, last_x86_exec=885.0)
        updated = update_on_completion(e, rec(TargetKind.X86, 3000.0, 12))
        # fpga branch blocked (load not below 0), arm branch fires
        assert updated.fpga_thr == 0
        assert updated.arm_thr == 12

    def test_x86_fast_run_only_records_time(self):
        updated = update_on_completion(entry(), rec(TargetKind.X86, 100.0, 3))
        assert (updated.fpga_thr, updated.arm_thr) == (16, 31)
        assert updated.last_x86_exec == 100.0

    def test_arm_slower_than_x86_raises_arm_threshold(self):
        e = entry(arm_thr=23, last_x86_exec=885.0)
        updated = update_on_completion(e, rec(TargetKind.ARM, 2991.0, 40))
        # hand trace of the raise rule: 23 + max(1, ceil(2.3)) = 26
        assert updated.arm_thr == 26
        assert updated.last_arm_exec == 2991.0

    def test_fpga_faster_than_x86_changes_nothing_but_record(self):
        e = entry(fpga_thr=0, last_x86_exec=3521.0)
        updated = update_on_completion(e, rec(TargetKind.FPGA, 1229.0, 50))
        assert (updated.fpga_thr, updated.arm_thr) == (0, 31)
        assert updated.last_fpga_exec == 1229.0

    def test_mismatched_app_rejected(self):
        with pytest.raises(ValueError):
            update_on_completion(entry(), rec(TargetKind.X86, 1.0, 0, app="other"))

    def test_increase_rule(self):
        assert increase_threshold(0) == 1
        assert increase_threshold(9) == 10
        assert increase_threshold(23) == 26
        assert increase_threshold(100) == 110

    def test_invariants_over_random_records(self):
        rng = random.Random(1234)
        targets = [TargetKind.X86, TargetKind.ARM, TargetKind.FPGA]
        e = entry()
        for _ in range(10_000):
            r = rec(rng.choice(targets), rng.uniform(0.1, 5000.0), rng.randint(0, 200))
            updated = update_on_completion(e, r)
            assert updated.fpga_thr >= 0 and updated.arm_thr >= 0
            if r.target is TargetKind.X86:
                # lowering only, and only to the observed load, strictly below
                for before, after in ((e.fpga_thr, updated.fpga_thr), (e.arm_thr, updated.arm_thr)):
                    assert after <= before
                    if after != before:
                        assert after == r.load_at_start and r.load_at_start < before
            elif r.target is TargetKind.ARM:
                assert updated.fpga_thr == e.fpga_thr
                assert updated.arm_thr >= e.arm_thr
            else:
                assert updated.arm_thr == e.arm_thr
                assert updated.fpga_thr >= e.fpga_thr
            e = updated


class TestTableFiles:
    def test_round_trip_identity(self, measured_table, tmp_path):
        path = str(tmp_path / "table.csv")
        table_store(measured_table, path)
        assert table_load(path) == measured_table

    def test_empty_file_is_empty_map(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        assert table_load(str(path)) == {}

    def test_negative_threshold_is_parse_error_with_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "app_id,kernel_id,fpga_thr,arm_thr,last_x86_exec,last_arm_exec,last_fpga_exec\n"
            "app,k,-1,5,1.0,1.0,1.0\n"
        )
        with pytest.raises(TableFormatError, match=":2"):
            table_load(str(path))

    def test_short_row_is_parse_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "app_id,kernel_id,fpga_thr,arm_thr,last_x86_exec,last_arm_exec,last_fpga_exec\n"
            "app,k,1\n"
        )
        with pytest.raises(TableFormatError, match=":2"):
            table_load(str(path))

    def test_duplicate_app_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        row = "app,k,1,2,1.0,1.0,1.0\n"
        path.write_text(
            "app_id,kernel_id,fpga_thr,arm_thr,last_x86_exec,last_arm_exec,last_fpga_exec\n"
            + row + row
        )
        with pytest.raises(TableFormatError, match="duplicate"):
            table_load(str(path))
