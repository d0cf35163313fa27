from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from xartrek.model import (
    FunctionProfile,
    LoadClass,
    NoKernelError,
    PlatformSpec,
    ProfileFormatError,
    SystemState,
    TargetKind,
    classify_load,
    exec_time,
    kernels_of,
    platform_load,
    platform_store,
    profiles_load,
    profiles_store,
    sample_load,
)
from xartrek.packing import KernelResource


def state(n_x86=0, n_arm=0):
    return SystemState(runnable_x86_processes=n_x86, runnable_arm_processes=n_arm)


def test_target_kind_values_are_migration_flags():
    assert [int(t) for t in TargetKind] == [0, 1, 2]
    assert len(TargetKind) == 3


class TestExecTime:
    def test_isolated_x86_is_calibrated_value(self, profile_map, platform):
        assert exec_time(profile_map["cg-a"], TargetKind.X86, state(1), platform) == 2182.0

    def test_x86_below_core_count_has_no_contention(self, profile_map, platform):
        assert exec_time(profile_map["cg-a"], TargetKind.X86, state(6), platform) == 2182.0

    def test_x86_processor_sharing_scales_linearly(self, profile_map, platform):
        # 2182 * 30/6, checked against independent arithmetic
        assert exec_time(profile_map["cg-a"], TargetKind.X86, state(30), platform) == 10910.0

    def test_isolated_matches_profile_for_all_targets(self, profile_map, platform):
        p = profile_map["digit2000"]
        assert exec_time(p, TargetKind.X86, state(1), platform) == p.x86_exec_isolated_ms
        assert exec_time(p, TargetKind.ARM, state(0, 1), platform) == p.arm_exec_total_ms
        assert exec_time(p, TargetKind.FPGA, state(), platform) == p.fpga_exec_total_ms

    def test_fpga_ignores_cpu_load(self, profile_map, platform):
        p = profile_map["facedet320"]
        assert exec_time(p, TargetKind.FPGA, state(120, 96), platform) == 332.0

    def test_missing_kernel_raises(self, platform):
        bare = FunctionProfile(
            function_id="f", app_id="a",
            x86_exec_isolated_ms=10.0, arm_exec_total_ms=20.0, fpga_exec_total_ms=30.0,
        )
        with pytest.raises(NoKernelError):
            exec_time(bare, TargetKind.FPGA, state(), platform)

    def test_overheads_added_unscaled(self, profile_map):
        spec = PlatformSpec(ethernet_migration_overhead_ms=7.0, pcie_transfer_overhead_ms=3.0)
        p = profile_map["facedet320"]
        assert exec_time(p, TargetKind.ARM, state(0, 192), spec) == 642.0 * 2 + 7.0
        assert exec_time(p, TargetKind.FPGA, state(), spec) == 332.0 + 3.0

    @given(st.integers(0, 400), st.integers(0, 400))
    def test_monotone_in_runnable_count_for_cpus(self, n1, n2):
        platform = PlatformSpec()
        p = FunctionProfile(
            function_id="f", app_id="a",
            x86_exec_isolated_ms=100.0, arm_exec_total_ms=200.0, fpga_exec_total_ms=300.0,
            kernel=KernelResource("k", 1.0, "f"),
        )
        lo, hi = sorted((n1, n2))
        assert exec_time(p, TargetKind.X86, state(lo), platform) <= exec_time(
            p, TargetKind.X86, state(hi), platform
        )
        assert exec_time(p, TargetKind.ARM, state(0, lo), platform) <= exec_time(
            p, TargetKind.ARM, state(0, hi), platform
        )
        assert exec_time(p, TargetKind.FPGA, state(lo, lo), platform) == exec_time(
            p, TargetKind.FPGA, state(hi, hi), platform
        )


class TestLoad:
    def test_sample_load_empty_system(self):
        assert sample_load(state(0)) == 0

    def test_sample_load_is_runnable_count(self):
        assert sample_load(state(60)) == 60
        assert sample_load(state(120)) == 120

    def test_classify_examples(self, platform):
        assert classify_load(5, platform) is LoadClass.LOW
        assert classify_load(60, platform) is LoadClass.MEDIUM
        assert classify_load(120, platform) is LoadClass.HIGH

    def test_boundaries_are_medium(self, platform):
        assert classify_load(6, platform) is LoadClass.MEDIUM
        assert classify_load(102, platform) is LoadClass.MEDIUM
        assert classify_load(103, platform) is LoadClass.HIGH

    @given(st.integers(0, 1000))
    def test_classification_is_a_partition(self, n):
        platform = PlatformSpec()
        cls = classify_load(n, platform)
        expected = (
            LoadClass.LOW
            if n < platform.x86_cores
            else LoadClass.MEDIUM
            if n <= platform.x86_cores + platform.arm_cores
            else LoadClass.HIGH
        )
        assert cls is expected


class TestValidation:
    def test_profile_rejects_nonpositive_durations(self):
        with pytest.raises(ValueError):
            FunctionProfile(
                function_id="f", app_id="a",
                x86_exec_isolated_ms=0.0, arm_exec_total_ms=1.0, fpga_exec_total_ms=1.0,
            )

    def test_platform_rejects_zero_x86_cores(self):
        with pytest.raises(ValueError):
            PlatformSpec(x86_cores=0)

    def test_state_rejects_negative_counts(self):
        with pytest.raises(ValueError):
            SystemState(runnable_x86_processes=-1)


class TestProfileFiles:
    def test_round_trip(self, profiles, tmp_path):
        path = str(tmp_path / "profiles.ini")
        profiles_store(profiles, path)
        assert profiles_load(path) == profiles

    def test_kernel_without_area_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[app]\nx86_ms = 1\narm_ms = 2\nfpga_ms = 3\nkernel = K\n")
        with pytest.raises(ProfileFormatError):
            profiles_load(str(path))

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[app]\nx86_ms = 1\narm_ms = 2\nfpga_ms = 3\nbogus = 9\n")
        with pytest.raises(ProfileFormatError):
            profiles_load(str(path))

    def test_kernels_deduplicated_by_id(self, profiles):
        kernels = kernels_of(profiles)
        assert sorted(k.kernel_id for k in kernels) == [
            "KNL_HW_CG_A", "KNL_HW_DR200", "KNL_HW_DR500", "KNL_HW_FD320", "KNL_HW_FD640",
        ]

    def test_platform_round_trip(self, platform, tmp_path):
        path = str(tmp_path / "platform.ini")
        platform_store(platform, path)
        assert platform_load(path) == platform
