from __future__ import annotations

import pytest

from xartrek import defaults
from xartrek.thresholds import ThresholdEntry


@pytest.fixture(scope="session")
def platform():
    return defaults.default_platform()


@pytest.fixture(scope="session")
def profiles():
    return defaults.reference_profiles()


@pytest.fixture(scope="session")
def profile_map(profiles):
    return {p.app_id: p for p in profiles}


def measured_entries() -> dict[str, ThresholdEntry]:
    """The hardware-measured threshold table for the five benchmarks, used
    as a fixed fixture for policy tests (not produced by our cost model)."""
    rows = [
        ("cg-a", "KNL_HW_CG_A", 31, 25, 2182.0, 8406.0, 10597.0),
        ("facedet320", "KNL_HW_FD320", 16, 31, 175.0, 642.0, 332.0),
        ("facedet640", "KNL_HW_FD640", 0, 23, 885.0, 2991.0, 832.0),
        ("digit500", "KNL_HW_DR500", 0, 18, 883.0, 2281.0, 470.0),
        ("digit2000", "KNL_HW_DR200", 0, 17, 3521.0, 8963.0, 1229.0),
    ]
    return {
        app: ThresholdEntry(
            app_id=app, kernel_id=kernel, fpga_thr=fpga, arm_thr=arm,
            last_x86_exec=x86, last_arm_exec=arm_ms, last_fpga_exec=fpga_ms,
        )
        for app, kernel, fpga, arm, x86, arm_ms, fpga_ms in rows
    }


@pytest.fixture(scope="session")
def measured_table():
    return measured_entries()
