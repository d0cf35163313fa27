"""Bundled reference profiles and the default platform.

The five reference benchmarks are the calibrated AI/vision and HPC
workloads used throughout the experiment suites; times are end-to-end
milliseconds per call.  ``facedet320-multi`` is the multi-image variant
of the 320x240 face detector (same kernel, many calls per run) used by
the throughput experiments.  Kernel areas are abstract resource units
sized so the default plan fits one configuration image.
"""

from __future__ import annotations

from .model import FunctionProfile, PlatformSpec, platform_store, profiles_store
from .packing import KernelResource


def default_platform() -> PlatformSpec:
    return PlatformSpec(
        x86_cores=6,
        arm_cores=96,
        fpga_area_capacity=100.0,
        reconfig_latency_ms=2000.0,
        load_sampler_period_ms=100.0,
    )


def _profile(app, function, x86, arm, fpga, kernel, area, calls=1):
    return FunctionProfile(
        function_id=function,
        app_id=app,
        x86_exec_isolated_ms=x86,
        arm_exec_total_ms=arm,
        fpga_exec_total_ms=fpga,
        kernel=KernelResource(kernel_id=kernel, area=area, function_id=function),
        calls_per_run=calls,
    )


def reference_profiles() -> list[FunctionProfile]:
    return [
        _profile("cg-a", "conj_grad", 2182.0, 8406.0, 10597.0, "KNL_HW_CG_A", 30.0),
        _profile("facedet320", "face_detect", 175.0, 642.0, 332.0, "KNL_HW_FD320", 18.0),
        _profile("facedet640", "face_detect", 885.0, 2991.0, 832.0, "KNL_HW_FD640", 26.0),
        _profile("digit500", "digit_rec", 883.0, 2281.0, 470.0, "KNL_HW_DR500", 12.0),
        _profile("digit2000", "digit_rec", 3521.0, 8963.0, 1229.0, "KNL_HW_DR200", 14.0),
        _profile(
            "facedet320-multi", "face_detect", 175.0, 642.0, 332.0,
            "KNL_HW_FD320", 18.0, calls=1000,
        ),
    ]


def benchmark_apps() -> list[str]:
    """The five single-call benchmarks used for randomized application sets."""
    return ["cg-a", "facedet320", "facedet640", "digit500", "digit2000"]


def write_reference_files(profiles_path: str, platform_path: str) -> None:
    """Emit the bundled data as editable input files for the CLI."""
    profiles_store(reference_profiles(), profiles_path)
    platform_store(default_platform(), platform_path)
