from __future__ import annotations

import random

import pytest

from xartrek.packing import (
    AssignmentError,
    ConfigImage,
    KernelResource,
    OversizedKernelError,
    PlanFormatError,
    pack_auto,
    pack_manual,
    plan_load,
    plan_load_text,
    plan_store,
    plan_store_text,
    plan_summary,
)


def kernels(**areas: float) -> list[KernelResource]:
    return [KernelResource(kernel_id=k, area=v, function_id=f"fn_{k}") for k, v in areas.items()]


def brute_force_min_images(areas: list[float], capacity: float) -> int:
    """Minimum feasible image count by exhaustive partition search (DP over
    subsets: fewest feasible blocks covering the full set)."""
    n = len(areas)
    if n == 0:
        return 0
    full = (1 << n) - 1
    feasible = [False] * (full + 1)
    for mask in range(1, full + 1):
        total = sum(areas[i] for i in range(n) if mask >> i & 1)
        feasible[mask] = total <= capacity
    best = [n + 1] * (full + 1)
    best[0] = 0
    for mask in range(1, full + 1):
        sub = mask
        while sub:
            if feasible[sub] and best[mask ^ sub] + 1 < best[mask]:
                best[mask] = best[mask ^ sub] + 1
            sub = (sub - 1) & mask
    return best[full]


class TestPackAuto:
    def test_everything_fits_one_image(self):
        plan = pack_auto(kernels(a=40, b=30, c=30), capacity=100)
        assert len(plan) == 1
        assert plan[0].image_id == "xclbin-0"
        assert plan[0].kernel_ids == {"a", "b", "c"}
        assert plan[0].total_area == 100

    def test_split_matches_brute_force_optimum(self):
        # optimal partition count for {60, 50, 40} at 100 is 2
        assert brute_force_min_images([60, 50, 40], 100) == 2
        plan = pack_auto(kernels(a=60, b=50, c=40), capacity=100)
        assert len(plan) == 2
        assert plan[0].kernel_ids == {"a", "c"}
        assert plan[1].kernel_ids == {"b"}

    def test_oversized_kernel_named_in_error(self):
        with pytest.raises(OversizedKernelError, match="'a'"):
            pack_auto(kernels(a=120), capacity=100)

    def test_deterministic_byte_for_byte(self, tmp_path):
        ks = kernels(a=7, b=7, c=13, d=29, e=5)
        first, second = pack_auto(ks, 30), pack_auto(list(reversed(ks)), 30)
        assert first == second
        p1, p2 = tmp_path / "p1.csv", tmp_path / "p2.csv"
        plan_store(first, str(p1))
        plan_store(second, str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_duplicate_kernel_id_rejected(self):
        dup = [KernelResource("k", 1.0, "f"), KernelResource("k", 2.0, "g")]
        with pytest.raises(AssignmentError):
            pack_auto(dup, 10)

    def test_fuzzed_instances_always_feasible(self):
        rng = random.Random(20240117)
        for _ in range(300):
            capacity = rng.randint(10, 100)
            ks = kernels(
                **{f"k{i}": rng.randint(1, capacity) for i in range(rng.randint(1, 20))}
            )
            plan = pack_auto(ks, capacity)
            packed = sorted(k.kernel_id for img in plan for k in img.kernels)
            assert packed == sorted(k.kernel_id for k in ks)  # no loss, no duplication
            assert all(img.total_area <= capacity for img in plan)


class TestPackManual:
    def test_explicit_grouping(self):
        plan = pack_manual({"a": "img1", "b": "img1"}, kernels(a=40, b=30), 100)
        assert len(plan) == 1 and plan[0].kernel_ids == {"a", "b"}

    def test_forced_split(self):
        plan = pack_manual({"a": "img1", "b": "img2"}, kernels(a=40, b=30), 100)
        assert [img.kernel_ids for img in plan] == [{"a"}, {"b"}]

    def test_over_capacity_names_image(self):
        with pytest.raises(AssignmentError, match="img1"):
            pack_manual({"a": "img1", "b": "img1"}, kernels(a=60, b=50), 100)

    def test_unassigned_kernel_rejected(self):
        with pytest.raises(AssignmentError, match="unassigned"):
            pack_manual({"a": "img1"}, kernels(a=10, b=10), 100)

    def test_unknown_kernel_rejected(self):
        with pytest.raises(AssignmentError, match="unknown"):
            pack_manual({"a": "img1", "z": "img1"}, kernels(a=10), 100)


class TestPlanSummary:
    def test_full_image(self):
        plan = [ConfigImage("xclbin-0", tuple(kernels(a=100)))]
        summary = plan_summary(plan, 100)
        assert summary.image_count == 1
        assert summary.rows[0][3] == 1.0

    def test_two_image_utilizations(self):
        plan = [
            ConfigImage("xclbin-0", tuple(kernels(a=100))),
            ConfigImage("xclbin-1", tuple(kernels(b=50))),
        ]
        summary = plan_summary(plan, 100)
        assert [row[3] for row in summary.rows] == [1.0, 0.5]
        assert "utilization" in summary.to_csv().splitlines()[0]

    def test_empty_plan(self):
        summary = plan_summary([], 100)
        assert summary.image_count == 0
        assert summary.to_csv().splitlines()[1:] == []


class TestPlanFiles:
    def test_csv_round_trip(self, tmp_path):
        plan = pack_auto(kernels(a=60, b=50, c=40), 100)
        path = str(tmp_path / "plan.csv")
        plan_store(plan, path)
        loaded = plan_load(path)
        assert [img.image_id for img in loaded] == [img.image_id for img in plan]
        assert [img.kernel_ids for img in loaded] == [img.kernel_ids for img in plan]

    def test_text_round_trip(self, tmp_path):
        plan = pack_auto(kernels(KNL_A=60, KNL_B=50), 100)
        path = str(tmp_path / "plan.ini")
        plan_store_text(plan, path)
        loaded = plan_load_text(path)
        assert [img.kernel_ids for img in loaded] == [img.kernel_ids for img in plan]

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("image,kernel\nx,y\n")
        with pytest.raises(PlanFormatError):
            plan_load(str(path))

    def test_bad_area_rejected_with_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("image_id,kernel_id,area\nimg,k,notanumber\n")
        with pytest.raises(PlanFormatError, match=":2"):
            plan_load(str(path))


def test_ffd_matches_brute_force_on_seeded_corpus():
    """On a fixed 200-instance corpus of <= 8 kernels, first-fit decreasing
    lands exactly on the exhaustive minimum image count."""
    rng = random.Random(7041)
    mismatches = []
    for case in range(200):
        capacity = rng.randint(20, 60)
        n = rng.randint(1, 8)
        areas = [rng.randint(1, capacity) for _ in range(n)]
        plan = pack_auto(kernels(**{f"k{i}": a for i, a in enumerate(areas)}), capacity)
        optimum = brute_force_min_images(areas, capacity)
        if len(plan) != optimum:
            mismatches.append((case, capacity, areas, len(plan), optimum))
    assert not mismatches, mismatches[:3]
