"""Grouping of hardware kernels into FPGA configuration images.

A configuration image bundles one or more kernels and is loaded onto the
FPGA as a unit; only the kernels of the loaded image are callable.  Each
kernel declares a single scalar ``area`` (abstract resource units) and a
plan is feasible when every image fits the platform's area capacity.

Automatic planning uses first-fit decreasing by area; manual planning
builds images from an explicit kernel -> image assignment.  Both are
deterministic: identical inputs yield identical plans.
"""

from __future__ import annotations

import configparser
import csv
import io
from dataclasses import dataclass


class PackingError(Exception):
    """Base class for planning failures."""


class OversizedKernelError(PackingError):
    """A single kernel exceeds the FPGA area capacity."""

    def __init__(self, kernel_id: str, area: float, capacity: float):
        super().__init__(
            f"kernel {kernel_id!r} needs {area} area units but capacity is {capacity}"
        )
        self.kernel_id = kernel_id


class AssignmentError(PackingError):
    """A manual assignment is incomplete, duplicated, or over capacity."""


class PlanFormatError(PackingError):
    """A plan file could not be parsed."""


@dataclass(frozen=True)
class KernelResource:
    """One synthesized function kernel and its resource footprint."""

    kernel_id: str
    area: float
    function_id: str

    def __post_init__(self):
        if not self.kernel_id:
            raise ValueError("kernel_id must be non-empty")
        if self.area <= 0:
            raise ValueError(f"kernel {self.kernel_id!r}: area must be > 0")


@dataclass(frozen=True)
class ConfigImage:
    """A loadable configuration image holding a fixed set of kernels."""

    image_id: str
    kernels: tuple[KernelResource, ...]

    @property
    def total_area(self) -> float:
        return sum(k.area for k in self.kernels)

    @property
    def kernel_ids(self) -> frozenset[str]:
        return frozenset(k.kernel_id for k in self.kernels)


def _check_unique(kernels: list[KernelResource]) -> None:
    seen: set[str] = set()
    for k in kernels:
        if k.kernel_id in seen:
            raise AssignmentError(f"kernel {k.kernel_id!r} appears more than once")
        seen.add(k.kernel_id)


def _sorted_members(kernels: list[KernelResource]) -> tuple[KernelResource, ...]:
    # canonical member order: area descending, ties by kernel_id
    return tuple(sorted(kernels, key=lambda k: (-k.area, k.kernel_id)))


def pack_auto(kernels: list[KernelResource], capacity: float) -> list[ConfigImage]:
    """Pack kernels into images by first-fit decreasing under ``capacity``.

    Image ids are ``xclbin-0``, ``xclbin-1``, ... in creation order.
    Raises :class:`OversizedKernelError` for any kernel that cannot fit
    even in an empty image.
    """
    if capacity <= 0:
        raise PackingError(f"capacity must be > 0, got {capacity}")
    _check_unique(list(kernels))
    for k in kernels:
        if k.area > capacity:
            raise OversizedKernelError(k.kernel_id, k.area, capacity)

    bins: list[list[KernelResource]] = []
    loads: list[float] = []
    for k in _sorted_members(list(kernels)):
        for i, load in enumerate(loads):
            if load + k.area <= capacity:
                bins[i].append(k)
                loads[i] += k.area
                break
        else:
            bins.append([k])
            loads.append(k.area)
    return [
        ConfigImage(image_id=f"xclbin-{i}", kernels=_sorted_members(members))
        for i, members in enumerate(bins)
    ]


def pack_manual(
    assignments: dict[str, str],
    kernels: list[KernelResource],
    capacity: float,
) -> list[ConfigImage]:
    """Build images from an explicit ``kernel_id -> image_id`` assignment.

    Every kernel must be assigned exactly once and every image must fit
    within ``capacity``.  Images are returned sorted by image_id.
    """
    if capacity <= 0:
        raise PackingError(f"capacity must be > 0, got {capacity}")
    _check_unique(list(kernels))
    by_id = {k.kernel_id: k for k in kernels}

    unknown = sorted(set(assignments) - set(by_id))
    if unknown:
        raise AssignmentError(f"assignment names unknown kernel(s): {', '.join(unknown)}")
    unassigned = sorted(set(by_id) - set(assignments))
    if unassigned:
        raise AssignmentError(f"unassigned kernel(s): {', '.join(unassigned)}")

    members: dict[str, list[KernelResource]] = {}
    for kernel_id in sorted(assignments):
        members.setdefault(assignments[kernel_id], []).append(by_id[kernel_id])

    images = []
    for image_id in sorted(members):
        area = sum(k.area for k in members[image_id])
        if area > capacity:
            raise AssignmentError(
                f"image {image_id!r} over capacity: {area} > {capacity}"
            )
        images.append(ConfigImage(image_id=image_id, kernels=_sorted_members(members[image_id])))
    return images


@dataclass(frozen=True)
class PlanSummary:
    """Image count plus per-image utilization against a capacity."""

    capacity: float
    rows: tuple[tuple[str, int, float, float], ...]  # (image_id, n_kernels, area, utilization)

    @property
    def image_count(self) -> int:
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["image_id", "kernels", "total_area", "utilization"])
        for image_id, n, area, util in self.rows:
            writer.writerow([image_id, n, area, util])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{self.image_count} image(s), capacity {self.capacity}"]
        for image_id, n, area, util in self.rows:
            lines.append(f"  {image_id}: {n} kernel(s), {area}/{self.capacity} used ({util:.1%})")
        return "\n".join(lines)


def plan_summary(plan: list[ConfigImage], capacity: float) -> PlanSummary:
    rows = tuple(
        (img.image_id, len(img.kernels), img.total_area, img.total_area / capacity)
        for img in plan
    )
    return PlanSummary(capacity=capacity, rows=rows)


PLAN_CSV_COLUMNS = ["image_id", "kernel_id", "area"]


def plan_store(plan: list[ConfigImage], path: str) -> None:
    """Write a plan as CSV with one row per (image, kernel)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PLAN_CSV_COLUMNS)
        for img in plan:
            for k in img.kernels:
                writer.writerow([img.image_id, k.kernel_id, k.area])


def plan_load(path: str) -> list[ConfigImage]:
    """Read a plan back from CSV.  function_id is not stored in plan files."""
    members: dict[str, list[KernelResource]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PLAN_CSV_COLUMNS:
            raise PlanFormatError(f"{path}: expected header {PLAN_CSV_COLUMNS}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise PlanFormatError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            image_id, kernel_id, area_text = row
            try:
                area = float(area_text)
            except ValueError:
                raise PlanFormatError(f"{path}:{lineno}: bad area {area_text!r}") from None
            members.setdefault(image_id, []).append(
                KernelResource(kernel_id=kernel_id, area=area, function_id="")
            )
    images = [
        ConfigImage(image_id=image_id, kernels=_sorted_members(members[image_id]))
        for image_id in sorted(members)
    ]
    _check_unique([k for img in images for k in img.kernels])
    return images


def _case_preserving_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # kernel ids are case-sensitive
    return parser


def plan_store_text(plan: list[ConfigImage], path: str) -> None:
    """Write a plan in the key-value section format used by profile files."""
    parser = _case_preserving_parser()
    for img in plan:
        parser[img.image_id] = {k.kernel_id: str(k.area) for k in img.kernels}
    with open(path, "w") as fh:
        parser.write(fh)


def plan_load_text(path: str) -> list[ConfigImage]:
    parser = _case_preserving_parser()
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise PlanFormatError(f"{path}: {exc}") from None
    if not read:
        raise PlanFormatError(f"cannot read plan file {path!r}")
    images = []
    for image_id in parser.sections():
        kernels = []
        for kernel_id, area_text in parser[image_id].items():
            try:
                area = float(area_text)
            except ValueError:
                raise PlanFormatError(
                    f"{path}: image {image_id!r}: bad area {area_text!r} for {kernel_id!r}"
                ) from None
            kernels.append(KernelResource(kernel_id=kernel_id, area=area, function_id=""))
        images.append(ConfigImage(image_id=image_id, kernels=_sorted_members(kernels)))
    images.sort(key=lambda img: img.image_id)
    _check_unique([k for img in images for k in img.kernels])
    return images
