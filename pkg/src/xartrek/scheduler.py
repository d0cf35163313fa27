"""Per-request migration decision and FPGA configuration state machine.

``decide`` encodes the scheduling policy as a single total case analysis
over (load vs thresholds, kernel availability):

  (a) load <= arm_thr and load <= fpga_thr      -> stay on x86
  (b) arm_thr < load <= fpga_thr                -> ARM
  (c) load > fpga_thr, kernel available         -> FPGA if fpga_thr < arm_thr
                                                   else ARM (smaller threshold
                                                   implies the faster target)
  (d) load > fpga_thr, kernel absent, load <= arm_thr
                                                -> stay on x86 + reconfigure
  (e) load > fpga_thr, kernel absent, load > arm_thr
                                                -> ARM + reconfigure

The cases are pairwise exclusive and cover every input, so the decision
is pure and deterministic.  Reconfiguration directives are hints: the
caller starts them via :meth:`FpgaState.begin_reconfiguration`, which
drops the request when one is already in flight (the policy re-evaluates
on every request, so a dropped request retries naturally).  While a
reconfiguration is in flight, availability queries return the stale
pre-reconfiguration kernel set; that is what hides the latency: requests
keep landing on CPUs until the new image is actually loaded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import PlatformSpec
from .packing import ConfigImage
from .thresholds import ThresholdEntry

FLAG_X86 = 0
FLAG_ARM = 1
FLAG_FPGA = 2

_TIME_EPS_MS = 1e-6


class SchedulerError(Exception):
    pass


class UnknownKernelError(SchedulerError):
    """The requested kernel is not part of any image in the plan."""


class UnknownImageError(SchedulerError):
    """Reconfiguration requested for an image that is not in the plan."""


class ReconfigStateError(SchedulerError):
    """complete_reconfiguration called while idle or before completion time."""


@dataclass(frozen=True)
class MigrationDecision:
    """Target flag plus an optional reconfiguration directive."""

    flag: int
    reconfigure: str | None = None

    def __post_init__(self):
        if self.flag not in (FLAG_X86, FLAG_ARM, FLAG_FPGA):
            raise ValueError(f"flag must be 0, 1, or 2, got {self.flag}")
        if self.flag == FLAG_FPGA and self.reconfigure is not None:
            raise ValueError("a decision for the FPGA cannot carry a reconfigure directive")


@dataclass
class FpgaState:
    """Loaded image, kernel availability, and the in-flight reconfiguration.

    Owned by a single event loop; all mutations go through
    ``begin_reconfiguration``/``complete_reconfiguration``.  Times are in
    milliseconds on whatever clock the owner uses consistently.
    """

    plan: list[ConfigImage]
    loaded_image: str | None = None
    available_kernels: frozenset[str] = field(default_factory=frozenset)
    reconfiguring: tuple[str, float] | None = None  # (target image, completion time)

    def __post_init__(self):
        self._images = {img.image_id: img for img in self.plan}
        if len(self._images) != len(self.plan):
            raise ValueError("duplicate image_id in plan")
        seen: set[str] = set()
        for img in self.plan:
            dup = seen & img.kernel_ids
            if dup:
                raise ValueError(f"kernel(s) {sorted(dup)} appear in more than one image")
            seen |= img.kernel_ids
        if self.loaded_image is not None:
            if self.loaded_image not in self._images:
                raise UnknownImageError(f"preloaded image {self.loaded_image!r} not in plan")
            self.available_kernels = self._images[self.loaded_image].kernel_ids

    def image_for(self, kernel_id: str) -> str:
        """Image holding ``kernel_id``; lowest image_id wins if several do."""
        candidates = sorted(
            img.image_id for img in self.plan if kernel_id in img.kernel_ids
        )
        if not candidates:
            raise UnknownKernelError(f"kernel {kernel_id!r} is not in any image of the plan")
        return candidates[0]

    def query_kernels(self) -> frozenset[str]:
        return self.available_kernels

    @property
    def busy(self) -> bool:
        return self.reconfiguring is not None

    def begin_reconfiguration(self, image_id: str, now_ms: float, spec: PlatformSpec) -> bool:
        """Start loading ``image_id``; returns False (busy signal, request
        dropped) when a reconfiguration is already in flight.

        Kernel availability does not change until completion.
        """
        if image_id not in self._images:
            raise UnknownImageError(f"image {image_id!r} not in plan")
        if self.reconfiguring is not None:
            return False
        self.reconfiguring = (image_id, now_ms + spec.reconfig_latency_ms)
        return True

    def complete_reconfiguration(self, now_ms: float) -> None:
        if self.reconfiguring is None:
            raise ReconfigStateError("no reconfiguration in flight")
        image_id, done_ms = self.reconfiguring
        if now_ms < done_ms - _TIME_EPS_MS:
            raise ReconfigStateError(
                f"reconfiguration completes at {done_ms} ms, called at {now_ms} ms"
            )
        self.loaded_image = image_id
        self.available_kernels = self._images[image_id].kernel_ids
        self.reconfiguring = None


def decide(load: int, entry: ThresholdEntry, fpga: FpgaState) -> MigrationDecision:
    """The scheduling policy for one request; see the module docstring."""
    if load < 0:
        raise ValueError("load must be >= 0")
    available = entry.kernel_id in fpga.available_kernels

    if load <= entry.arm_thr and load <= entry.fpga_thr:
        return MigrationDecision(FLAG_X86)
    if load > entry.arm_thr and load <= entry.fpga_thr:
        return MigrationDecision(FLAG_ARM)

    # load > fpga_thr from here on
    if available:
        if entry.fpga_thr < entry.arm_thr:
            return MigrationDecision(FLAG_FPGA)
        return MigrationDecision(FLAG_ARM)

    image = fpga.image_for(entry.kernel_id)
    if load <= entry.arm_thr:
        return MigrationDecision(FLAG_X86, reconfigure=image)
    return MigrationDecision(FLAG_ARM, reconfigure=image)
