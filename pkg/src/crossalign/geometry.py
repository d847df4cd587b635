"""Axis-aligned crop geometry: boxes, IoU, random crop sampling, and the
overlap-filtered view queue.

All coordinates are fractions of the image, so every box lives inside the
unit square and the geometry is resolution independent.  The view queue
admits a candidate crop only while its IoU against every box already held
stays below a threshold; when the sampling budget runs out before the queue
is full, the remaining slots are filled by cycling copies of the boxes
already admitted, and the copy count is reported as ``fallback_count``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

import numpy as np

from .rng import SplitMix64

T = TypeVar("T")


@dataclass(frozen=True)
class BoundingBox:
    """Crop rectangle in fractional coordinates, corners (x0, y0)-(x1, y1)."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        ok = 0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0
        if not ok:
            raise ValueError(
                "box must satisfy 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1, got "
                f"({self.x0}, {self.y0}, {self.x1}, {self.y1})"
            )

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def to_json(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def from_json(cls, coords: Sequence[float]) -> "BoundingBox":
        x0, y0, x1, y1 = coords
        return cls(float(x0), float(y0), float(x1), float(y1))


FULL_FRAME = BoundingBox(0.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class CropWindow:
    """Side-length bounds for random crops; each side is drawn from [alpha, beta]."""

    alpha: float = 0.5
    beta: float = 0.9

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= self.beta <= 1.0):
            raise ValueError(
                f"crop window needs 0 < alpha <= beta <= 1, got alpha={self.alpha} beta={self.beta}"
            )


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; touching edges count as disjoint."""
    ix0 = max(a.x0, b.x0)
    iy0 = max(a.y0, b.y0)
    ix1 = min(a.x1, b.x1)
    iy1 = min(a.y1, b.y1)
    iw = ix1 - ix0
    ih = iy1 - iy0
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def sample_crop(rng: SplitMix64, window: CropWindow) -> BoundingBox:
    """Draw one crop box from the window.

    Width and height are independent uniforms on [alpha, beta]; the top-left
    corner is then uniform over positions that keep the box inside the unit
    square.  Consumes exactly four generator words, in the order
    w, h, x0, y0.
    """
    w = rng.uniform(window.alpha, window.beta)
    h = rng.uniform(window.alpha, window.beta)
    x0 = rng.uniform(0.0, 1.0 - w)
    y0 = rng.uniform(0.0, 1.0 - h)
    # min() guards the <= 1 bound against the last-ulp rounding of x0 + w.
    return BoundingBox(x0, y0, min(x0 + w, 1.0), min(y0 + h, 1.0))


class ViewQueue:
    """Fixed-capacity ordered collection of crop boxes with a pairwise IoU bound.

    Boxes that came through the overlap filter occupy the first
    ``admitted_count`` slots in admission order; any slots after that hold
    duplicate-fallback copies cycled from the admitted prefix.
    """

    def __init__(self, capacity: int, threshold_eta: float) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        if not (0.0 < threshold_eta <= 1.0):
            raise ValueError(f"threshold eta must be in (0, 1], got {threshold_eta}")
        self.capacity = capacity
        self.threshold_eta = threshold_eta
        self.boxes: list[BoundingBox] = []
        self.fallback_count = 0
        self.attempts_used = 0
        self.iou_comparisons = 0
        self._coords = np.empty((capacity, 4), dtype=np.float64)
        self._areas = np.empty(capacity, dtype=np.float64)
        self._admitted = 0

    @property
    def admitted_count(self) -> int:
        """Number of boxes that passed the filter (excludes fallback copies)."""
        return self._admitted

    def ious_against(self, box: BoundingBox) -> np.ndarray:
        """IoU of ``box`` against every admitted box, vectorized."""
        n = self._admitted
        c = self._coords[:n]
        ix0 = np.maximum(c[:, 0], box.x0)
        iy0 = np.maximum(c[:, 1], box.y0)
        ix1 = np.minimum(c[:, 2], box.x1)
        iy1 = np.minimum(c[:, 3], box.y1)
        iw = np.clip(ix1 - ix0, 0.0, None)
        ih = np.clip(iy1 - iy0, 0.0, None)
        inter = iw * ih
        return inter / (self._areas[:n] + box.area - inter)

    def accepts(self, box: BoundingBox) -> bool:
        """True iff IoU(box, held) < eta for every box currently held."""
        self.iou_comparisons += self._admitted
        if self._admitted == 0:
            return True
        return bool(np.all(self.ious_against(box) < self.threshold_eta))

    def admit(self, box: BoundingBox) -> None:
        if len(self.boxes) >= self.capacity:
            raise ValueError("queue is full")
        self._coords[self._admitted] = (box.x0, box.y0, box.x1, box.y1)
        self._areas[self._admitted] = box.area
        self._admitted += 1
        self.boxes.append(box)

    def admit_fallback(self, box: BoundingBox) -> None:
        """Append a duplicate-fallback copy; it is exempt from the IoU bound."""
        if len(self.boxes) >= self.capacity:
            raise ValueError("queue is full")
        self.boxes.append(box)
        self.fallback_count += 1

    def to_json_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "eta": self.threshold_eta,
            "fallback_count": self.fallback_count,
            "attempts_used": self.attempts_used,
            "boxes": [b.to_json() for b in self.boxes],
        }


def vr_accept(candidate: BoundingBox, queue: ViewQueue) -> bool:
    """Admission test for view refinement: every held box must overlap the
    candidate with IoU strictly below the queue threshold.  Vacuously true
    on an empty queue."""
    return queue.accepts(candidate)


def admit_stream(
    stream: Iterable[T],
    box_of: Callable[[T], BoundingBox],
    threshold_eta: float,
    capacity: int,
    max_attempts: int,
) -> tuple[ViewQueue, list[T]]:
    """Run the admission loop over an arbitrary candidate stream.

    Consumes items until the queue is full or ``max_attempts`` candidates
    have been examined (or the stream ends), then tops the queue up with
    duplicate-fallback copies cycled through the admitted items in admission
    order.  Returns the queue and the per-slot payload list, aligned with
    ``queue.boxes``.
    """
    if max_attempts < capacity:
        raise ValueError(
            f"max_attempts ({max_attempts}) must be at least capacity ({capacity})"
        )
    queue = ViewQueue(capacity, threshold_eta)
    payloads: list[T] = []
    it = iter(stream)
    while len(queue.boxes) < capacity and queue.attempts_used < max_attempts:
        try:
            item = next(it)
        except StopIteration:
            break
        queue.attempts_used += 1
        box = box_of(item)
        if queue.accepts(box):
            queue.admit(box)
            payloads.append(item)
    admitted = queue.admitted_count
    if admitted == 0 and len(queue.boxes) < capacity:
        raise ValueError("candidate stream yielded no admissible box")
    i = 0
    while len(queue.boxes) < capacity:
        queue.admit_fallback(queue.boxes[i % admitted])
        payloads.append(payloads[i % admitted])
        i += 1
    return queue, payloads


def fill_from_candidates(
    candidates: Iterable[BoundingBox],
    threshold_eta: float,
    capacity: int,
    max_attempts: int,
) -> ViewQueue:
    """Fill a view queue from a pre-built candidate box sequence."""
    queue, _ = admit_stream(candidates, lambda b: b, threshold_eta, capacity, max_attempts)
    return queue


def fill_view_queue(
    rng: SplitMix64 | int,
    window: CropWindow,
    threshold_eta: float,
    capacity: int,
    max_attempts: int | None = None,
) -> ViewQueue:
    """Sample random crops until ``capacity`` boxes clear the IoU filter.

    ``rng`` may be a generator or a bare seed.  ``max_attempts`` defaults to
    ten times the capacity; exhausting it triggers the duplicate-fallback
    fill, so the queue always comes back full.
    """
    gen = SplitMix64(rng) if isinstance(rng, int) else rng
    if max_attempts is None:
        max_attempts = 10 * capacity

    def stream() -> Iterator[BoundingBox]:
        while True:
            yield sample_crop(gen, window)

    return fill_from_candidates(stream(), threshold_eta, capacity, max_attempts)


def grid_boxes(g: int) -> list[BoundingBox]:
    """Partition the unit square into a g-by-g tiling, row-major order."""
    if g < 1:
        raise ValueError(f"grid resolution must be >= 1, got {g}")
    cells = []
    for row in range(g):
        for col in range(g):
            cells.append(
                BoundingBox(col / g, row / g, (col + 1) / g, (row + 1) / g)
            )
    return cells
