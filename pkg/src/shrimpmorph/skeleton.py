"""Virtual skeleton definition and pixel measurement extraction.

The skeleton is an ordered set of up to 23 keypoints: indices 1-9 run along
the body axis (1 = rostrum tip, 2 = back of the head, 9 = tail tip) and
indices 10-23 form seven transverse pairs sitting on the silhouette boundary.
Every morphological variable is the Euclidean pixel distance between two
keypoints; the endpoint assignment lives in one declarative table
(``MEASUREMENT_TABLE``) so a correction is a one-line change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable

from .errors import MissingKeypoint, UnitMismatch


class View(Enum):
    LATERAL = "lateral"
    DORSAL = "dorsal"


class RostrumState(Enum):
    INTACT = "intact"
    BROKEN = "broken"


class AxisClass(Enum):
    LENGTH = "length"
    HEIGHT = "height"
    WIDTH = "width"


class Unit(Enum):
    PIXELS = "px"
    CENTIMETERS = "cm"


LONGITUDINAL_INDICES = tuple(range(1, 10))
TRANSVERSE_PAIRS = tuple((i, i + 1) for i in range(10, 23, 2))


@dataclass(frozen=True)
class Keypoint:
    index: int
    x: float
    y: float
    visible: bool = True


@dataclass(frozen=True)
class VirtualSkeleton:
    view: View
    rostrum: RostrumState
    keypoints: tuple[Keypoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "keypoints", tuple(self.keypoints))

    def expected_indices(self) -> tuple[int, ...]:
        start = 1 if self.rostrum is RostrumState.INTACT else 2
        return tuple(range(start, 24))

    def keypoint(self, index: int) -> Keypoint | None:
        for kp in self.keypoints:
            if kp.index == index:
                return kp
        return None

    @property
    def variant(self) -> str:
        n = 23 if self.rostrum is RostrumState.INTACT else 22
        return f"{self.view.value}-{n}"


@dataclass(frozen=True)
class MeasurementDefinition:
    name: str
    endpoints: tuple[int, int]
    axis_class: AxisClass
    views: frozenset[View]


@dataclass
class MeasurementSet:
    unit: Unit
    values: dict[str, float]
    clamped: frozenset[str] = field(default_factory=frozenset)


def _lengths() -> list[MeasurementDefinition]:
    both = frozenset({View.LATERAL, View.DORSAL})
    defs = [
        MeasurementDefinition("total", (1, 9), AxisClass.LENGTH, both),
        MeasurementDefinition("abdomen", (2, 9), AxisClass.LENGTH, both),
        MeasurementDefinition("l_head", (1, 2), AxisClass.LENGTH, both),
    ]
    for k in range(1, 7):
        defs.append(
            MeasurementDefinition(f"l_{k}seg", (k + 1, k + 2), AxisClass.LENGTH, both)
        )
    return defs


def _transverse(prefix: str, axis: AxisClass, view: View) -> list[MeasurementDefinition]:
    names = [f"{prefix}_head"] + [f"{prefix}_{k}seg" for k in range(1, 7)]
    return [
        MeasurementDefinition(name, pair, axis, frozenset({view}))
        for name, pair in zip(names, TRANSVERSE_PAIRS)
    ]


MEASUREMENT_TABLE: tuple[MeasurementDefinition, ...] = tuple(
    _lengths()
    + _transverse("h", AxisClass.HEIGHT, View.LATERAL)
    + _transverse("w", AxisClass.WIDTH, View.DORSAL)
)

VARIABLE_NAMES: tuple[str, ...] = tuple(d.name for d in MEASUREMENT_TABLE)


def measurement_table(view: View, rostrum: RostrumState) -> list[MeasurementDefinition]:
    """Applicable measurement definitions for a view/rostrum variant.

    A broken rostrum removes keypoint 1, which takes ``total`` and ``l_head``
    with it.
    """
    defs = [d for d in MEASUREMENT_TABLE if view in d.views]
    if rostrum is RostrumState.BROKEN:
        defs = [d for d in defs if 1 not in d.endpoints]
    return defs


def extract_pixel_measurements(skel: VirtualSkeleton) -> MeasurementSet:
    """Euclidean pixel distance for every variable applicable to ``skel``."""
    values: dict[str, float] = {}
    for d in measurement_table(skel.view, skel.rostrum):
        pts = []
        for idx in d.endpoints:
            kp = skel.keypoint(idx)
            if kp is None or not kp.visible:
                raise MissingKeypoint(
                    f"variable {d.name!r} needs keypoint {idx}, which is "
                    f"{'absent' if kp is None else 'not visible'}"
                )
            pts.append(kp)
        a, b = pts
        values[d.name] = math.hypot(a.x - b.x, a.y - b.y)
    return MeasurementSet(unit=Unit.PIXELS, values=values)


def validate_skeleton(skel: VirtualSkeleton) -> list[str]:
    """Return a description of every violated skeleton invariant."""
    violations: list[str] = []
    expected = set(skel.expected_indices())
    seen: set[int] = set()
    for kp in skel.keypoints:
        if kp.index in seen:
            violations.append(f"duplicate keypoint index {kp.index}")
        seen.add(kp.index)
        if kp.index not in expected:
            violations.append(
                f"keypoint index {kp.index} not allowed for "
                f"{skel.view.value}/{skel.rostrum.value} skeleton"
            )
        if not (math.isfinite(kp.x) and math.isfinite(kp.y)):
            violations.append(f"keypoint {kp.index} has non-finite coordinates")
        elif kp.x < 0 or kp.y < 0:
            violations.append(f"keypoint {kp.index} has negative coordinates")
    missing = expected - seen
    for idx in sorted(missing):
        violations.append(f"missing keypoint index {idx}")
    return violations


def scale_measurements(m: MeasurementSet, factor: float, unit: Unit) -> MeasurementSet:
    """Multiply every value by ``factor`` and relabel the unit."""
    return MeasurementSet(unit=unit, values={k: v * factor for k, v in m.values.items()})


def require_unit(m: MeasurementSet, unit: Unit) -> None:
    if m.unit is not unit:
        raise UnitMismatch(f"expected {unit.value} measurements, got {m.unit.value}")


def format_measurement_table(defs: Iterable[MeasurementDefinition] | None = None) -> str:
    """Human-readable text table of the measurement definitions."""
    defs = list(defs) if defs is not None else list(MEASUREMENT_TABLE)
    header = f"{'variable':<10} {'endpoints':<10} {'axis':<8} views"
    lines = [header, "-" * len(header)]
    for d in defs:
        views = ",".join(sorted(v.value for v in d.views))
        lines.append(
            f"{d.name:<10} {d.endpoints[0]:>2} -{d.endpoints[1]:>3}   "
            f"{d.axis_class.value:<8} {views}"
        )
    return "\n".join(lines) + "\n"


def transform_skeleton(skel: VirtualSkeleton, fn) -> VirtualSkeleton:
    """Apply a coordinate transform ``(x, y) -> (x', y')`` to every keypoint."""
    kps = tuple(
        replace(kp, x=fn(kp.x, kp.y)[0], y=fn(kp.x, kp.y)[1]) for kp in skel.keypoints
    )
    return replace(skel, keypoints=kps)
