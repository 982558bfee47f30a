"""Exact axis-aligned rectangle geometry for placed modules.

Overlap sets are unions of pairwise intersections of placed rectangles. Their
areas are computed exactly by coordinate compression: the x/y breakpoints of
all intersection rectangles cut the plane into cells that are either fully
covered or fully empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ErosionTooLarge, InfeasibleBox
from .wirelength import Netlist


@dataclass(frozen=True)
class ModuleShape:
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"module dimensions must be positive: {self}")

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.width + self.height)

    @property
    def inradius(self) -> float:
        return 0.5 * min(self.width, self.height)


@dataclass(frozen=True)
class AxisRect:
    left: float
    right: float
    bottom: float
    top: float

    @property
    def area(self) -> float:
        return max(self.right - self.left, 0.0) * max(self.top - self.bottom, 0.0)

    def as_tuple(self):
        return (self.left, self.right, self.bottom, self.top)


@dataclass(frozen=True)
class Design:
    """Static problem instance: module shapes, domain [0,W]x[0,H], netlist."""

    modules: tuple[ModuleShape, ...]
    width: float
    height: float
    netlist: Netlist = field(default_factory=Netlist)

    def __post_init__(self):
        object.__setattr__(self, "modules", tuple(self.modules))
        if not (self.width > 0 and self.height > 0):
            raise ValueError("domain dimensions must be positive")
        self.netlist.check(len(self.modules))

    @classmethod
    def from_sizes(cls, sizes, width, height, netlist: Netlist | None = None):
        mods = tuple(ModuleShape(float(w), float(h)) for w, h in sizes)
        return cls(mods, float(width), float(height), netlist or Netlist())

    def __len__(self):
        return len(self.modules)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([[m.width, m.height] for m in self.modules], dtype=float).reshape(-1, 2)

    @property
    def areas(self) -> np.ndarray:
        return np.array([m.area for m in self.modules], dtype=float)

    @property
    def domain_area(self) -> float:
        return self.width * self.height

    @property
    def mean_density(self) -> float:
        return float(self.areas.sum() / self.domain_area)

    @property
    def min_inradius(self) -> float:
        return min(m.inradius for m in self.modules) if self.modules else np.inf

    def fits(self) -> bool:
        return all(m.width <= self.width and m.height <= self.height for m in self.modules)

    def check_fits(self) -> None:
        for i, m in enumerate(self.modules):
            if m.width > self.width or m.height > self.height:
                raise InfeasibleBox(
                    f"module {i} ({m.width}x{m.height}) does not fit in "
                    f"{self.width}x{self.height}"
                )

    def with_sizes(self, sizes) -> "Design":
        return Design.from_sizes(sizes, self.width, self.height, self.netlist)


def as_placement(placement, n: int | None = None) -> np.ndarray:
    c = np.array(placement, dtype=float).reshape(-1, 2)
    if n is not None and c.shape[0] != n:
        raise ValueError(f"placement has {c.shape[0]} centers, design has {n} modules")
    return c


def rect_of(shape: ModuleShape, center) -> AxisRect:
    cx, cy = float(center[0]), float(center[1])
    hw, hh = 0.5 * shape.width, 0.5 * shape.height
    return AxisRect(cx - hw, cx + hw, cy - hh, cy + hh)


def placed_rects(sizes: np.ndarray, placement: np.ndarray) -> np.ndarray:
    """(n, 4) array of [left, right, bottom, top]."""
    half = 0.5 * sizes
    return np.column_stack(
        [
            placement[:, 0] - half[:, 0],
            placement[:, 0] + half[:, 0],
            placement[:, 1] - half[:, 1],
            placement[:, 1] + half[:, 1],
        ]
    )


def pairwise_intersections(rects: np.ndarray) -> np.ndarray:
    """All positive-area intersections R_i ∩ R_j, i < j, as an (m, 4) array."""
    n = rects.shape[0]
    if n < 2:
        return np.empty((0, 4))
    i, j = np.triu_indices(n, k=1)
    a, b = rects[i], rects[j]
    inter = np.column_stack(
        [
            np.maximum(a[:, 0], b[:, 0]),
            np.minimum(a[:, 1], b[:, 1]),
            np.maximum(a[:, 2], b[:, 2]),
            np.minimum(a[:, 3], b[:, 3]),
        ]
    )
    keep = (inter[:, 1] > inter[:, 0]) & (inter[:, 3] > inter[:, 2])
    return inter[keep]


def union_area(rects: np.ndarray) -> float:
    """Exact area of a union of axis-aligned rectangles."""
    rects = np.asarray(rects, dtype=float).reshape(-1, 4)
    if rects.shape[0] == 0:
        return 0.0
    xs = np.unique(rects[:, :2])
    ys = np.unique(rects[:, 2:])
    covered = np.zeros((xs.size - 1, ys.size - 1), dtype=bool)
    ix0 = np.searchsorted(xs, rects[:, 0])
    ix1 = np.searchsorted(xs, rects[:, 1])
    iy0 = np.searchsorted(ys, rects[:, 2])
    iy1 = np.searchsorted(ys, rects[:, 3])
    for a, b, c, d in zip(ix0, ix1, iy0, iy1):
        covered[a:b, c:d] = True
    return float(np.diff(xs) @ covered @ np.diff(ys))


def overlap_rects(design: Design, placement) -> np.ndarray:
    c = as_placement(placement, len(design))
    return pairwise_intersections(placed_rects(design.sizes, c))


def overlap_area(design: Design, placement) -> float:
    """|O(c)|: area of the union of all pairwise module intersections."""
    return union_area(overlap_rects(design, placement))


def _check_erosion(design: Design, eps: float) -> None:
    if eps < 0:
        raise ValueError("erosion radius must be non-negative")
    if design.modules and eps >= design.min_inradius:
        raise ErosionTooLarge(
            f"epsilon={eps} must be smaller than the minimal inradius "
            f"{design.min_inradius}"
        )


def eroded_shape(shape: ModuleShape, eps: float) -> ModuleShape:
    if eps >= shape.inradius:
        raise ErosionTooLarge(f"epsilon={eps} >= inradius {shape.inradius}")
    return ModuleShape(shape.width - 2 * eps, shape.height - 2 * eps)


def eroded_overlap_rects(design: Design, placement, eps: float) -> np.ndarray:
    _check_erosion(design, eps)
    c = as_placement(placement, len(design))
    return pairwise_intersections(placed_rects(design.sizes - 2.0 * eps, c))


def eroded_overlap_area(design: Design, placement, eps: float) -> float:
    """|O_eps(c)|: union area of pairwise intersections of eroded modules."""
    return union_area(eroded_overlap_rects(design, placement, eps))


def total_perimeter(design: Design) -> float:
    return float(sum(m.perimeter for m in design.modules))


def erosion_area_loss(shape: ModuleShape, eps: float) -> float:
    """|M| - |M^-eps| for a rectangle."""
    return shape.area - eroded_shape(shape, eps).area


def feasible_bounds(design: Design) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate lower/upper bounds on centers, each shaped (n, 2)."""
    design.check_fits()
    half = 0.5 * design.sizes
    lo = half
    hi = np.array([design.width, design.height]) - half
    return lo, hi


def points_in_rects(points: np.ndarray, rects: np.ndarray) -> np.ndarray:
    """Boolean mask of points (…, 2) lying in the union of closed rects."""
    pts = np.asarray(points, dtype=float)
    mask = np.zeros(pts.shape[:-1], dtype=bool)
    for l, r, b, t in np.asarray(rects).reshape(-1, 4):
        mask |= (pts[..., 0] >= l) & (pts[..., 0] <= r) & (pts[..., 1] >= b) & (pts[..., 1] <= t)
    return mask


def random_design(
    rng: np.random.Generator,
    n: int,
    width: float = 1.0,
    height: float = 1.0,
    size_range: Sequence[float] = (0.15, 0.4),
    netlist: Netlist | None = None,
) -> Design:
    sizes = rng.uniform(size_range[0], size_range[1], size=(n, 2))
    sizes[:, 0] *= width
    sizes[:, 1] *= height
    return Design.from_sizes(sizes, width, height, netlist)


def random_placement(rng: np.random.Generator, design: Design) -> np.ndarray:
    lo, hi = feasible_bounds(design)
    return rng.uniform(lo, hi)
