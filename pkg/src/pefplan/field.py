"""Grids, sampled fields and mollified module densities.

The 2-D mollifier is the tensor product of the 1-D quartic kernel
``(15/16)(1 - t^2)^2`` on [-1, 1]. Convolving a rectangle indicator with it
factorizes into two 1-D interval profiles, each a difference of kernel CDFs,
so densities and their center derivatives are evaluated in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import Design, ModuleShape, as_placement

DEFAULT_GRID = 256


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    width: float = 1.0
    height: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per axis")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("grid extent must be positive")

    @classmethod
    def for_design(cls, design: Design, nx: int = DEFAULT_GRID, ny: int | None = None) -> "Grid":
        return cls(int(nx), int(nx if ny is None else ny), design.width, design.height)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def hx(self) -> float:
        return self.width / self.nx

    @property
    def hy(self) -> float:
        return self.height / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.hx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.hy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def points(self) -> np.ndarray:
        X, Y = self.mesh()
        return np.stack([X, Y], axis=-1)


@dataclass
class ScalarField:
    """Cell-centered samples on a grid; ``values[i, j]`` sits at (x_i, y_j)."""

    grid: Grid
    values: np.ndarray
    zero_mean: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid {self.grid.shape}")

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    def mean(self) -> float:
        return self.integral() / self.grid.area

    def inner(self, other: "ScalarField") -> float:
        return float(np.vdot(self.values, other.values) * self.grid.cell_area)

    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def __mul__(self, a: float) -> "ScalarField":
        return replace(self, values=self.values * a)

    __rmul__ = __mul__

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape).astype(float))


# --- 1-D kernel -------------------------------------------------------------

def kernel_1d(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    return np.where(inside, (15.0 / 16.0) * (1.0 - t * t) ** 2, 0.0)


def kernel_cdf(t):
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    return 0.5 + (15.0 / 16.0) * (t - 2.0 * t**3 / 3.0 + t**5 / 5.0)


def interval_profile(x, lo, hi, eps: float):
    """Mollified indicator of [lo, hi] and its x-derivative.

    With ``eps == 0`` the sharp indicator is returned with zero derivative.
    """
    x = np.asarray(x, dtype=float)
    if eps == 0:
        val = ((x >= lo) & (x <= hi)).astype(float)
        return val, np.zeros_like(val)
    a = (x - lo) / eps
    b = (hi - x) / eps
    val = np.clip(kernel_cdf(a) + kernel_cdf(b) - 1.0, 0.0, 1.0)
    der = (kernel_1d(a) - kernel_1d(b)) / eps
    return val, der


def cell_coverage(centers, h: float, lo, hi):
    """Fraction of each cell [c - h/2, c + h/2] covered by [lo, hi]."""
    centers = np.asarray(centers, dtype=float)
    left = np.maximum(centers - 0.5 * h, lo)
    right = np.minimum(centers + 0.5 * h, hi)
    return np.clip(right - left, 0.0, None) / h


# --- module fields ----------------------------------------------------------

def mollified_indicator(shape: ModuleShape, center, eps: float, x):
    """psi(x) = (eta_eps * 1_M)(x) for the module centered at ``center``.

    ``x`` may be a single point or any array of points with trailing dim 2.
    """
    x = np.asarray(x, dtype=float)
    cx, cy = float(center[0]), float(center[1])
    tx, _ = interval_profile(x[..., 0], cx - shape.width / 2, cx + shape.width / 2, eps)
    ty, _ = interval_profile(x[..., 1], cy - shape.height / 2, cy + shape.height / 2, eps)
    out = tx * ty
    return float(out) if out.ndim == 0 else out


def mollified_indicator_grad(shape: ModuleShape, center, eps: float, x):
    """Spatial gradient of :func:`mollified_indicator`, trailing dim 2."""
    x = np.asarray(x, dtype=float)
    cx, cy = float(center[0]), float(center[1])
    tx, dx = interval_profile(x[..., 0], cx - shape.width / 2, cx + shape.width / 2, eps)
    ty, dy = interval_profile(x[..., 1], cy - shape.height / 2, cy + shape.height / 2, eps)
    return np.stack([dx * ty, tx * dy], axis=-1)


@dataclass
class Profiles:
    """Separable per-module factors sampled on the grid axes.

    Module k contributes ``outer(tx[k], ty[k])`` to the density; ``dtx``/``dty``
    are the spatial derivatives of the factors.
    """

    tx: np.ndarray
    ty: np.ndarray
    dtx: np.ndarray
    dty: np.ndarray


def module_profiles(design: Design, placement, eps: float, grid: Grid) -> Profiles:
    c = as_placement(placement, len(design))
    half = 0.5 * design.sizes
    xs, ys = grid.x, grid.y
    if eps == 0:
        tx = cell_coverage(xs[None, :], grid.hx, (c[:, 0] - half[:, 0])[:, None], (c[:, 0] + half[:, 0])[:, None])
        ty = cell_coverage(ys[None, :], grid.hy, (c[:, 1] - half[:, 1])[:, None], (c[:, 1] + half[:, 1])[:, None])
        return Profiles(tx, ty, np.zeros_like(tx), np.zeros_like(ty))
    tx, dtx = interval_profile(
        xs[None, :], (c[:, 0] - half[:, 0])[:, None], (c[:, 0] + half[:, 0])[:, None], eps
    )
    ty, dty = interval_profile(
        ys[None, :], (c[:, 1] - half[:, 1])[:, None], (c[:, 1] + half[:, 1])[:, None], eps
    )
    return Profiles(tx.reshape(-1, grid.nx), ty.reshape(-1, grid.ny),
                    dtx.reshape(-1, grid.nx), dty.reshape(-1, grid.ny))


def rasterize_indicator(shape: ModuleShape, center, grid: Grid) -> ScalarField:
    """Exact covered-area fraction of each cell."""
    cx, cy = float(center[0]), float(center[1])
    fx = cell_coverage(grid.x, grid.hx, cx - shape.width / 2, cx + shape.width / 2)
    fy = cell_coverage(grid.y, grid.hy, cy - shape.height / 2, cy + shape.height / 2)
    return ScalarField(grid, np.outer(fx, fy))


def density(design: Design, placement, eps: float, grid: Grid, profiles: Profiles | None = None) -> ScalarField:
    """rho_eps(x; c) = sum_i psi_i(x - c_i) at cell centers.

    ``eps == 0`` gives the sharp density with exact cell coverage fractions.
    Modules are accumulated in index order.
    """
    p = profiles if profiles is not None else module_profiles(design, placement, eps, grid)
    if p.tx.shape[0] == 0:
        return ScalarField(grid, np.zeros(grid.shape))
    return ScalarField(grid, p.tx.T @ p.ty)


def residual(rho: ScalarField, mean_density: float) -> ScalarField:
    """f = rho - rho_bar with the leftover discrete mean removed."""
    vals = rho.values - mean_density
    vals = vals - vals.mean()
    vals = vals - vals.mean()
    return ScalarField(rho.grid, vals, zero_mean=True)


def variance(f: ScalarField) -> float:
    """Midpoint quadrature of the integral of f^2."""
    return float(np.vdot(f.values, f.values) * f.grid.cell_area)


def is_zero_mean(f: ScalarField, rtol: float = 1e-12) -> bool:
    scale = f.max_abs()
    return abs(float(f.values.mean())) <= rtol * scale if scale > 0 else True
