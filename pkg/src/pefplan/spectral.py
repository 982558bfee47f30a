"""Discrete Neumann Laplacian and its cosine eigenbasis.

The cell-centered 5-point Laplacian with mirrored ghost cells is diagonalized
exactly by the orthonormal type-II cosine transform, with eigenvalues

    lambda_kl = (2 - 2 cos(k pi / nx)) / hx^2 + (2 - 2 cos(l pi / ny)) / hy^2.

Coefficients are scaled by sqrt(hx * hy) so that sum(alpha^2) equals the
midpoint quadrature of the integral of f^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .errors import NonZeroMeanInput
from .field import Grid, ScalarField

_WORKERS: int | None = None


def set_workers(n: int | None) -> None:
    """Cap the thread count used by the fast transforms (None = library default)."""
    global _WORKERS
    _WORKERS = None if n is None else max(1, int(n))


@dataclass
class Spectrum:
    grid: Grid
    coefficients: np.ndarray
    eigenvalues: np.ndarray

    @property
    def continuum_eigenvalues(self) -> np.ndarray:
        return continuum_eigenvalues(self.grid)


def _axis_eigs(n: int, h: float) -> np.ndarray:
    return (2.0 - 2.0 * np.cos(np.pi * np.arange(n) / n)) / h**2


def neumann_eigenvalues(grid: Grid) -> np.ndarray:
    return _axis_eigs(grid.nx, grid.hx)[:, None] + _axis_eigs(grid.ny, grid.hy)[None, :]


def continuum_eigenvalues(grid: Grid) -> np.ndarray:
    k = np.arange(grid.nx)[:, None] / grid.width
    l = np.arange(grid.ny)[None, :] / grid.height
    return np.pi**2 * (k**2 + l**2)


@lru_cache(maxsize=16)
def cosine_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix C with (C f)_k = sum_i C[k, i] f_i."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    C = np.sqrt(2.0 / n) * np.cos(np.pi * k * (i + 0.5) / n)
    C[0] /= np.sqrt(2.0)
    C.setflags(write=False)
    return C


def _dct2(a: np.ndarray, method: str) -> np.ndarray:
    if method == "fft":
        return scipy.fft.dctn(a, type=2, norm="ortho", workers=_WORKERS)
    if method == "matrix":
        return cosine_matrix(a.shape[0]) @ a @ cosine_matrix(a.shape[1]).T
    raise ValueError(f"unknown transform method {method!r}")


def _idct2(a: np.ndarray, method: str) -> np.ndarray:
    if method == "fft":
        return scipy.fft.idctn(a, type=2, norm="ortho", workers=_WORKERS)
    if method == "matrix":
        return cosine_matrix(a.shape[0]).T @ a @ cosine_matrix(a.shape[1])
    raise ValueError(f"unknown transform method {method!r}")


def cosine_forward(f: ScalarField, method: str = "fft") -> Spectrum:
    scale = np.sqrt(f.grid.cell_area)
    alpha = _dct2(f.values, method) * scale
    return Spectrum(f.grid, alpha, neumann_eigenvalues(f.grid))


def cosine_inverse(s: Spectrum, method: str = "fft") -> ScalarField:
    scale = np.sqrt(s.grid.cell_area)
    return ScalarField(s.grid, _idct2(s.coefficients / scale, method))


def check_zero_mean(f: ScalarField, rtol: float = 1e-10) -> None:
    scale = f.max_abs()
    m = abs(float(f.values.mean()))
    if scale > 0 and m > rtol * scale:
        raise NonZeroMeanInput(f"field mean {m:.3e} exceeds {rtol:g} * max|f| = {rtol * scale:.3e}")


def _inverse_eigs(grid: Grid) -> np.ndarray:
    lam = neumann_eigenvalues(grid)
    lam[0, 0] = 1.0
    inv = 1.0 / lam
    inv[0, 0] = 0.0
    return inv


def solve_poisson(f: ScalarField) -> ScalarField:
    """Zero-mean phi with -Lap_h phi = f under Neumann conditions."""
    check_zero_mean(f)
    a = scipy.fft.dctn(f.values, type=2, norm="ortho", workers=_WORKERS)
    a *= _inverse_eigs(f.grid)
    phi = scipy.fft.idctn(a, type=2, norm="ortho", workers=_WORKERS)
    return ScalarField(f.grid, phi, zero_mean=True)


green_apply = solve_poisson


def hminus1_norm_sq(f: ScalarField) -> float:
    """sum over nonconstant modes of alpha^2 / lambda."""
    check_zero_mean(f)
    s = cosine_forward(f)
    return float(np.sum(s.coefficients**2 * _inverse_eigs(f.grid)))


def neumann_laplacian(phi: ScalarField) -> ScalarField:
    """-Lap_h phi with the 5-point stencil and mirrored ghost cells."""
    g = phi.grid
    v = phi.values
    px = np.pad(v, ((1, 1), (0, 0)), mode="edge")
    py = np.pad(v, ((0, 0), (1, 1)), mode="edge")
    lap = (px[2:, :] - 2 * v + px[:-2, :]) / g.hx**2 + (py[:, 2:] - 2 * v + py[:, :-2]) / g.hy**2
    return ScalarField(g, -lap)


def gradient_field(phi: ScalarField) -> tuple[ScalarField, ScalarField]:
    """Cell-centered central differences; ghost cells mirror the boundary row."""
    g = phi.grid
    px = np.pad(phi.values, ((1, 1), (0, 0)), mode="edge")
    py = np.pad(phi.values, ((0, 0), (1, 1)), mode="edge")
    gx = (px[2:, :] - px[:-2, :]) / (2 * g.hx)
    gy = (py[:, 2:] - py[:, :-2]) / (2 * g.hy)
    return ScalarField(g, gx), ScalarField(g, gy)


def face_gradients(phi: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Differences across interior faces: shapes (nx-1, ny) and (nx, ny-1)."""
    g = phi.grid
    return np.diff(phi.values, axis=0) / g.hx, np.diff(phi.values, axis=1) / g.hy


def dirichlet_form(phi: ScalarField) -> float:
    """Integral of |grad phi|^2 summed over interior faces.

    Boundary faces carry zero flux, so by summation by parts this equals
    <phi, -Lap_h phi> exactly.
    """
    gx, gy = face_gradients(phi)
    return float(((gx**2).sum() + (gy**2).sum()) * phi.grid.cell_area)


def sorted_modes(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Flat (k, l) index arrays of positive modes sorted by eigenvalue, k-major ties."""
    lam = neumann_eigenvalues(grid).ravel()
    order = np.argsort(lam, kind="stable")
    order = order[order != 0]
    return np.unravel_index(order, grid.shape)


def spectral_coefficients(f: ScalarField, N: int) -> list[tuple[float, float]]:
    """(lambda_k, alpha_k) for the N smallest positive discrete eigenvalues."""
    if N < 1:
        raise ValueError("N must be at least 1")
    check_zero_mean(f)
    s = cosine_forward(f)
    k, l = sorted_modes(f.grid)
    k, l = k[:N], l[:N]
    return list(zip(s.eigenvalues[k, l].tolist(), s.coefficients[k, l].tolist()))


def spectrum_table(f: ScalarField) -> list[dict]:
    """Every mode as a row with discrete/continuum eigenvalues, sorted ascending."""
    s = cosine_forward(f)
    lc = s.continuum_eigenvalues
    k0, l0 = sorted_modes(f.grid)
    k = np.concatenate([[0], k0])
    l = np.concatenate([[0], l0])
    return [
        {
            "k": int(a),
            "l": int(b),
            "lambda_discrete": float(s.eigenvalues[a, b]),
            "lambda_continuum": float(lc[a, b]),
            "alpha": float(s.coefficients[a, b]),
        }
        for a, b in zip(k, l)
    ]
