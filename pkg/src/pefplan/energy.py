"""Poisson energy, module energies, spectral reports and overlap certificates."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import spectral
from .errors import DensityInfeasible
from .field import Grid, ScalarField, density, module_profiles, residual, variance
from .geometry import Design, eroded_overlap_area, overlap_area, total_perimeter

DEFAULT_MODES = 16
SUPPORT_FACTOR = np.sqrt(2.0)  # sup-norm kernel support inside the Euclidean ball of radius sqrt(2) eps


def poisson_energy(f: ScalarField) -> float:
    """E = 1/2 ||f||_{H^-1}^2 (spectral sum, canonical value)."""
    return 0.5 * spectral.hminus1_norm_sq(f)


def dirichlet_energy(f: ScalarField) -> float:
    """1/2 integral |grad phi|^2 from the solved potential."""
    return 0.5 * spectral.dirichlet_form(spectral.solve_poisson(f))


def residual_field(design: Design, placement, eps: float, grid: Grid) -> ScalarField:
    rho = density(design, placement, eps, grid)
    return residual(rho, design.mean_density)


def mollified_energy(design: Design, placement, eps: float, grid: Grid) -> float:
    return poisson_energy(residual_field(design, placement, eps, grid))


def module_energies(design: Design, placement, phi: ScalarField, eps: float, grid: Grid) -> np.ndarray:
    """N_i = integral of psi_i(x - c_i) phi(x); eps=0 uses exact cell coverage."""
    p = module_profiles(design, placement, eps, grid)
    # sum_ab tx[i,a] phi[a,b] ty[i,b]
    return np.einsum("ia,ab,ib->i", p.tx, phi.values, p.ty) * grid.cell_area


@dataclass
class SpectralReport:
    Var: float
    E: float
    lambda1: float
    lambdaN: float
    partial_sum_N: float
    beta_hat: float
    N: int

    @property
    def upper_bound(self) -> float:
        return self.Var / (2.0 * self.lambda1)

    @property
    def lower_bound(self) -> float:
        return self.partial_sum_N / (2.0 * self.lambdaN)

    def to_dict(self) -> dict:
        return asdict(self)


def spectral_report(f: ScalarField, N: int = DEFAULT_MODES) -> SpectralReport:
    total_modes = f.grid.nx * f.grid.ny - 1
    if not 1 <= N <= total_modes:
        raise ValueError(f"N must be in [1, {total_modes}], got {N}")
    spectral.check_zero_mean(f)
    pairs = spectral.spectral_coefficients(f, N)
    lam = np.array([p[0] for p in pairs])
    alpha = np.array([p[1] for p in pairs])
    var = variance(f)
    partial = float(np.sum(alpha**2))
    beta = 1.0 if var == 0 else min(partial / var, 1.0)
    return SpectralReport(
        Var=var,
        E=poisson_energy(f),
        lambda1=float(lam[0]),
        lambdaN=float(lam[-1]),
        partial_sum_N=partial,
        beta_hat=beta,
        N=int(N),
    )


@dataclass
class OverlapCertificate:
    overlap: float
    eroded_overlap: float
    P_sigma: float
    epsilon: float
    C: float
    bound: float
    E_eps: float
    satisfied: bool
    beta_hat: float = 1.0
    lambdaN: float = 0.0
    mean_density: float = 0.0

    @property
    def margin(self) -> float:
        return self.E_eps - self.bound

    def to_dict(self) -> dict:
        return asdict(self)


def overlap_constant(beta_hat: float, mean_density: float, lambdaN: float) -> float:
    """C = beta (2 - rho_bar)^2 / (2 lambda_N)."""
    return beta_hat * (2.0 - mean_density) ** 2 / (2.0 * lambdaN)


def check_density(design: Design) -> None:
    if design.mean_density >= 2.0:
        raise DensityInfeasible(f"mean density {design.mean_density:.4g} must be below 2")


def overlap_certificate(
    design: Design,
    placement,
    eps: float,
    N: int = DEFAULT_MODES,
    grid: Grid | None = None,
    rtol: float = 1e-8,
) -> OverlapCertificate:
    """Check E_eps >= C (|O| - sqrt(2) eps P_sigma)_+ with beta measured on the layout."""
    check_density(design)
    grid = grid or Grid.for_design(design)
    eroded = eroded_overlap_area(design, placement, eps)  # raises ErosionTooLarge
    overlap = overlap_area(design, placement)
    f = residual_field(design, placement, eps, grid)
    rep = spectral_report(f, N)
    C = overlap_constant(rep.beta_hat, design.mean_density, rep.lambdaN)
    p_sigma = total_perimeter(design)
    bound = C * max(overlap - SUPPORT_FACTOR * eps * p_sigma, 0.0)
    tol = rtol * max(abs(bound), abs(rep.E))
    return OverlapCertificate(
        overlap=overlap,
        eroded_overlap=eroded,
        P_sigma=p_sigma,
        epsilon=eps,
        C=C,
        bound=bound,
        E_eps=rep.E,
        satisfied=bool(rep.E >= bound - tol),
        beta_hat=rep.beta_hat,
        lambdaN=rep.lambdaN,
        mean_density=design.mean_density,
    )
