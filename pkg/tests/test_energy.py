import numpy as np
import pytest

from pefplan.energy import (
    check_density,
    dirichlet_energy,
    module_energies,
    mollified_energy,
    overlap_certificate,
    poisson_energy,
    residual_field,
    spectral_report,
)
from pefplan.errors import DensityInfeasible, ErosionTooLarge
from pefplan import spectral
from pefplan.field import Grid, ScalarField, residual
from pefplan.geometry import Design, overlap_area
from pefplan.instances import random_overlapping_instance


def _dense_neumann(n, h):
    T = np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)
    T[0, 0] = T[-1, -1] = 1.0
    return T / h**2


def test_energy_matches_dense_eigen_expansion(rng):
    g = Grid(12, 10, 1.2, 0.8)
    A = np.kron(_dense_neumann(g.nx, g.hx), np.eye(g.ny)) + np.kron(np.eye(g.nx), _dense_neumann(g.ny, g.hy))
    lam, V = np.linalg.eigh(A)
    for _ in range(5):
        f = residual(ScalarField(g, rng.standard_normal(g.shape)), 0.0)
        coef = V.T @ f.values.ravel()
        ref = 0.5 * g.cell_area * np.sum(coef[1:] ** 2 / lam[1:])
        assert poisson_energy(f) == pytest.approx(ref, rel=1e-8)
        assert dirichlet_energy(f) == pytest.approx(ref, rel=1e-8)


def test_uniform_density_has_zero_energy():
    # a single module covering the whole domain gives rho = rho_bar exactly
    d = Design.from_sizes([(1.0, 1.0)], 1, 1)
    f = residual_field(d, [(0.5, 0.5)], 0.0, Grid(32, 32))
    assert poisson_energy(f) == 0.0
    rep = spectral_report(f, 8)
    assert rep.Var == 0 and rep.E == 0 and rep.beta_hat == 1.0


def test_report_bounds(rng):
    g = Grid(64, 64)
    for _ in range(10):
        f = residual(ScalarField(g, rng.uniform(0, 2, g.shape)), 0.0)
        rep = spectral_report(f, 16)
        assert rep.lower_bound <= rep.E <= rep.upper_bound
        assert 0 <= rep.beta_hat <= 1
        assert rep.lambda1 == pytest.approx(np.pi**2, rel=1e-3)


def test_report_rejects_bad_N():
    f = residual(ScalarField(Grid(4, 4), np.arange(16.0).reshape(4, 4)), 0.0)
    with pytest.raises(ValueError):
        spectral_report(f, 16)
    assert spectral_report(f, 15).partial_sum_N == pytest.approx(f.inner(f))


def test_module_energies_sum_to_twice_energy():
    d, c = random_overlapping_instance(3, n=4)
    g = Grid(128, 128)
    f = residual_field(d, c, 0.02, g)
    phi = spectral.solve_poisson(f)
    Ni = module_energies(d, c, phi, 0.02, g)
    assert Ni.sum() == pytest.approx(2 * poisson_energy(f), rel=1e-6)


def test_overlap_raises_energy():
    d = Design.from_sizes([(0.3, 0.3), (0.3, 0.3)], 1, 1)
    g = Grid(128, 128)
    apart = mollified_energy(d, [(0.25, 0.5), (0.75, 0.5)], 0.02, g)
    stacked = mollified_energy(d, [(0.5, 0.5), (0.5, 0.5)], 0.02, g)
    assert stacked > apart > 0


@pytest.mark.parametrize("seed", range(5))
def test_certificate_on_overlapping_instances(seed):
    d, c = random_overlapping_instance(seed, n=3)
    cert = overlap_certificate(d, c, 0.03, grid=Grid(128, 128))
    assert overlap_area(d, c) > 0
    assert cert.satisfied and cert.E_eps > 0
    assert cert.C > 0
    assert set(cert.to_dict()) >= {"overlap", "eroded_overlap", "P_sigma", "epsilon", "C", "bound", "E_eps", "satisfied"}


def test_certificate_errors():
    dense = Design.from_sizes([(1.0, 1.0), (1.0, 1.0)], 1, 1)
    with pytest.raises(DensityInfeasible):
        check_density(dense)
    d = Design.from_sizes([(0.1, 0.3), (0.3, 0.3)], 1, 1)
    with pytest.raises(ErosionTooLarge):
        overlap_certificate(d, [(0.5, 0.5), (0.5, 0.5)], 0.06, grid=Grid(32, 32))
