import numpy as np
import pytest
from scipy import integrate

from pefplan.field import (
    Grid,
    ScalarField,
    density,
    interval_profile,
    is_zero_mean,
    kernel_1d,
    kernel_cdf,
    mollified_indicator,
    mollified_indicator_grad,
    rasterize_indicator,
    residual,
)
from pefplan.geometry import Design, ModuleShape


def test_kernel_unit_mass_and_support():
    mass, _ = integrate.quad(kernel_1d, -1, 1)
    assert mass == pytest.approx(1.0, abs=1e-14)
    assert kernel_1d(1.0) == 0.0 and kernel_1d(-1.5) == 0.0
    assert kernel_cdf(-1) == pytest.approx(0.0) and kernel_cdf(1) == pytest.approx(1.0)


def test_profile_matches_numerical_convolution():
    eps, lo, hi = 0.05, 0.3, 0.6
    for x in (0.27, 0.31, 0.45, 0.58, 0.649):
        ref, _ = integrate.quad(lambda y: kernel_1d((x - y) / eps) / eps, lo, hi, points=[x - eps, x + eps])
        val, _ = interval_profile(x, lo, hi, eps)
        assert val == pytest.approx(ref, abs=1e-12)


def test_profile_derivative():
    eps, lo, hi, h = 0.04, 0.2, 0.5, 1e-7
    x = np.linspace(0.1, 0.6, 41)
    _, d = interval_profile(x, lo, hi, eps)
    fd = (interval_profile(x + h, lo, hi, eps)[0] - interval_profile(x - h, lo, hi, eps)[0]) / (2 * h)
    np.testing.assert_allclose(d, fd, atol=1e-6)


def test_mollified_indicator_values():
    m = ModuleShape(0.3, 0.2)
    assert mollified_indicator(m, (0.5, 0.5), 0.02, (0.5, 0.5)) == 1.0
    assert mollified_indicator(m, (0.5, 0.5), 0.02, (0.9, 0.5)) == 0.0
    # corner value factorizes into two half-profiles
    assert mollified_indicator(m, (0.5, 0.5), 0.02, (0.65, 0.6)) == pytest.approx(0.25)
    g = mollified_indicator_grad(m, (0.5, 0.5), 0.02, np.array([[0.5, 0.5], [0.65, 0.5]]))
    assert np.allclose(g[0], 0) and g[1, 0] < 0


def test_density_mass_inside_domain():
    d = Design.from_sizes([(0.3, 0.2), (0.2, 0.25)], 1, 1)
    g = Grid(256, 256)
    rho = density(d, [(0.4, 0.4), (0.6, 0.6)], 0.02, g)
    assert rho.integral() == pytest.approx(d.areas.sum(), rel=1e-5)
    assert rho.values.min() >= 0


def test_sharp_rasterization_exact_area():
    g = Grid(37, 41, 1.0, 1.2)
    f = rasterize_indicator(ModuleShape(0.333, 0.271), (0.41, 0.52), g)
    assert f.integral() == pytest.approx(0.333 * 0.271, rel=1e-12)
    assert f.values.max() <= 1.0


def test_residual_zero_mean():
    g = Grid(64, 48, 2.0, 1.5)
    rho = ScalarField(g, np.random.default_rng(0).uniform(0, 2, g.shape))
    f = residual(rho, 0.7)
    assert is_zero_mean(f)
    assert abs(f.mean()) <= 1e-12 * f.max_abs()
