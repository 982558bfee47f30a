import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pefplan.errors import InvalidPinIndex
from pefplan.wirelength import (
    LSE,
    WA,
    Net,
    Netlist,
    SmoothingConfig,
    hpwl,
    nets_from_pins,
    smooth_wl,
    smooth_wl_grad,
    wirelength_infimum,
)

NETS = nets_from_pins([[0, 1], [1, 2, (0.9, 0.1)], [0, 2, 3], [3, (0.0, 0.5)]])


def test_hpwl_by_hand():
    c = np.array([[0.1, 0.2], [0.4, 0.6], [0.7, 0.3], [0.5, 0.5]])
    expected = (0.3 + 0.4) + (0.5 + 0.5) + (0.6 + 0.3) + (0.5 + 0.0)
    assert hpwl(NETS, c) == pytest.approx(expected)


@pytest.mark.parametrize("model", [LSE, WA])
def test_smooth_converges_to_hpwl(model):
    c = np.array([[0.1, 0.2], [0.4, 0.6], [0.7, 0.3], [0.5, 0.5]])
    h = hpwl(NETS, c)
    errs = [abs(smooth_wl(NETS, c, SmoothingConfig(g, model)) - h) for g in (1e-2, 1e-3, 1e-4)]
    assert errs[2] <= errs[1] <= errs[0]
    assert errs[2] < 1e-3


def test_lse_upper_wa_lower():
    c = np.random.default_rng(1).uniform(0, 1, (4, 2))
    h = hpwl(NETS, c)
    assert smooth_wl(NETS, c, SmoothingConfig(0.05, LSE)) >= h
    assert smooth_wl(NETS, c, SmoothingConfig(0.05, WA)) <= h


def test_bad_pin_index():
    with pytest.raises(InvalidPinIndex):
        hpwl(nets_from_pins([[0, 5]]), np.zeros((2, 2)))
    with pytest.raises(InvalidPinIndex):
        Netlist((Net((0, 3)),)).check(2)


def test_no_overflow_far_apart():
    nets = nets_from_pins([[0, 1]])
    c = np.array([[0.0, 0.0], [1e4, 1e4]])
    v = smooth_wl(nets, c, SmoothingConfig(1e-3, LSE))
    assert np.isfinite(v) and v == pytest.approx(2e4)


def test_fixed_pads_get_no_gradient():
    nets = nets_from_pins([[0, (0.5, 0.5)]])
    g = smooth_wl_grad(nets, np.array([[0.2, 0.7]]), SmoothingConfig(0.01))
    assert g.shape == (1, 2)
    assert g[0, 0] == pytest.approx(-1.0) and g[0, 1] == pytest.approx(1.0)


def test_infimum():
    nets = nets_from_pins([[0, (0.2, 0.3), (0.6, 0.4)], [0, 1]])
    assert wirelength_infimum(nets, LSE) == pytest.approx(0.5)
    assert wirelength_infimum(nets, WA) == 0.0


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    model=st.sampled_from([LSE, WA]),
    gamma=st.floats(0.01, 0.2),
)
def test_gradient_finite_differences(seed, model, gamma):
    c = np.random.default_rng(seed).uniform(0, 1, (4, 2))
    cfg = SmoothingConfig(gamma, model)
    g = smooth_wl_grad(NETS, c, cfg)
    h = 1e-6
    fd = np.zeros_like(c)
    for idx in np.ndindex(c.shape):
        cp, cm = c.copy(), c.copy()
        cp[idx] += h
        cm[idx] -= h
        fd[idx] = (smooth_wl(NETS, cp, cfg) - smooth_wl(NETS, cm, cfg)) / (2 * h)
    np.testing.assert_allclose(g, fd, atol=1e-6 * max(1.0, 1.0 / gamma))
