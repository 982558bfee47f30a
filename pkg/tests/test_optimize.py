import numpy as np
import pytest

from pefplan.errors import ErosionTooLarge, InsufficientData, NonFiniteObjective
from pefplan.geometry import Design, feasible_bounds
from pefplan.instances import pad_pair_instance, pad_pair_optimum, random_instance
from pefplan.optimize import (
    FIXED,
    POISSON,
    ROBBINS_MONRO,
    VARIANCE,
    ObjectiveConfig,
    StepSchedule,
    StopCriteria,
    gradient,
    gradient_mapping_norm,
    lipschitz_estimate,
    local_rate_fit,
    objective,
    pgd_run,
    project,
    stability_probe,
    stationary_report,
)
from pefplan.verify import fd_gradient_error


def test_projection_properties(rng):
    d, _ = random_instance(4, 5)
    lo, hi = feasible_bounds(d)
    for _ in range(20):
        a = rng.uniform(-0.5, 1.5, (5, 2))
        b = rng.uniform(-0.5, 1.5, (5, 2))
        pa, pb = project(d, a), project(d, b)
        assert np.all(pa >= lo) and np.all(pa <= hi)
        np.testing.assert_array_equal(project(d, pa), pa)
        assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-15


@pytest.mark.parametrize("penalty", [POISSON, VARIANCE])
@pytest.mark.parametrize("seed", [0, 1])
def test_gradient_matches_finite_differences(seed, penalty):
    d, c = random_instance(seed, 4)
    cfg = ObjectiveConfig(lam=2.0, epsilon=0.03, grid=(96, 96), penalty=penalty)
    assert fd_gradient_error(d, c, cfg) <= 1e-5


def test_objective_parts():
    d, c = random_instance(2, 3)
    cfg = ObjectiveConfig(lam=3.0, epsilon=0.03, grid=(64, 64))
    o = objective(d, c, cfg)
    assert o["F"] == pytest.approx(o["W"] + 3.0 * o["E_eps"])
    assert gradient(d, c, cfg).shape == (3, 2)


def test_gradient_mapping_interior_equals_gradient():
    d = Design.from_sizes([(0.2, 0.2), (0.2, 0.2)], 1, 1)
    c = np.array([[0.4, 0.5], [0.6, 0.5]])
    cfg = ObjectiveConfig(lam=1.0, epsilon=0.02, grid=(64, 64))
    g = gradient(d, c, cfg)
    assert gradient_mapping_norm(d, c, cfg, 1e-6) == pytest.approx(np.linalg.norm(g), rel=1e-6)
    with pytest.raises(ValueError):
        gradient_mapping_norm(d, c, cfg, 0.0)


def test_fixed_schedule_descends():
    d, c0 = random_instance(11, 4)
    cfg = ObjectiveConfig(lam=50.0, epsilon=0.03, grid=(64, 64))
    c, diag = pgd_run(d, c0, cfg, stop=StopCriteria(150, gm_tol=0.0))
    F = diag.column("F")
    assert len(F) == 151
    assert np.max(np.diff(F)) <= 1e-10
    assert diag.summary["iterations"] == 150
    assert "certificate" in diag.summary


def test_robbins_monro_steps():
    s = StepSchedule(ROBBINS_MONRO, 0.5)
    assert [s.step(k) for k in range(3)] == [0.5, 0.25, 0.5 / 3]
    d, c0 = random_instance(12, 3)
    cfg = ObjectiveConfig(lam=10.0, epsilon=0.03, grid=(48, 48))
    _, diag = pgd_run(d, c0, cfg, StepSchedule(ROBBINS_MONRO, 0.01), StopCriteria(30))
    assert diag.column("step")[-1] == pytest.approx(0.01 / 31)


def test_run_validation_errors():
    d = Design.from_sizes([(0.1, 0.4), (0.3, 0.3)], 1, 1)
    with pytest.raises(ErosionTooLarge):
        pgd_run(d, [(0.3, 0.5), (0.6, 0.5)], ObjectiveConfig(epsilon=0.05, grid=(32, 32)))
    with pytest.raises(ValueError):
        ObjectiveConfig(lam=-1.0)
    cfg = ObjectiveConfig(lam=float("nan"), epsilon=0.02, grid=(32, 32))
    with pytest.raises(NonFiniteObjective):
        pgd_run(d, [(0.3, 0.5), (0.6, 0.5)], cfg, StepSchedule(FIXED, 0.01))


def test_lipschitz_estimate_positive_and_deterministic():
    d, c = random_instance(5, 3)
    cfg = ObjectiveConfig(lam=10.0, epsilon=0.03, grid=(48, 48))
    a = lipschitz_estimate(d, c, cfg, seed=3)
    assert a > 0 and a == lipschitz_estimate(d, c, cfg, seed=3)


def test_local_rate_on_geometric_sequence():
    dist = 0.3 * 0.9 ** np.arange(80)
    fit = local_rate_fit(dist, 50)
    assert fit.rho == pytest.approx(0.9, rel=1e-10) and fit.r2 == pytest.approx(1.0)
    assert not fit.flagged
    with pytest.raises(InsufficientData):
        local_rate_fit(dist[:10], 50)
    iterates = 0.5 + dist[:, None, None] * np.ones((1, 2, 2))
    fit = local_rate_fit(iterates, 50, reference=np.full((2, 2), 0.5))
    assert fit.rho == pytest.approx(0.9, rel=1e-10)


def test_stationary_report_pad_pair():
    d = pad_pair_instance(sizes=((0.25, 0.22), (0.3, 0.27)))
    cfg = ObjectiveConfig(lam=1000.0, epsilon=0.02, grid=(64, 64))
    opt = pad_pair_optimum(d, cfg, step=1e-3)
    c, _ = pgd_run(d, [(0.45, 0.52), (0.56, 0.47)], cfg, stop=StopCriteria(600))
    rep = stationary_report(d, c, cfg, opt.placement)
    assert rep.premise is not None
    if rep.premise:
        assert rep.overlap_bound_holds and rep.wl_bound_holds
    assert rep.W_min == pytest.approx(0.0)


def test_stability_probe_zero_and_limits():
    d = pad_pair_instance()
    cfg = ObjectiveConfig(lam=1000.0, epsilon=0.02, grid=(48, 48))
    with pytest.raises(ValueError):
        stability_probe(d, cfg, 0.1)
    res = stability_probe(d, cfg, 0.0, stop=StopCriteria(50))
    assert res.max == 0.0


def test_symmetric_perturbation_gives_symmetric_shift():
    d = pad_pair_instance()
    cfg = ObjectiveConfig(lam=1000.0, epsilon=0.02, grid=(64, 64))
    init = np.array([[0.3, 0.5], [0.7, 0.5]])
    res = stability_probe(d, cfg, 0.02, initial=init, direction=[1.0, 1.0], stop=StopCriteria(400))
    s = res.shifts[0]
    assert s[0, 0] == pytest.approx(-s[1, 0], abs=1e-6)
    assert abs(s[0, 1]) < 1e-6 and abs(s[1, 1]) < 1e-6
