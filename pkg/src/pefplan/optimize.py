"""Composite objective F = W + lambda E_eps, its analytic gradient, and PGD.

The Poisson force on module i is the quadrature of phi against the closed-form
gradient of its mollified indicator. Because the density is separable per
module, that quadrature reduces to two small matrix products.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import spectral
from .energy import DEFAULT_MODES, SUPPORT_FACTOR, overlap_certificate
from .errors import ErosionTooLarge, InsufficientData, NonFiniteObjective, PremiseNotMet
from .field import Grid, ScalarField, density, module_profiles, residual, variance
from .geometry import Design, as_placement, feasible_bounds, overlap_area, total_perimeter
from .wirelength import (
    LSE,
    SmoothingConfig,
    default_gamma,
    smooth_wl_and_grad,
    smooth_wl_grad,
    wirelength_infimum,
)

log = logging.getLogger(__name__)

POISSON = "poisson"
VARIANCE = "variance"


@dataclass(frozen=True)
class ObjectiveConfig:
    lam: float = 1.0
    epsilon: float = 0.02
    gamma: float | None = None
    grid: Grid | tuple[int, int] | None = None
    wl_model: str = LSE
    penalty: str = POISSON

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.penalty not in (POISSON, VARIANCE):
            raise ValueError(f"unknown penalty {self.penalty!r}")

    def validate(self, design: Design) -> None:
        if design.modules and self.epsilon >= design.min_inradius:
            raise ErosionTooLarge(
                f"epsilon={self.epsilon} must be smaller than the minimal inradius "
                f"{design.min_inradius}"
            )

    def grid_for(self, design: Design) -> Grid:
        g = self.grid
        if isinstance(g, Grid):
            return g
        if g is None:
            return Grid.for_design(design)
        return Grid(int(g[0]), int(g[1]), design.width, design.height)

    def smoothing(self, design: Design) -> SmoothingConfig:
        gamma = self.gamma if self.gamma is not None else default_gamma(design.width, design.height)
        return SmoothingConfig(gamma, self.wl_model)


@dataclass
class Evaluation:
    F: float
    W: float
    E_eps: float
    Var: float
    grad: np.ndarray | None = None
    phi: ScalarField | None = None
    f: ScalarField | None = None


def _penalty_grad(profiles, weight: np.ndarray, cell_area: float) -> np.ndarray:
    """d/dc_i of a density penalty with first variation ``weight``.

    d rho / d c_i = -grad psi_i(x - c_i), and psi_i = tx_i (x) ty_i.
    """
    gx = ((profiles.dtx @ weight) * profiles.ty).sum(axis=1)
    gy = ((profiles.tx @ weight) * profiles.dty).sum(axis=1)
    return -np.column_stack([gx, gy]) * cell_area


def _penalty(design: Design, c: np.ndarray, cfg: ObjectiveConfig, grid: Grid):
    profiles = module_profiles(design, c, cfg.epsilon, grid)
    rho = density(design, c, cfg.epsilon, grid, profiles=profiles)
    if cfg.penalty == VARIANCE:
        # local comparison penalty: raw residual against the area-based mean
        f = ScalarField(grid, rho.values - design.mean_density)
        return variance(f), f, None, profiles, 2.0 * f.values
    f = residual(rho, design.mean_density)
    phi = spectral.solve_poisson(f)
    return 0.5 * f.inner(phi), f, phi, profiles, phi.values


def evaluate(design: Design, placement, cfg: ObjectiveConfig, want_grad: bool = True) -> Evaluation:
    c = as_placement(placement, len(design))
    grid = cfg.grid_for(design)
    W, gW = smooth_wl_and_grad(design.netlist, c, cfg.smoothing(design))
    E, f, phi, profiles, weight = _penalty(design, c, cfg, grid)
    grad = None
    if want_grad:
        grad = gW + cfg.lam * _penalty_grad(profiles, weight, grid.cell_area)
    return Evaluation(F=W + cfg.lam * E, W=W, E_eps=E, Var=variance(f), grad=grad, phi=phi, f=f)


def objective(design: Design, placement, cfg: ObjectiveConfig) -> dict:
    ev = evaluate(design, placement, cfg, want_grad=False)
    return {"F": ev.F, "W": ev.W, "E_eps": ev.E_eps}


def gradient(design: Design, placement, cfg: ObjectiveConfig) -> np.ndarray:
    """Gradient of F w.r.t. centers, shape (n, 2)."""
    return evaluate(design, placement, cfg).grad


def penalty_forces(design: Design, placement, cfg: ObjectiveConfig) -> np.ndarray:
    """Force -d(penalty)/dc_i on every module, without wirelength or lambda."""
    c = as_placement(placement, len(design))
    grid = cfg.grid_for(design)
    _, _, _, profiles, weight = _penalty(design, c, cfg, grid)
    return -_penalty_grad(profiles, weight, grid.cell_area)


def project(design: Design, placement) -> np.ndarray:
    lo, hi = feasible_bounds(design)
    return np.clip(as_placement(placement, len(design)), lo, hi)


def gradient_mapping(design: Design, placement, grad: np.ndarray, alpha: float) -> np.ndarray:
    c = as_placement(placement, len(design))
    return (c - project(design, c - alpha * grad)) / alpha


def gradient_mapping_norm(design: Design, placement, cfg: ObjectiveConfig, alpha: float) -> float:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    g = gradient(design, placement, cfg)
    return float(np.linalg.norm(gradient_mapping(design, placement, g, alpha)))


def wirelength_curvature_bound(design: Design, cfg: ObjectiveConfig) -> float:
    """Upper bound max_deg / gamma on the LSE wirelength Hessian norm.

    Per axis and net the Hessian is a sum of two softmax covariances, each of
    norm at most 1/(2 gamma); summing u^T H u over nets gives deg_i per module.
    The same expression is used as a floor for the WA model.
    """
    deg = np.zeros(len(design))
    for net in design.netlist:
        for m in set(net.modules):
            deg[m] += 1
    if not deg.size:
        return 0.0
    return float(deg.max()) / cfg.smoothing(design).gamma


def lipschitz_estimate(
    design: Design,
    placement,
    cfg: ObjectiveConfig,
    samples: int = 20,
    radius: float | None = None,
    seed: int = 0,
    safety: float = 2.0,
) -> float:
    """Gradient Lipschitz estimate for F near ``placement``.

    The penalty part is the largest sampled secant of lambda grad E times
    ``safety``: c1 uniform in a ball, c2 = c1 + (r/2) d for a random unit
    direction d, with r cycling through ``radius``, radius/4 and radius/16.
    The wirelength part is the larger of its sampled secants (times
    ``safety``) and the analytic curvature bound.
    """
    if samples < 10:
        raise ValueError("need at least 10 samples")
    c = as_placement(placement, len(design))
    if radius is None:
        radius = cfg.epsilon
    radii = (radius, radius / 4.0, radius / 16.0)
    smoothing = cfg.smoothing(design)
    rng = np.random.default_rng(seed)
    dim = c.size
    best_pen = best_wl = 0.0
    for s in range(samples):
        r = radii[s % len(radii)]
        u = rng.standard_normal(dim)
        u *= r * rng.uniform() ** (1.0 / dim) / np.linalg.norm(u)
        d = rng.standard_normal(dim)
        d *= 0.5 * r / np.linalg.norm(d)
        c1 = c + u.reshape(c.shape)
        c2 = c1 + d.reshape(c.shape)
        g1 = gradient(design, c1, cfg)
        g2 = gradient(design, c2, cfg)
        w1 = smooth_wl_grad(design.netlist, c1, smoothing)
        w2 = smooth_wl_grad(design.netlist, c2, smoothing)
        dc = float(np.linalg.norm(c1 - c2))
        best_wl = max(best_wl, float(np.linalg.norm(w1 - w2)) / dc)
        best_pen = max(best_pen, float(np.linalg.norm((g1 - w1) - (g2 - w2))) / dc)
    return safety * best_pen + max(safety * best_wl, wirelength_curvature_bound(design, cfg))


FIXED = "Fixed"
ROBBINS_MONRO = "RobbinsMonro"


@dataclass(frozen=True)
class StepSchedule:
    kind: str = FIXED
    eta0: float | None = None

    def __post_init__(self):
        if self.kind not in (FIXED, ROBBINS_MONRO):
            raise ValueError(f"unknown step schedule {self.kind!r}")
        if self.eta0 is not None and not self.eta0 > 0:
            raise ValueError("eta0 must be positive")

    def step(self, k: int) -> float:
        if self.eta0 is None:
            raise ValueError("eta0 unresolved; call resolve() first")
        if self.kind == FIXED:
            return self.eta0
        return self.eta0 / (k + 1)


@dataclass(frozen=True)
class StopCriteria:
    max_iters: int = 1000
    gm_tol: float | None = None


@dataclass
class IterRecord:
    k: int
    F: float
    W: float
    E_eps: float
    Var: float
    overlap: float
    grad_mapping_norm: float
    step: float
    lam: float


DIAG_COLUMNS = ("k", "F", "W", "E_eps", "Var", "overlap", "grad_mapping_norm", "step", "lam")


@dataclass
class RunDiagnostics:
    records: list[IterRecord] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    iterates: list[np.ndarray] | None = None

    @property
    def iterations(self) -> int:
        return max(len(self.records) - 1, 0)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def rows(self) -> list[list]:
        return [[getattr(r, c) for c in DIAG_COLUMNS] for r in self.records]


def _jitter_coincident(c: np.ndarray, scale: float, seed: int) -> np.ndarray:
    _, counts = np.unique(c, axis=0, return_counts=True)
    if np.all(counts == 1):
        return c
    rng = np.random.default_rng(seed)
    return c + scale * rng.uniform(-1.0, 1.0, size=c.shape)


def pgd_run(
    design: Design,
    initial,
    cfg: ObjectiveConfig,
    schedule: StepSchedule | None = None,
    stop: StopCriteria | None = None,
    record_iterates: bool = False,
    continuation: bool = False,
    continuation_every: int = 200,
    continuation_factor: float = 1.5,
    seed: int = 0,
    certificate: bool = True,
) -> tuple[np.ndarray, RunDiagnostics]:
    """Projected gradient descent c <- P(c - eta grad F(c)).

    Each record holds the state at c^k before the k-th update; the run stops
    when the gradient mapping norm drops to ``gm_tol`` or after ``max_iters``
    updates.
    """
    cfg.validate(design)
    schedule = schedule or StepSchedule()
    stop = stop or StopCriteria()
    t0 = time.perf_counter()

    c = project(design, initial)
    c = _jitter_coincident(c, 1e-8 * min(design.width, design.height), seed)
    c = project(design, c)
    if schedule.eta0 is None:
        L = lipschitz_estimate(design, c, cfg, seed=seed)
        schedule = replace(schedule, eta0=1.0 / L if L > 0 else 1.0)
        log.info("step size from Lipschitz estimate: L=%.4g eta=%.4g", L, schedule.eta0)

    diag = RunDiagnostics(iterates=[] if record_iterates else None)
    ev = evaluate(design, c, cfg)
    gm_tol = stop.gm_tol
    if gm_tol is None:
        gm_tol = 1e-6 * float(np.linalg.norm(ev.grad))
    lam = cfg.lam
    k = 0
    while True:
        if not (np.isfinite(ev.F) and np.all(np.isfinite(ev.grad))):
            raise NonFiniteObjective(f"non-finite objective or gradient at iteration {k}")
        eta = schedule.step(k)
        c_next = project(design, c - eta * ev.grad)
        gm = float(np.linalg.norm(c - c_next) / eta)
        diag.records.append(
            IterRecord(k, ev.F, ev.W, ev.E_eps, ev.Var, overlap_area(design, c), gm, eta, lam)
        )
        if record_iterates:
            diag.iterates.append(c.copy())
        if gm <= gm_tol or k >= stop.max_iters:
            break
        c = c_next
        k += 1
        if continuation and k % continuation_every == 0 and overlap_area(design, c) > 0:
            lam *= continuation_factor
            cfg = replace(cfg, lam=lam)
        ev = evaluate(design, c, cfg)

    diag.summary = {
        "iterations": k,
        "wall_time": time.perf_counter() - t0,
        "eta0": schedule.eta0,
        "schedule": schedule.kind,
        "final_lambda": lam,
        "continuation": continuation,
        "converged": bool(diag.records[-1].grad_mapping_norm <= gm_tol),
        "gm_tol": gm_tol,
        "mu": None,
    }
    if certificate and cfg.penalty == POISSON:
        try:
            cert = overlap_certificate(design, c, cfg.epsilon, grid=cfg.grid_for(design))
            diag.summary["certificate"] = cert.to_dict()
        except Exception as exc:  # reported, never fatal for a finished run
            diag.summary["certificate"] = {"error": f"{type(exc).__name__}: {exc}"}
    if record_iterates and len(diag.iterates) > 51:
        try:
            diag.summary["local_rate"] = asdict(local_rate_fit(diag, 50))
        except InsufficientData:
            pass
    return c, diag


@dataclass
class RateFit:
    rho: float
    slope: float
    r2: float
    window: int
    flagged: bool


def local_rate_fit(source, window: int = 50, reference=None) -> RateFit:
    """Fit log||c^k - c*|| ~ a + k log(rho) over the trailing window.

    ``source`` is a RunDiagnostics with stored iterates, an array of iterates
    (K, n, 2), or a 1-D array of distances to the limit.
    """
    if isinstance(source, RunDiagnostics):
        if source.iterates is None:
            raise InsufficientData("run was not recorded with iterates")
        source = np.asarray(source.iterates)
    arr = np.asarray(source, dtype=float)
    if arr.ndim == 1:
        dist = arr[-window:]
        if dist.size < window:
            raise InsufficientData(f"need {window} distances, got {dist.size}")
    else:
        if arr.shape[0] < window + 1:
            raise InsufficientData(f"need {window + 1} iterates, got {arr.shape[0]}")
        ref = arr[-1] if reference is None else np.asarray(reference, dtype=float)
        tail = arr[-(window + 1):-1] if reference is None else arr[-window:]
        dist = np.linalg.norm((tail - ref).reshape(window, -1), axis=1)
    if np.any(dist <= 0):
        raise InsufficientData("distance to the reference vanished inside the window")
    k = np.arange(dist.size, dtype=float)
    y = np.log(dist)
    slope, intercept = np.polyfit(k, y, 1)
    resid = y - (slope * k + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    rho = float(np.exp(slope))
    return RateFit(rho=rho, slope=float(slope), r2=r2, window=window, flagged=bool(rho > 0.999))


@dataclass
class StationaryReport:
    premise: bool | None
    F_star: float
    W_star: float
    E_star: float
    overlap_star: float
    certificate: dict
    F_opt: float | None = None
    W_opt: float | None = None
    E_opt: float | None = None
    W_min: float | None = None
    delta_W: float | None = None
    overlap_bound: float | None = None
    overlap_bound_holds: bool | None = None
    wl_gap: float | None = None
    wl_gap_bound: float | None = None
    wl_bound_holds: bool | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def stationary_report(
    design: Design,
    c_star,
    cfg: ObjectiveConfig,
    c_opt=None,
    N: int = DEFAULT_MODES,
    strict: bool = False,
    rtol: float = 1e-9,
) -> StationaryReport:
    """Evaluate the stationary-point overlap bound and the wirelength gap bound.

    The overlap bound is |O(c*)| <= sqrt(2) eps P + (E_eps(c_opt) + dW / lambda) / C
    with C measured at c*; the wirelength bound is W(c*) - W(c_opt) <= lambda E_eps(c_opt).
    """
    cfg.validate(design)
    grid = cfg.grid_for(design)
    star = evaluate(design, c_star, cfg, want_grad=False)
    cert = overlap_certificate(design, c_star, cfg.epsilon, N=N, grid=grid)
    rep = StationaryReport(
        premise=None,
        F_star=star.F,
        W_star=star.W,
        E_star=star.E_eps,
        overlap_star=cert.overlap,
        certificate=cert.to_dict(),
    )
    if c_opt is None:
        return rep
    if overlap_area(design, c_opt) > 0:
        raise ValueError("c_opt must be non-overlapping")
    opt = evaluate(design, c_opt, cfg, want_grad=False)
    w_min = wirelength_infimum(design.netlist, cfg.wl_model)
    dW = max(opt.W - w_min, 0.0)
    rep.F_opt, rep.W_opt, rep.E_opt = opt.F, opt.W, opt.E_eps
    rep.W_min, rep.delta_W = w_min, dW
    rep.premise = bool(star.F <= opt.F)
    if cert.C > 0 and cfg.lam > 0:
        rep.overlap_bound = SUPPORT_FACTOR * cfg.epsilon * cert.P_sigma + (opt.E_eps + dW / cfg.lam) / cert.C
    else:
        rep.overlap_bound = float("inf")
    rep.wl_gap = star.W - opt.W
    rep.wl_gap_bound = cfg.lam * opt.E_eps
    tol = rtol * max(1.0, abs(star.F), abs(opt.F))
    rep.overlap_bound_holds = bool(rep.overlap_star <= rep.overlap_bound + tol)
    rep.wl_bound_holds = bool(rep.wl_gap <= rep.wl_gap_bound + tol)
    if strict and not rep.premise:
        raise PremiseNotMet(f"F(c*)={star.F:.6g} > F(c_opt)={opt.F:.6g}")
    return rep


@dataclass
class StabilityResult:
    mean: float
    max: float
    quotients: list[float]
    shifts: list[np.ndarray]


def perturb_areas(design: Design, rel: np.ndarray) -> Design:
    """Scale each module isotropically so that its area changes by factor 1 + rel_i."""
    s = np.sqrt(1.0 + np.asarray(rel, dtype=float))
    return design.with_sizes(design.sizes * s[:, None])


def stability_probe(
    design: Design,
    cfg: ObjectiveConfig,
    delta: float,
    seeds: Sequence[int] = (0,),
    initial=None,
    direction=None,
    schedule: StepSchedule | None = None,
    stop: StopCriteria | None = None,
) -> StabilityResult:
    """Empirical difference quotients ||c*(A + dA) - c*(A)|| / ||dA||.

    The unperturbed solution warm-starts every perturbed solve. ``direction``
    fixes the relative perturbation pattern; otherwise random signs per seed.
    """
    if abs(delta) > 0.05:
        raise ValueError("delta must be at most 5%")
    stop = stop or StopCriteria(max_iters=3000)
    if initial is None:
        initial = np.column_stack([np.full(len(design), design.width / 2), np.full(len(design), design.height / 2)])
        initial = initial + np.random.default_rng(12345).uniform(-0.1, 0.1, initial.shape) * min(design.width, design.height)
    base, diag = pgd_run(design, initial, cfg, schedule, stop, certificate=False)
    eta0 = diag.summary["eta0"]
    sched = schedule or StepSchedule(FIXED, eta0)
    quotients, shifts = [], []
    for seed in seeds:
        if delta == 0:
            quotients.append(0.0)
            shifts.append(np.zeros_like(base))
            continue
        if direction is None:
            rel = delta * np.random.default_rng(seed).choice([-1.0, 1.0], size=len(design))
        else:
            rel = delta * np.asarray(direction, dtype=float)
        pert = perturb_areas(design, rel)
        c_new, _ = pgd_run(pert, base, cfg, sched, stop, certificate=False)
        dA = float(np.linalg.norm(pert.areas - design.areas))
        shift = c_new - base
        shifts.append(shift)
        quotients.append(float(np.linalg.norm(shift) / dA))
    q = np.asarray(quotients)
    return StabilityResult(float(q.mean()), float(q.max()), quotients, shifts)


def suboptimality_terms(design: Design, cfg: ObjectiveConfig) -> dict:
    """Geometry-only constants that enter the stationary-point bounds."""
    return {
        "P_sigma": total_perimeter(design),
        "eps_prime": SUPPORT_FACTOR * cfg.epsilon,
        "W_min": wirelength_infimum(design.netlist, cfg.wl_model),
    }
