"""Finite-volume simulation of d_t rho = div(rho grad phi), -Lap phi = rho - rho_bar.

Fluxes live on interior cell faces and vanish on the boundary, so the update
telescopes and conserves mass to round-off. Face velocities are -grad phi by
face differences; the transported density is taken upwind. The time step obeys
a transport CFL bound (sum of the per-axis speed maxima) and a relaxation cap
dt <= cfl / max(rho), since near equilibrium the residual decays at rate rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .errors import NegativeDensity
from .field import Grid, ScalarField, residual

LEDGER_COLUMNS = ("t", "E", "mass", "min_rho", "diss_lhs", "diss_rhs")


@dataclass(frozen=True)
class FlowConfig:
    grid: Grid
    cfl: float = 0.5
    t_end: float = 1.0
    record_every: int = 10
    max_steps: int | None = None
    dt_max: float = math.inf

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.record_every < 1:
            raise ValueError("record_every must be positive")


@dataclass
class FlowState:
    rho: ScalarField
    t: float = 0.0
    mass: float = 0.0
    energy: float = 0.0

    @classmethod
    def initial(cls, rho: ScalarField, t: float = 0.0) -> "FlowState":
        _, phi = _potential(rho)
        f = residual(rho, rho.mean())
        return cls(rho, t, rho.integral(), 0.5 * f.inner(phi))


def _potential(rho: ScalarField) -> tuple[ScalarField, ScalarField]:
    f = residual(rho, rho.mean())
    return f, spectral.solve_poisson(f)


def _divergence(Fx: np.ndarray, Fy: np.ndarray, grid: Grid) -> np.ndarray:
    """Divergence of interior-face fluxes with zero flux through the boundary."""
    div = np.zeros(grid.shape)
    div[:-1, :] += Fx / grid.hx
    div[1:, :] -= Fx / grid.hx
    div[:, :-1] += Fy / grid.hy
    div[:, 1:] -= Fy / grid.hy
    return div


def dissipation(rho: ScalarField, phi: ScalarField) -> float:
    """Integral of rho |grad phi|^2 with face-averaged density."""
    gx, gy = spectral.face_gradients(phi)
    r = rho.values
    rx = 0.5 * (r[1:, :] + r[:-1, :])
    ry = 0.5 * (r[:, 1:] + r[:, :-1])
    return float(((rx * gx**2).sum() + (ry * gy**2).sum()) * rho.grid.cell_area)


def _check_positive(r: np.ndarray) -> None:
    top = float(r.max())
    if float(r.min()) < -1e-12 * max(top, 0.0):
        raise NegativeDensity(f"density dropped to {float(r.min()):.3e}; reduce cfl")


def _advance(state: FlowState, cfg: FlowConfig, phi: ScalarField):
    g = state.rho.grid
    r = state.rho.values
    gx, gy = spectral.face_gradients(phi)
    vx, vy = -gx, -gy
    Fx = np.where(vx > 0, vx * r[:-1, :], vx * r[1:, :])
    Fy = np.where(vy > 0, vy * r[:, :-1], vy * r[:, 1:])
    speed = (np.abs(vx).max() if vx.size else 0.0) + (np.abs(vy).max() if vy.size else 0.0)
    dt = cfg.cfl / max(float(r.max()), 1e-300)
    if speed > 0:
        dt = min(dt, cfg.cfl * min(g.hx, g.hy) / speed)
    dt = min(dt, cfg.dt_max, max(cfg.t_end - state.t, 0.0))
    if dt <= 0:
        return r.copy(), 0.0
    return r - dt * _divergence(Fx, Fy, g), dt


def wgf_step(state: FlowState, cfg: FlowConfig) -> FlowState:
    """One conservative upwind step of the Poisson transport flow."""
    if float(state.rho.values.min()) < 0 or state.rho.integral() <= 0:
        raise ValueError("density must be non-negative with positive mass")
    _, phi = _potential(state.rho)
    new, dt = _advance(state, cfg, phi)
    _check_positive(new)
    return FlowState.initial(ScalarField(state.rho.grid, new), state.t + dt)


@dataclass
class FlowResult:
    ledger: list[tuple] = field(default_factory=list)
    snapshots: list[tuple[float, ScalarField]] = field(default_factory=list)
    final: FlowState | None = None
    steps: int = 0

    def column(self, name: str) -> np.ndarray:
        i = LEDGER_COLUMNS.index(name)
        return np.array([row[i] for row in self.ledger], dtype=float)

    def mismatch(self, floor: float = 0.0) -> float:
        """Time-averaged relative dissipation mismatch |lhs - rhs| / max(|rhs|, floor)."""
        lhs = self.column("diss_lhs")[1:]
        rhs = self.column("diss_rhs")[1:]
        t = self.column("t")
        dt = np.diff(t)
        keep = dt > 0
        rel = np.abs(lhs - rhs)[keep] / np.maximum(np.abs(rhs[keep]), floor)
        return float(np.sum(rel * dt[keep]) / np.sum(dt[keep]))


def wgf_run(rho0: ScalarField, cfg: FlowConfig) -> FlowResult:
    """Integrate to ``t_end`` (or ``max_steps``) and keep the dissipation ledger.

    Row n > 0 records the state after step n together with the finite
    difference (E_n - E_{n-1}) / dt and minus the trapezoidal average of the
    dissipation integral at both ends of the step.
    """
    if float(rho0.values.min()) < 0:
        raise ValueError("initial density must be non-negative")
    state = FlowState.initial(rho0)
    res = FlowResult()
    _, phi = _potential(state.rho)
    diss = dissipation(state.rho, phi)
    res.ledger.append((state.t, state.energy, state.mass, float(rho0.values.min()), math.nan, math.nan))
    res.snapshots.append((state.t, state.rho))
    n = 0
    while state.t < cfg.t_end and (cfg.max_steps is None or n < cfg.max_steps):
        new, dt = _advance(state, cfg, phi)
        if dt <= 0:
            break
        _check_positive(new)
        rho = ScalarField(rho0.grid, new)
        f, phi = _potential(rho)
        nxt = FlowState(rho, state.t + dt, rho.integral(), 0.5 * f.inner(phi))
        diss_new = dissipation(rho, phi)
        lhs = (nxt.energy - state.energy) / dt
        rhs = -0.5 * (diss + diss_new)
        res.ledger.append((nxt.t, nxt.energy, nxt.mass, float(new.min()), lhs, rhs))
        state, diss = nxt, diss_new
        n += 1
        if n % cfg.record_every == 0:
            res.snapshots.append((state.t, state.rho))
    res.final = state
    res.steps = n
    return res


def heat_step_run(rho0: ScalarField, cfg: FlowConfig) -> FlowResult:
    """d_t rho = Lap rho with zero boundary flux, on the same face machinery.

    The ledger reuses the flow columns: E is the Poisson energy of the
    current density and the dissipation pair compares dE/dt with -Var.
    """
    g = rho0.grid
    dt0 = cfg.cfl / (2.0 / g.hx**2 + 2.0 / g.hy**2)
    state = FlowState.initial(rho0)
    res = FlowResult()
    f = residual(rho0, rho0.mean())
    var = f.inner(f)
    res.ledger.append((0.0, state.energy, state.mass, float(rho0.values.min()), math.nan, math.nan))
    res.snapshots.append((0.0, rho0))
    n = 0
    while state.t < cfg.t_end and (cfg.max_steps is None or n < cfg.max_steps):
        dt = min(dt0, cfg.dt_max, cfg.t_end - state.t)
        r = state.rho.values
        Fx = -np.diff(r, axis=0) / g.hx
        Fy = -np.diff(r, axis=1) / g.hy
        new = r - dt * _divergence(Fx, Fy, g)
        _check_positive(new)
        rho = ScalarField(g, new)
        f, phi = _potential(rho)
        var_new = f.inner(f)
        nxt = FlowState(rho, state.t + dt, rho.integral(), 0.5 * f.inner(phi))
        res.ledger.append(
            (nxt.t, nxt.energy, nxt.mass, float(new.min()), (nxt.energy - state.energy) / dt, -0.5 * (var + var_new))
        )
        state, var = nxt, var_new
        n += 1
        if n % cfg.record_every == 0:
            res.snapshots.append((state.t, state.rho))
    res.final = state
    res.steps = n
    return res


def half_imbalance(field: ScalarField) -> float:
    """Mass in the left half of the domain minus mass in the right half."""
    v = field.values
    nx = v.shape[0]
    h = field.grid.cell_area
    left = v[: nx // 2].sum()
    right = v[nx - nx // 2:].sum()
    return float((left - right) * h)


def half_life(times, imbalances) -> float:
    """First time |imbalance| falls to half its initial value (linear interpolation)."""
    t = np.asarray(times, dtype=float)
    m = np.abs(np.asarray(imbalances, dtype=float))
    if m.size == 0 or m[0] == 0:
        return 0.0
    target = 0.5 * m[0]
    below = np.nonzero(m <= target)[0]
    if below.size == 0:
        return math.inf
    j = int(below[0])
    if j == 0:
        return float(t[0])
    return float(t[j - 1] + (m[j - 1] - target) / (m[j - 1] - m[j]) * (t[j] - t[j - 1]))


@dataclass
class FlowComparison:
    wgf: FlowResult
    heat: FlowResult
    wgf_imbalance: list[tuple[float, float]]
    heat_imbalance: list[tuple[float, float]]
    wgf_half_life: float
    heat_half_life: float


def heat_flow_compare(rho0: ScalarField, cfg: FlowConfig) -> FlowComparison:
    """Run the Poisson transport flow and the heat flow from the same data."""
    w = wgf_run(rho0, cfg)
    h = heat_step_run(rho0, cfg)
    wi = [(t, half_imbalance(s)) for t, s in w.snapshots]
    hi = [(t, half_imbalance(s)) for t, s in h.snapshots]
    for res, series in ((w, wi), (h, hi)):
        if res.final is not None and series[-1][0] != res.final.t:
            series.append((res.final.t, half_imbalance(res.final.rho)))
    return FlowComparison(
        wgf=w,
        heat=h,
        wgf_imbalance=wi,
        heat_imbalance=hi,
        wgf_half_life=half_life(*zip(*wi)),
        heat_half_life=half_life(*zip(*hi)),
    )
