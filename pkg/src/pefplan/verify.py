"""Invariant battery behind ``pefplan verify``.

Every check yields a named record with the measured value, the bound it is
held against and the signed margin (positive means satisfied). Nothing time-
or host-dependent enters the report, so reruns are byte-identical.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import energy, spectral
from .energy import SUPPORT_FACTOR, check_density, module_energies, overlap_certificate, spectral_report
from .field import Grid, residual, density
from .geometry import Design, eroded_overlap_area, overlap_area, total_perimeter
from .instances import random_instance, random_overlapping_instance
from .optimize import ObjectiveConfig, evaluate, project

SEEDED_INSTANCES = 6
SEEDED_GRID = 128
SEEDED_EPS = 0.03


@dataclass
class Check:
    name: str
    value: float
    bound: float
    margin: float
    passed: bool


def _upper(name, value, bound, rtol=1e-12) -> Check:
    """value <= bound up to rtol."""
    tol = rtol * max(abs(value), abs(bound))
    return Check(name, float(value), float(bound), float(bound - value), bool(value <= bound + tol))


def _lower(name, value, bound, rtol=1e-12) -> Check:
    tol = rtol * max(abs(value), abs(bound))
    return Check(name, float(value), float(bound), float(value - bound), bool(value >= bound - tol))


def fd_gradient_error(design: Design, c, cfg: ObjectiveConfig, h: float = 1e-6) -> float:
    """Max relative deviation of the analytic gradient from central differences."""
    c = np.asarray(c, dtype=float)
    g = evaluate(design, c, cfg).grad
    fd = np.zeros_like(c)
    for idx in np.ndindex(c.shape):
        cp, cm = c.copy(), c.copy()
        cp[idx] += h
        cm[idx] -= h
        fd[idx] = (evaluate(design, cp, cfg, False).F - evaluate(design, cm, cfg, False).F) / (2 * h)
    scale = max(float(np.abs(fd).max()), float(np.abs(g).max()), 1e-12)
    return float(np.abs(g - fd).max() / scale)


def instance_checks(design: Design, placement, eps: float, grid: Grid, N: int = 16, gradient_check: bool = True):
    check_density(design)
    c = project(design, placement)
    checks: list[Check] = []

    rho = density(design, c, eps, grid)
    f = residual(rho, design.mean_density)
    rep = spectral_report(f, N)
    E = energy.poisson_energy(f)
    phi = spectral.solve_poisson(f)
    quad = 0.5 * f.inner(phi)
    sum_alpha2 = float(np.sum(spectral.cosine_forward(f).coefficients ** 2))
    scale = max(abs(E), abs(quad), 1e-300)
    checks.append(_upper("spectral_identity", abs(E - quad) / scale, 1e-12, rtol=0))
    checks.append(_upper("parseval", abs(rep.Var - sum_alpha2) / max(rep.Var, 1e-300), 1e-12, rtol=0))
    checks.append(_upper("energy_upper_bound", E, rep.upper_bound))
    checks.append(_lower("energy_lower_bound", E, rep.lower_bound))

    Ni = module_energies(design, c, phi, eps, grid)
    checks.append(_upper("module_energy_sum", abs(Ni.sum() - 2 * E) / max(2 * abs(E), 1e-300), 1e-6, rtol=0))

    O = overlap_area(design, c)
    eroded = eroded_overlap_area(design, c, eps)
    lemma = max(O - SUPPORT_FACTOR * eps * total_perimeter(design), 0.0)
    checks.append(_lower("erosion_lemma", eroded, lemma))

    if O > 0:
        checks.append(Check("overlap_detection", float(E), 0.0, float(E), bool(E > 0)))
    cert = overlap_certificate(design, c, eps, N=N, grid=grid)
    checks.append(Check("overlap_certificate", cert.E_eps, cert.bound, cert.margin, cert.satisfied))

    if gradient_check and len(design):
        cfg = ObjectiveConfig(lam=1.0, epsilon=eps, grid=grid)
        err = fd_gradient_error(design, c, cfg)
        checks.append(_upper("gradient_fd", err, 1e-5, rtol=0))
    return checks


def run_battery(design: Design, placement, eps: float, grid: Grid, N: int = 16, seed: int = 0) -> dict:
    """Checks on the given instance followed by a seeded random suite."""
    ObjectiveConfig(epsilon=eps).validate(design)
    sections = [{"instance": "input", "checks": instance_checks(design, placement, eps, grid, N)}]
    sgrid_n = SEEDED_GRID
    for j in range(SEEDED_INSTANCES):
        s = 1000 * seed + j
        if j % 2 == 0:
            d, c = random_overlapping_instance(s, n=3)
        else:
            d, c = random_instance(s, n=4)
        g = Grid(sgrid_n, sgrid_n, d.width, d.height)
        sections.append({"instance": f"seeded_{j}", "checks": instance_checks(d, c, SEEDED_EPS, g, N)})
    failed = [f"{sec['instance']}:{ch.name}" for sec in sections for ch in sec["checks"] if not ch.passed]
    return {
        "seed": seed,
        "epsilon": eps,
        "grid": [grid.nx, grid.ny],
        "N": N,
        "instances": [
            {"instance": sec["instance"], "checks": [asdict(ch) for ch in sec["checks"]]} for sec in sections
        ],
        "failed": failed,
        "passed": not failed,
    }
