"""Seeded benchmark instances and the 1-D oracle for the two-module pad problem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Design, overlap_area, random_design, random_placement
from .optimize import ObjectiveConfig
from .wirelength import Net, Netlist, smooth_wl


def random_netlist(rng: np.random.Generator, n: int, num_nets: int | None = None, width=1.0, height=1.0) -> Netlist:
    """2-3 pin nets over n modules, roughly one in four with a boundary pad."""
    num_nets = n if num_nets is None else num_nets
    nets = []
    for _ in range(num_nets):
        k = min(n, int(rng.integers(2, 4)))
        mods = tuple(int(m) for m in rng.choice(n, size=k, replace=False))
        pads = ()
        if rng.random() < 0.25:
            side = rng.integers(4)
            u = float(rng.uniform())
            pads = (((u * width, 0.0), (u * width, height), (0.0, u * height), (width, u * height))[side],)
        nets.append(Net(mods, pads))
    return Netlist(tuple(nets))


def random_instance(seed: int, n: int, size_range=(0.15, 0.4), with_nets: bool = True):
    """Random design with a random feasible placement, fully determined by seed."""
    rng = np.random.default_rng(seed)
    base = random_design(rng, n, size_range=size_range)
    netlist = random_netlist(rng, n) if with_nets and n >= 2 else Netlist()
    design = Design(base.modules, base.width, base.height, netlist)
    return design, random_placement(rng, design)


def random_overlapping_instance(seed: int, n: int = 3, size_range=(0.15, 0.4), tries: int = 100):
    """Like ``random_instance`` but resampled until some pair overlaps."""
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        design = random_design(rng, n, size_range=size_range)
        c = random_placement(rng, design)
        if overlap_area(design, c) > 0:
            return design, c
    raise RuntimeError("no overlapping configuration found")


def pad_pair_instance(sizes=((0.3, 0.3), (0.3, 0.3)), pad=(0.5, 0.5), width=1.0, height=1.0) -> Design:
    """Two modules, each tied by a 2-pin net to one shared fixed pad."""
    nets = Netlist((Net((0,), (pad,)), Net((1,), (pad,))))
    return Design.from_sizes(sizes, width, height, nets)


def seeded_pad_pair(seed: int) -> Design:
    rng = np.random.default_rng(seed)
    return pad_pair_instance(sizes=rng.uniform(0.2, 0.32, size=(2, 2)))


def eight_module_instance(seed: int = 7) -> tuple[Design, np.ndarray]:
    """Eight modules on a chain-plus-pads netlist, started from a crowded center."""
    rng = np.random.default_rng(seed)
    sizes = rng.uniform(0.12, 0.24, size=(8, 2))
    nets = [Net((i, i + 1)) for i in range(7)]
    nets += [Net((0,), ((0.0, 0.5),)), Net((7,), ((1.0, 0.5),)), Net((2, 5)), Net((1, 4, 6))]
    design = Design.from_sizes(sizes, 1.0, 1.0, Netlist(tuple(nets)))
    c0 = 0.5 + rng.uniform(-0.15, 0.15, size=(8, 2))
    return design, c0


@dataclass
class SweepOptimum:
    placement: np.ndarray
    W: float
    axis: int
    offset: float


def pad_pair_optimum(design: Design, cfg: ObjectiveConfig, step: float = 1e-4) -> SweepOptimum:
    """Minimize smooth W over abutting non-overlapping pad-pair layouts.

    Both modules sit on the pad's line in the other coordinate and touch along
    one axis; the free parameter is the position of module 0 along that axis,
    swept exhaustively with spacing ``step``. Both axes and both orders are tried.
    """
    if len(design) != 2:
        raise ValueError("pad-pair oracle needs exactly two modules")
    pad = design.netlist.nets[0].fixed[0]
    smoothing = cfg.smoothing(design)
    sz = design.sizes
    dom = (design.width, design.height)
    best = None
    for axis in (0, 1):
        other = 1 - axis
        gap = 0.5 * (sz[0, axis] + sz[1, axis]) * (1 + 1e-12)
        for sign in (1.0, -1.0):
            lo0 = 0.5 * sz[0, axis]
            hi0 = dom[axis] - 0.5 * sz[0, axis]
            a = np.arange(lo0, hi0 + 0.5 * step, step)
            b = a + sign * gap
            ok = (b >= 0.5 * sz[1, axis] - 1e-12) & (b <= dom[axis] - 0.5 * sz[1, axis] + 1e-12)
            a, b = a[ok], b[ok]
            if a.size == 0:
                continue
            c = np.empty((a.size, 2, 2))
            c[:, 0, axis], c[:, 1, axis] = a, b
            c[:, 0, other] = np.clip(pad[other], 0.5 * sz[0, other], dom[other] - 0.5 * sz[0, other])
            c[:, 1, other] = np.clip(pad[other], 0.5 * sz[1, other], dom[other] - 0.5 * sz[1, other])
            w = np.array([smooth_wl(design.netlist, ci, smoothing) for ci in c])
            j = int(np.argmin(w))
            if best is None or w[j] < best.W:
                best = SweepOptimum(c[j].copy(), float(w[j]), axis, float(a[j]))
    return best
