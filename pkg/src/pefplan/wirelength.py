"""Netlist model, exact HPWL and smooth wirelength surrogates.

Pins sit at module centers or at fixed pad locations. Two smooth models are
provided: log-sum-exp (LSE, an over-approximation of HPWL) and weighted
average (WA, an under-approximation). Both are stabilized by subtracting the
per-net maximum before exponentiating.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidPinIndex

LSE = "LSE"
WA = "WA"
MODELS = (LSE, WA)


@dataclass(frozen=True)
class Net:
    """A net with pins on module centers and optional fixed pads."""

    modules: tuple[int, ...] = ()
    fixed: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "modules", tuple(int(m) for m in self.modules))
        object.__setattr__(
            self, "fixed", tuple((float(x), float(y)) for x, y in self.fixed)
        )
        if not self.modules and not self.fixed:
            raise ValueError("a net needs at least one pin")

    @property
    def num_pins(self) -> int:
        return len(self.modules) + len(self.fixed)

    @classmethod
    def from_pins(cls, pins: Iterable) -> "Net":
        """Build from a mixed pin list: ints are module indices, pairs are pads."""
        modules, fixed = [], []
        for p in pins:
            if isinstance(p, (int, np.integer)):
                modules.append(int(p))
            else:
                x, y = p
                fixed.append((float(x), float(y)))
        return cls(tuple(modules), tuple(fixed))


@dataclass(frozen=True)
class Netlist:
    nets: tuple[Net, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "nets", tuple(self.nets))

    def __len__(self):
        return len(self.nets)

    def __iter__(self):
        return iter(self.nets)

    def check(self, num_modules: int) -> None:
        for k, net in enumerate(self.nets):
            for m in net.modules:
                if m < 0 or m >= num_modules:
                    raise InvalidPinIndex(
                        f"net {k} references module {m}, design has {num_modules}"
                    )


@dataclass(frozen=True)
class SmoothingConfig:
    gamma: float
    model: str = LSE

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.model not in MODELS:
            raise ValueError(f"unknown wirelength model {self.model!r}")


def _pin_coords(net: Net, placement: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = placement.shape[0]
    for m in net.modules:
        if m < 0 or m >= n:
            raise InvalidPinIndex(f"module index {m} out of range for {n} modules")
    pts = [placement[m] for m in net.modules] + [np.asarray(p) for p in net.fixed]
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return pts[:, 0], pts[:, 1]


def hpwl(netlist: Netlist, placement) -> float:
    """Half-perimeter wirelength summed over nets."""
    placement = np.asarray(placement, dtype=float).reshape(-1, 2)
    total = 0.0
    for net in netlist:
        xs, ys = _pin_coords(net, placement)
        total += (xs.max() - xs.min()) + (ys.max() - ys.min())
    return float(total)


def _lse_axis(v: np.ndarray, gamma: float) -> tuple[float, np.ndarray]:
    """gamma*log sum exp(v/gamma) + gamma*log sum exp(-v/gamma) and its gradient."""
    hi, lo = v.max(), v.min()
    ep = np.exp((v - hi) / gamma)
    em = np.exp((lo - v) / gamma)
    sp, sm = ep.sum(), em.sum()
    value = (hi + gamma * np.log(sp)) + (-lo + gamma * np.log(sm))
    grad = ep / sp - em / sm
    return float(value), grad


def _wa_axis(v: np.ndarray, gamma: float) -> tuple[float, np.ndarray]:
    hi, lo = v.max(), v.min()
    ep = np.exp((v - hi) / gamma)
    em = np.exp((lo - v) / gamma)
    sp, sm = ep.sum(), em.sum()
    mp = (v * ep).sum() / sp
    mm = (v * em).sum() / sm
    # d/dv_k of softmax-weighted mean: w_k (1 + (v_k - mean)/gamma)
    gp = ep / sp * (1.0 + (v - mp) / gamma)
    gm = em / sm * (1.0 - (v - mm) / gamma)
    return float(mp - mm), gp - gm


_AXIS = {LSE: _lse_axis, WA: _wa_axis}


def _smooth(netlist: Netlist, placement, cfg: SmoothingConfig, want_grad: bool):
    placement = np.asarray(placement, dtype=float).reshape(-1, 2)
    axis_fn = _AXIS[cfg.model]
    total = 0.0
    grad = np.zeros_like(placement) if want_grad else None
    for net in netlist:
        xs, ys = _pin_coords(net, placement)
        nm = len(net.modules)
        for d, v in enumerate((xs, ys)):
            val, g = axis_fn(v, cfg.gamma)
            total += val
            if want_grad and nm:
                # fixed pads carry no gradient; repeated module pins accumulate
                np.add.at(grad[:, d], list(net.modules), g[:nm])
    return float(total), grad


def smooth_wl(netlist: Netlist, placement, cfg: SmoothingConfig) -> float:
    return _smooth(netlist, placement, cfg, want_grad=False)[0]


def smooth_wl_grad(netlist: Netlist, placement, cfg: SmoothingConfig) -> np.ndarray:
    """Analytic gradient of :func:`smooth_wl` w.r.t. module centers, shape (n, 2)."""
    return _smooth(netlist, placement, cfg, want_grad=True)[1]


def smooth_wl_and_grad(netlist: Netlist, placement, cfg: SmoothingConfig):
    return _smooth(netlist, placement, cfg, want_grad=True)


def wirelength_infimum(netlist: Netlist, model: str = LSE) -> float:
    """Lower bound on the wirelength functional over unconstrained placements.

    Nets without pads contribute 0 (all pins coincide). For nets with pads the
    HPWL infimum is the pad bounding box, reached by putting free pins inside
    it. LSE dominates HPWL so the same number bounds it; WA can undercut HPWL
    on padded nets, so only its trivial bound 0 is used there.
    """
    total = 0.0
    for net in netlist:
        if not net.fixed or model == WA:
            continue
        pads = np.asarray(net.fixed, dtype=float)
        total += np.ptp(pads[:, 0]) + np.ptp(pads[:, 1])
    return float(total)


def default_gamma(width: float, height: float) -> float:
    return 0.01 * min(width, height)


def nets_from_pins(pin_lists: Sequence[Sequence]) -> Netlist:
    return Netlist(tuple(Net.from_pins(p) for p in pin_lists))
