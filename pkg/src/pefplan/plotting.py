"""Static figures written next to the CSV/JSON outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .geometry import Design, overlap_rects, placed_rects  # noqa: E402

# fixed ids and no timestamps so identical inputs give identical files
plt.rcParams.update(
    {
        "svg.hashsalt": "pefplan",
        "svg.fonttype": "none",
        "font.size": 9,
        "axes.titlesize": 10,
        "axes.spines.top": False,
        "axes.spines.right": False,
    }
)
_META = {"svg": {"Date": None}, "png": {"Software": None}}


def _save(fig, path, fmt):
    fig.savefig(path, format=fmt, metadata=_META.get(fmt), bbox_inches="tight")
    plt.close(fig)


def layout_figure(design: Design, placement, path, fmt: str = "svg") -> None:
    """Domain frame, module rectangles and the pairwise overlap regions."""
    c = np.asarray(placement, dtype=float).reshape(-1, 2)
    scale = 5.0 / max(design.width, design.height)
    fig, ax = plt.subplots(figsize=(design.width * scale + 0.6, design.height * scale + 0.6))
    ax.add_patch(Rectangle((0, 0), design.width, design.height, fill=False, lw=1.2, ec="k"))
    for i, (l, r, b, t) in enumerate(placed_rects(design.sizes, c)):
        ax.add_patch(Rectangle((l, b), r - l, t - b, fc="#9ecae1", ec="#08519c", lw=0.8, alpha=0.6))
        ax.text(0.5 * (l + r), 0.5 * (b + t), str(i), ha="center", va="center", fontsize=7)
    for l, r, b, t in overlap_rects(design, c):
        ax.add_patch(Rectangle((l, b), r - l, t - b, fc="#de2d26", ec="none", alpha=0.7))
    for net in design.netlist:
        for p in net.fixed:
            ax.plot(*p, marker="s", ms=4, color="k")
    ax.set_xlim(-0.02 * design.width, 1.02 * design.width)
    ax.set_ylim(-0.02 * design.height, 1.02 * design.height)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    _save(fig, path, fmt)


def diagnostics_figure(diag, path, fmt: str = "png") -> None:
    k = diag.column("k")
    fig, axes = plt.subplots(1, 3, figsize=(10, 3))
    axes[0].plot(k, diag.column("F"), label="F")
    axes[0].plot(k, diag.column("W"), label="W", ls="--")
    axes[0].set_title("objective")
    axes[0].legend(frameon=False)
    for ax, name, title in ((axes[1], "E_eps", "Poisson energy"), (axes[2], "grad_mapping_norm", "gradient mapping")):
        y = np.maximum(diag.column(name), 1e-300)
        ax.semilogy(k, y)
        ax.set_title(title)
    ov = diag.column("overlap")
    ax2 = axes[1].twinx()
    ax2.plot(k, ov, color="C3", lw=0.8)
    ax2.set_ylabel("overlap area", color="C3")
    for ax in axes:
        ax.set_xlabel("iteration")
    fig.tight_layout()
    _save(fig, path, fmt)


def flow_figure(result, path, heat=None, fmt: str = "png") -> None:
    fig, axes = plt.subplots(1, 2, figsize=(8, 3))
    t = result.column("t")
    axes[0].semilogy(t, np.maximum(result.column("E"), 1e-300), label="Poisson flow")
    if heat is not None:
        axes[0].semilogy(heat.column("t"), np.maximum(heat.column("E"), 1e-300), label="heat flow", ls="--")
        axes[0].legend(frameon=False)
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("E")
    axes[1].plot(t[1:], -result.column("diss_lhs")[1:], label="-dE/dt")
    axes[1].plot(t[1:], -result.column("diss_rhs")[1:], label="int rho |grad phi|^2", ls="--")
    axes[1].set_xlabel("t")
    axes[1].legend(frameon=False)
    fig.tight_layout()
    _save(fig, path, fmt)


def spectrum_figure(rows, path, fmt: str = "png") -> None:
    lam = np.array([r["lambda_discrete"] for r in rows if r["lambda_discrete"] > 0])
    a2 = np.array([r["alpha"] ** 2 for r in rows if r["lambda_discrete"] > 0])
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.loglog(lam, np.maximum(a2, 1e-300), ".", ms=3, label="alpha^2")
    ax.loglog(lam, np.maximum(a2 / lam, 1e-300), ".", ms=3, label="alpha^2 / lambda")
    ax.set_xlabel("discrete eigenvalue")
    ax.legend(frameon=False)
    _save(fig, path, fmt)
