"""Design/config documents, CSV emitters and all-or-nothing file output."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .field import Grid, ScalarField
from .geometry import Design, ModuleShape
from .wirelength import Net, Netlist


class InputError(ValueError):
    """Malformed design, config or field file."""


# --- design documents --------------------------------------------------------

def _pin(p, k):
    if isinstance(p, dict) and "m" in p:
        return int(p["m"])
    if isinstance(p, dict) and "fixed" in p:
        x, y = p["fixed"]
        return (float(x), float(y))
    raise InputError(f"net {k}: pin must be {{'m': i}} or {{'fixed': [x, y]}}, got {p!r}")


def design_from_dict(doc: dict) -> tuple[Design, np.ndarray | None]:
    try:
        dom = doc["domain"]
        W, H = float(dom["W"]), float(dom["H"])
        modules = tuple(ModuleShape(float(m["w"]), float(m["h"])) for m in doc["modules"])
        nets = tuple(Net.from_pins(_pin(p, k) for p in net) for k, net in enumerate(doc.get("nets", [])))
        design = Design(modules, W, H, Netlist(nets))
        initial = doc.get("initial")
        if initial is not None:
            initial = np.asarray(initial, dtype=float).reshape(-1, 2)
            if initial.shape[0] != len(modules):
                raise InputError("initial placement length does not match modules")
    except InputError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"invalid design document: {type(exc).__name__}: {exc}") from exc
    return design, initial


def design_to_dict(design: Design, placement=None) -> dict:
    doc = {
        "domain": {"W": design.width, "H": design.height},
        "modules": [{"w": m.width, "h": m.height} for m in design.modules],
        "nets": [
            [{"m": m} for m in net.modules] + [{"fixed": list(p)} for p in net.fixed]
            for net in design.netlist
        ],
    }
    if placement is not None:
        doc["initial"] = np.asarray(placement, dtype=float).tolist()
    return doc


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_design(path) -> tuple[Design, np.ndarray | None]:
    return design_from_dict(read_json(path))


# --- run configuration -------------------------------------------------------

@dataclass
class RunConfig:
    lam: float = 1.0
    epsilon: float | None = None
    gamma: float | None = None
    wl_model: str = "LSE"
    penalty: str = "poisson"
    grid: tuple[int, int] | None = None
    kind: str = "Fixed"
    eta0: float | None = None
    max_iters: int = 1000
    gm_tol: float | None = None
    continuation: bool = False
    cfl: float = 0.5
    t_end: float = 1.0
    record_every: int = 10
    max_steps: int | None = None
    N: int = 16
    extra: dict = field(default_factory=dict)


_KEYS = {
    "lambda": "lam",
    "epsilon": "epsilon",
    "gamma": "gamma",
    "wl_model": "wl_model",
    "penalty": "penalty",
    "grid": "grid",
    "kind": "kind",
    "eta0": "eta0",
    "max_iters": "max_iters",
    "gm_tol": "gm_tol",
    "continuation": "continuation",
    "cfl": "cfl",
    "t_end": "t_end",
    "record_every": "record_every",
    "max_steps": "max_steps",
    "N": "N",
}


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise InputError("config must be a JSON object")
    unknown = sorted(set(doc) - set(_KEYS))
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(unknown)}")
    cfg = RunConfig()
    for key, attr in _KEYS.items():
        if key in doc:
            setattr(cfg, attr, doc[key])
    if cfg.grid is not None:
        g = cfg.grid
        if isinstance(g, int):
            g = (g, g)
        try:
            cfg.grid = (int(g[0]), int(g[1]))
        except (TypeError, IndexError, ValueError) as exc:
            raise InputError(f"grid must be [nx, ny]: {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    return config_from_dict(read_json(path))


# --- CSV ------------------------------------------------------------------------

def fmt(v) -> str:
    """Locale-free, round-trip float formatting."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    x = float(v)
    if math.isnan(x):
        return "nan"
    return repr(x)


def csv_text(header, rows, footer: list[str] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    for line in footer or []:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def field_csv(f: ScalarField) -> str:
    X, Y = f.grid.mesh()
    rows = zip(X.ravel(), Y.ravel(), f.values.ravel())
    return csv_text(["x", "y", "value"], rows)


def read_field_csv(path, width: float | None = None, height: float | None = None) -> ScalarField:
    """Parse an ``x,y,value`` CSV sampled at cell centers of a uniform grid."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    if data.shape[1] != 3 or data.shape[0] == 0:
        raise InputError(f"{path}: expected columns x,y,value")
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    nx, ny = xs.size, ys.size
    if nx * ny != data.shape[0]:
        raise InputError(f"{path}: samples do not form a full grid")
    hx = (xs[1] - xs[0]) if nx > 1 else 2 * xs[0]
    hy = (ys[1] - ys[0]) if ny > 1 else 2 * ys[0]
    grid = Grid(nx, ny, width or nx * hx, height or ny * hy)
    vals = np.empty((nx, ny))
    ix = np.searchsorted(xs, data[:, 0])
    iy = np.searchsorted(ys, data[:, 1])
    vals[ix, iy] = data[:, 2]
    return ScalarField(grid, vals)


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


# --- atomic multi-file output ---------------------------------------------------

class AtomicOutputs:
    """Collects file payloads and publishes them together.

    Every payload is written to a temporary file in its target directory and
    renamed into place only after all of them were written. Nothing is left
    behind on failure.
    """

    def __init__(self):
        self._items: list[tuple[Path, bytes | str | callable]] = []

    def add_text(self, path, text: str) -> None:
        self._items.append((Path(path), text))

    def add_writer(self, path, writer) -> None:
        """``writer(tmp_path)`` produces the file (e.g. a matplotlib savefig)."""
        self._items.append((Path(path), writer))

    @property
    def paths(self) -> list[Path]:
        return [p for p, _ in self._items]

    def commit(self) -> list[Path]:
        temps: list[tuple[str, Path]] = []
        try:
            for path, payload in self._items:
                path.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=path.suffix, dir=path.parent)
                os.close(fd)
                temps.append((tmp, path))
                if callable(payload):
                    payload(tmp)
                else:
                    with open(tmp, "w", encoding="utf-8", newline="") as fh:
                        fh.write(payload)
            for tmp, path in temps:
                os.replace(tmp, path)
        except BaseException:
            for tmp, _ in temps:
                if os.path.exists(tmp):
                    os.unlink(tmp)
            raise
        return self.paths
