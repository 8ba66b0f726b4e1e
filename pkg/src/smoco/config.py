"""Run configuration: JSON ingestion, validation and key-value file output.

A configuration is one JSON document::

    {
      "plant": {"A": [[...]], "B": ..., "C": ..., "Lambda": ..., "C_omega": ...},
      "Phi": [[...]],
      "bounds": {"omega_bar": 1, "switch_gain": 1000},
      "gains": {"supplied": {"L_bar": ..., "Lcal_bar": ..., "H1": ..., "H2": ...,
                             "H3": ..., "K": ...}}
           or  {"observer": {"poles": [...]} | {"region": {...}},
                "cascade":  {"poles": [...]} | {"region": {...}},
                "controller": {"poles": [...]} | {"K": [[...]]},
                "switch_scale": 1.0},
      "disturbance": [[{"type": "sine", "amplitude": 5, "frequency": 1}], ...],
      "sim": {"x0": [...], "dt": 1e-4, "t_end": 30, "seed": 1, ...}
    }

Complex poles are written as ``[re, im]``; the conjugate must be listed too.
"""

import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .model import DisturbanceBounds, ModelError, PlantModel, build_augmented
from .sim import Constant, DisturbanceSpec, SimConfig, Sine, Step
from .synth import LmiRegion

BUNDLED = Path(__file__).with_name("data")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass
class GainSpec:
    supplied: dict | None = None
    observer_poles: np.ndarray | None = None
    cascade_poles: np.ndarray | None = None
    observer_region: LmiRegion | None = None
    cascade_region: LmiRegion | None = None
    controller_poles: np.ndarray | None = None
    K: np.ndarray | None = None
    switch_scale: float = 1.0


@dataclass
class RunConfig:
    plant: PlantModel
    Phi: np.ndarray
    bounds: DisturbanceBounds
    gains: GainSpec
    disturbance: DisturbanceSpec
    sim: SimConfig
    raw: dict
    source: str = "<inline>"

    @property
    def hash(self):
        return config_hash(self.raw)

    def augmented(self):
        return build_augmented(self.plant, self.Phi)


def config_hash(raw):
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def bundled_config(name):
    path = BUNDLED / f"{name}.json"
    if not path.exists():
        raise ConfigError("config", f"no bundled config named {name!r}")
    return path


# field readers

def _get(d, key, path, default=...):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}.{key}", "missing")
        return default
    return d[key]


def _matrix(value, path, shape=None):
    try:
        arr = np.atleast_2d(np.asarray(value, dtype=float))
    except (TypeError, ValueError):
        raise ConfigError(path, "expected a numeric matrix (row-major nested arrays)") from None
    if arr.ndim != 2:
        raise ConfigError(path, f"expected a matrix, got {arr.ndim} dimensions")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(path, "non-finite entries")
    if shape is not None and arr.shape != shape:
        raise ConfigError(path, f"shape {arr.shape}, expected {shape}")
    return arr


def _vector(value, path, size=None):
    try:
        arr = np.asarray(value, dtype=float).ravel()
    except (TypeError, ValueError):
        raise ConfigError(path, "expected a numeric vector") from None
    if not np.all(np.isfinite(arr)):
        raise ConfigError(path, "non-finite entries")
    if size is not None and arr.shape != (size,):
        raise ConfigError(path, f"length {arr.size}, expected {size}")
    return arr


def _number(value, path, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(path, "expected a finite number")
    if positive and value <= 0:
        raise ConfigError(path, "must be positive")
    if nonneg and value < 0:
        raise ConfigError(path, "must be non-negative")
    return float(value)


def _poles(value, path):
    out = []
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a non-empty list of poles")
    for i, p in enumerate(value):
        if isinstance(p, list):
            if len(p) != 2:
                raise ConfigError(f"{path}[{i}]", "complex poles are [re, im]")
            out.append(complex(_number(p[0], f"{path}[{i}]"), _number(p[1], f"{path}[{i}]")))
        else:
            out.append(complex(_number(p, f"{path}[{i}]")))
    arr = np.array(out)
    return arr.real if np.all(arr.imag == 0) else arr


def _region(value, path):
    deg = _get(value, "half_angle_deg", path, None)
    if deg is not None:
        alpha = math.radians(_number(deg, f"{path}.half_angle_deg", positive=True))
    else:
        alpha = _number(_get(value, "half_angle", path), f"{path}.half_angle", positive=True)
    try:
        return LmiRegion(
            alpha,
            _number(_get(value, "radius", path), f"{path}.radius", positive=True),
            _number(_get(value, "shift", path), f"{path}.shift"),
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _pole_or_region(d, path, count):
    has_p, has_r = "poles" in d, "region" in d
    if has_p == has_r:
        raise ConfigError(path, "give exactly one of 'poles' or 'region'")
    if has_p:
        poles = _poles(d["poles"], f"{path}.poles")
        if poles.size != count:
            raise ConfigError(f"{path}.poles", f"{poles.size} poles, expected {count}")
        return poles, None
    region = _region(d["region"], f"{path}.region")
    return region.default_poles(count), region


def _parse_plant(raw):
    p = _get(raw, "plant", "$")
    A = _matrix(_get(p, "A", "plant"), "plant.A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ConfigError("plant.A", f"must be square, got {A.shape}")
    B = _matrix(_get(p, "B", "plant"), "plant.B")
    if B.shape[0] != n:
        raise ConfigError("plant.B", f"has {B.shape[0]} rows, expected {n}")
    m = B.shape[1]
    C = _matrix(_get(p, "C", "plant"), "plant.C")
    if C.shape[1] != n:
        raise ConfigError("plant.C", f"has {C.shape[1]} columns, expected {n}")
    q = C.shape[0]
    Lam = _matrix(_get(p, "Lambda", "plant"), "plant.Lambda", (m, m))
    Cw = _matrix(_get(p, "C_omega", "plant"), "plant.C_omega", (q, q))
    return PlantModel(A=A, B=B, C=C, Lambda=Lam, C_omega=Cw)


def _parse_phi(raw, plant):
    Phi = _matrix(_get(raw, "Phi", "$"), "Phi", (plant.m, plant.m))
    if np.max(np.abs(Phi - Phi.T)) > 1e-12 * max(1.0, np.abs(Phi).max()):
        raise ConfigError("Phi", "must be symmetric")
    if np.linalg.eigvalsh(Phi)[0] <= 0:
        raise ConfigError("Phi", "must be positive definite")
    return Phi


def _parse_bounds(raw, Phi):
    b = _get(raw, "bounds", "$", {})
    kw = {}
    for key in ("d_bar", "h_bar", "eta", "omega_bar", "switch_gain"):
        if key in b:
            kw[key] = _number(b[key], f"bounds.{key}", nonneg=True)
    try:
        return DisturbanceBounds(phi=Phi, **kw)
    except ModelError as exc:
        raise ConfigError("bounds", str(exc)) from None


def _parse_gains(raw, plant):
    g = _get(raw, "gains", "$")
    n, m, p = plant.n, plant.m, plant.p
    N = n + m
    if "supplied" in g:
        extra = set(g) - {"supplied"}
        if extra:
            raise ConfigError("gains", f"'supplied' excludes {sorted(extra)}")
        s = g["supplied"]
        shapes = {"L_bar": (N, p), "Lcal_bar": (N, N), "H1": (m, p), "H2": (p, p),
                  "H3": (p, N), "K": (m, n)}
        return GainSpec(supplied={
            k: _matrix(_get(s, k, "gains.supplied"), f"gains.supplied.{k}", shape)
            for k, shape in shapes.items()
        })
    spec = GainSpec()
    spec.observer_poles, spec.observer_region = _pole_or_region(
        _get(g, "observer", "gains"), "gains.observer", N)
    spec.cascade_poles, spec.cascade_region = _pole_or_region(
        _get(g, "cascade", "gains"), "gains.cascade", N)
    ctl = _get(g, "controller", "gains")
    if ("poles" in ctl) == ("K" in ctl):
        raise ConfigError("gains.controller", "give exactly one of 'poles' or 'K'")
    if "K" in ctl:
        spec.K = _matrix(ctl["K"], "gains.controller.K", (m, n))
    else:
        spec.controller_poles = _poles(ctl["poles"], "gains.controller.poles")
        if spec.controller_poles.size != n:
            raise ConfigError("gains.controller.poles", f"expected {n} poles")
    spec.switch_scale = _number(_get(g, "switch_scale", "gains", 1.0), "gains.switch_scale", positive=True)
    return spec


def _parse_component(c, path):
    kind = _get(c, "type", path)
    try:
        if kind == "sine":
            return Sine(_number(_get(c, "amplitude", path), f"{path}.amplitude"),
                        _number(_get(c, "frequency", path), f"{path}.frequency", nonneg=True),
                        _number(_get(c, "phase", path, 0.0), f"{path}.phase"))
        if kind == "step":
            return Step(_number(_get(c, "level", path), f"{path}.level"),
                        _number(_get(c, "onset", path, 0.0), f"{path}.onset", nonneg=True))
        if kind == "constant":
            return Constant(_number(_get(c, "level", path), f"{path}.level"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.type", f"unknown component type {kind!r}")


def _parse_disturbance(raw, m):
    d = _get(raw, "disturbance", "$", None)
    if d is None:
        return DisturbanceSpec.zero(m)
    if not isinstance(d, list) or len(d) != m:
        raise ConfigError("disturbance", f"expected a list of {m} channels")
    chans = []
    for i, ch in enumerate(d):
        if not isinstance(ch, list):
            raise ConfigError(f"disturbance[{i}]", "expected a list of components")
        chans.append(tuple(_parse_component(c, f"disturbance[{i}][{j}]") for j, c in enumerate(ch)))
    return DisturbanceSpec(tuple(chans))


_SIM_NUMBERS = {"dt": True, "t_end": True, "varsigma": True, "lowpass_tau": True}
_SIM_INTS = ("seed", "noise_hold", "decimation")


def _parse_sim(raw, plant, bounds):
    s = _get(raw, "sim", "$")
    n, N = plant.n, plant.n + plant.m
    kw = {"x0": _vector(_get(s, "x0", "sim"), "sim.x0", n)}
    for key, pos in _SIM_NUMBERS.items():
        if key in s:
            kw[key] = _number(s[key], f"sim.{key}", positive=pos)
    for key in _SIM_INTS:
        if key in s:
            if isinstance(s[key], bool) or not isinstance(s[key], int):
                raise ConfigError(f"sim.{key}", "expected an integer")
            kw[key] = s[key]
    if s.get("observer_init") is not None:
        kw["observer_init"] = _vector(s["observer_init"], "sim.observer_init", N)
    if "mode" in s:
        mode = str(s["mode"]).lower()
        if mode not in ("smo", "smoco", "both"):
            raise ConfigError("sim.mode", "expected smo, smoco or both")
        kw["mode"] = mode
    if "metrics_window" in s:
        w = _vector(s["metrics_window"], "sim.metrics_window", 2)
        kw["metrics_window"] = (float(w[0]), float(w[1]))
    if "noise" in s:
        if not isinstance(s["noise"], bool):
            raise ConfigError("sim.noise", "expected true or false")
        kw["noise"] = s["noise"]
    unknown = set(s) - set(kw) - {"observer_init"}
    if unknown:
        raise ConfigError("sim", f"unknown keys {sorted(unknown)}")
    kw["switch_gain"] = bounds.switch_gain
    kw["omega_bar"] = bounds.omega_bar
    try:
        return SimConfig(**kw)
    except ValueError as exc:
        raise ConfigError("sim", str(exc)) from None


def parse_config(raw, source="<inline>"):
    plant = _parse_plant(raw)
    Phi = _parse_phi(raw, plant)
    bounds = _parse_bounds(raw, Phi)
    return RunConfig(
        plant=plant, Phi=Phi, bounds=bounds, gains=_parse_gains(raw, plant),
        disturbance=_parse_disturbance(raw, plant.m),
        sim=_parse_sim(raw, plant, bounds), raw=raw, source=str(source),
    )


def load_config(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    return parse_config(raw, path)


def with_overrides(cfg, seed=None, dt=None, t_end=None, mode=None):
    """Copy of ``cfg`` with command-line overrides applied to ``raw`` too."""
    raw = json.loads(json.dumps(cfg.raw))
    sim = raw.setdefault("sim", {})
    for key, value in (("seed", seed), ("dt", dt), ("t_end", t_end), ("mode", mode)):
        if value is not None:
            sim[key] = value
    if t_end is not None and "metrics_window" in sim:
        lo, hi = sim["metrics_window"]
        sim["metrics_window"] = [lo, min(hi, t_end)] if lo < t_end else [0.0, t_end]
    return parse_config(raw, cfg.source)


# key-value output

def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    if isinstance(value, complex):
        return "[%s, %s]" % (_fmt(value.real), _fmt(value.imag))
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            if np.all(value.imag == 0):
                value = value.real
            else:
                return "[" + ", ".join(_fmt(complex(v)) for v in value.ravel()) + "]"
        return _fmt(value.tolist())
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if value is None:
        return "null"
    return str(value)


def write_kv(path, items, provenance=None):
    """Write ``key = value`` lines; arrays are row-major nested lists."""
    lines = []
    if provenance:
        lines += [f"# {k} = {_fmt(v)}" for k, v in provenance.items()]
    lines += [f"{k} = {_fmt(v)}" for k, v in items.items()]
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def read_kv(path):
    """Inverse of :func:`write_kv` for numeric, boolean and string values."""
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, _, text = line.partition(" = ")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        if isinstance(value, list):
            value = np.array(value, dtype=float)
        out[key] = value
    return out


def dump_sim_fields(sim):
    return {f"sim.{f.name}": getattr(sim, f.name) for f in fields(sim)}
