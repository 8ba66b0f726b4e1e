"""Fixed-step closed-loop simulation of the plant, both observer layers, the
low-pass comparator and the compensation controller.

The integrator is classical RK4. Within one step the control input and the
noise sample are held (zero-order hold); the disturbance is evaluated at the
stage times. The stacked state is ``z = [x, xhat_bar, xtilde_bar, d_filt]``.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .control import EstimateSource
from .observers import ObserverMatrices, _cascade_rhs, _mv, _smo_rhs

DIVERGENCE_LIMIT = 1e12

_SINE, _STEP, _CONST = 0, 1, 2


class SimulationDiverged(RuntimeError):
    def __init__(self, index, time):
        super().__init__(f"simulation diverged at step {index} (t = {time:.6g} s)")
        self.index = index
        self.time = time


# disturbance signals

@dataclass(frozen=True)
class Sine:
    amplitude: float
    frequency: float  # rad/s
    phase: float = 0.0

    def __post_init__(self):
        if self.frequency < 0:
            raise ValueError("frequency must be non-negative")


@dataclass(frozen=True)
class Step:
    level: float
    onset: float = 0.0

    def __post_init__(self):
        if self.onset < 0:
            raise ValueError("onset must be non-negative")


@dataclass(frozen=True)
class Constant:
    level: float


@dataclass(frozen=True)
class DisturbanceSpec:
    """Per-channel sums of sine, step and constant components."""

    channels: tuple

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(tuple(c) for c in self.channels))

    @property
    def m(self):
        return len(self.channels)

    @classmethod
    def zero(cls, m):
        return cls(tuple(() for _ in range(m)))

    def table(self):
        """Rows ``(channel, kind, p1, p2, p3)`` for the compiled evaluator."""
        rows = []
        for ch, comps in enumerate(self.channels):
            for c in comps:
                if isinstance(c, Sine):
                    rows.append((ch, _SINE, c.amplitude, c.frequency, c.phase))
                elif isinstance(c, Step):
                    rows.append((ch, _STEP, c.level, c.onset, 0.0))
                elif isinstance(c, Constant):
                    rows.append((ch, _CONST, c.level, 0.0, 0.0))
                else:
                    raise TypeError(f"unknown disturbance component {c!r}")
        return np.array(rows, dtype=float).reshape(-1, 5)

    def step_onsets(self):
        return sorted({c.onset for comps in self.channels for c in comps if isinstance(c, Step)})


def canonical_disturbance():
    """Two-channel test signal: a 5 sin(t) and a level-5 step at 10 s."""
    return DisturbanceSpec(((Sine(5.0, 1.0, 0.0),), (Step(5.0, 10.0),)))


@njit(cache=True)
def _disturbance(table, m, t):
    d = np.zeros(m)
    for i in range(table.shape[0]):
        ch = int(table[i, 0])
        kind = int(table[i, 1])
        if kind == 0:
            d[ch] += table[i, 2] * np.sin(table[i, 3] * t + table[i, 4])
        elif kind == 1:
            if t >= table[i, 3]:
                d[ch] += table[i, 2]
        else:
            d[ch] += table[i, 2]
    return d


def disturbance_eval(spec, t, derivative=False):
    """Evaluate the disturbance at ``t``.

    With ``derivative=True`` returns ``(d, dd/dt)``. Steps contribute zero to
    the derivative; the impulse at the onset is a measure-zero event and is
    left out.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    table = spec.table()
    d = _disturbance(table, spec.m, float(t))
    if not derivative:
        return d
    dd = np.zeros(spec.m)
    for ch, kind, a, w, ph in table:
        if kind == _SINE:
            dd[int(ch)] += a * w * np.cos(w * t + ph)
    return d, dd


# noise

def noise_sample(rng, C_omega, omega_bar, size=None):
    """Standard normal draws clipped to ``[-omega_bar, omega_bar]``.

    Returns one ``p``-vector, or ``(size, p)`` samples when ``size`` is given.
    The measurement adds ``C_omega @ w``.
    """
    p = np.atleast_2d(C_omega).shape[0]
    shape = (p,) if size is None else (size, p)
    if omega_bar == 0:
        return np.zeros(shape)
    return np.clip(rng.standard_normal(shape), -omega_bar, omega_bar)


# configuration and results

@dataclass
class SimConfig:
    x0: np.ndarray
    dt: float = 1e-4
    t_end: float = 30.0
    seed: int = 0
    noise_hold: int = 1
    observer_init: np.ndarray | None = None
    mode: str = "SMO"
    metrics_window: tuple | None = None  # default [1, min(30, t_end)]
    noise: bool = True
    decimation: int = 1  # CSV export only
    switch_gain: float = 1000.0
    omega_bar: float = 1.0
    varsigma: float = 0.01
    lowpass_tau: float = 0.01

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).ravel()
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.metrics_window is None:
            lo = 1.0 if self.t_end > 1.0 else 0.0
            self.metrics_window = (lo, min(30.0, self.t_end))
        lo, hi = self.metrics_window
        if not 0 <= lo < self.t_end:
            raise ValueError("need t_end > t_lo >= 0")
        if hi < lo:
            raise ValueError("metrics window is reversed")
        if self.noise_hold < 1 or self.decimation < 1:
            raise ValueError("noise_hold and decimation must be >= 1")
        if self.varsigma <= 0 or self.lowpass_tau <= 0:
            raise ValueError("varsigma and lowpass_tau must be positive")

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    xtilde: np.ndarray
    d: np.ndarray
    dhat: np.ndarray
    dtilde: np.ndarray
    dfilt: np.ndarray
    u: np.ndarray
    y: np.ndarray
    omega: np.ndarray
    dt: float
    mode: str = "SMO"
    meta: dict = field(default_factory=dict)

    @property
    def xhat_bar(self):
        return np.hstack([self.xhat, self.dhat])

    @property
    def xtilde_bar(self):
        return np.hstack([self.xtilde, self.dtilde])

    @property
    def x_bar(self):
        return np.hstack([self.x, self.d])

    def columns(self):
        groups = [
            ("x", self.x), ("xhat", self.xhat), ("xtilde", self.xtilde),
            ("d", self.d), ("dhat", self.dhat), ("dtilde", self.dtilde),
            ("dfilt", self.dfilt), ("u", self.u), ("y", self.y),
        ]
        names = ["t"]
        for name, arr in groups:
            names += [f"{name}{i + 1}" for i in range(arr.shape[1])]
        data = np.column_stack([self.t] + [arr for _, arr in groups])
        return names, data

    def to_csv(self, path, provenance=None, decimation=1):
        """Write every ``decimation``-th sample at 17 significant digits."""
        names, data = self.columns()
        data = data[::max(1, int(decimation))]
        with open(path, "w", newline="\n") as fh:
            if provenance:
                fh.write("# " + " ".join(f"{k}={v}" for k, v in provenance.items()) + "\n")
            fh.write(",".join(names) + "\n")
            np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def read_csv(path):
    """Load a trajectory CSV into ``(column names, data)``."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    names = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return names, data


# compiled kernel

@njit(cache=True)
def _rhs(z, u, w, d, n, N, A, B, Bf, C, Cw, EA, EB, EL, EBf, ELCw, ELcal, Ca,
         H1, H2, H3, switch_gain, omega_bar, varsigma, tau):
    x = z[:n]
    xh = z[n:n + N]
    xt = z[n + N:n + 2 * N]
    df = z[n + 2 * N:]
    y = _mv(C, x) + _mv(Cw, w)
    out = np.empty(z.shape[0])
    out[:n] = _mv(A, x) + _mv(B, u) + _mv(Bf, d)
    dxh, us1, us2 = _smo_rhs(EA, EB, EL, EBf, ELCw, Ca, H1, H2, xh, y, u,
                             switch_gain, omega_bar, varsigma)
    out[n:n + N] = dxh
    out[n + N:n + 2 * N] = _cascade_rhs(EA, EB, ELcal, EBf, ELCw, H3, xt, xh, u,
                                        us1, us2, omega_bar, varsigma)
    out[n + 2 * N:] = (xh[n:] - df) / tau
    return out


@njit(cache=True)
def _estimate(z, d, n, N, src):
    if src == 0:
        return z[n:n + N].copy()
    if src == 1:
        return z[n + N:n + 2 * N].copy()
    est = np.empty(N)
    est[:n] = z[:n]
    est[n:] = d
    return est


@njit(cache=True)
def _integrate(z0, steps, dt, noise, hold, src, dtab, n, m, K_bar,
               A, B, Bf, C, Cw, EA, EB, EL, EBf, ELCw, ELcal, Ca, H1, H2, H3,
               switch_gain, omega_bar, varsigma, tau, limit):
    N = n + m
    rows = steps + 1
    Z = np.zeros((rows, z0.shape[0]))
    U = np.zeros((rows, m))
    D = np.zeros((rows, m))
    W = np.zeros((rows, noise.shape[1]))
    z = z0.copy()
    for k in range(steps + 1):
        t = k * dt
        w = noise[k // hold]
        d0 = _disturbance(dtab, m, t)
        u = _mv(K_bar, _estimate(z, d0, n, N, src))
        Z[k] = z
        U[k] = u
        D[k] = d0
        W[k] = w
        if k == steps:
            break
        dm = _disturbance(dtab, m, t + 0.5 * dt)
        d1 = _disturbance(dtab, m, t + dt)
        k1 = _rhs(z, u, w, d0, n, N, A, B, Bf, C, Cw, EA, EB, EL, EBf, ELCw, ELcal, Ca,
                  H1, H2, H3, switch_gain, omega_bar, varsigma, tau)
        k2 = _rhs(z + 0.5 * dt * k1, u, w, dm, n, N, A, B, Bf, C, Cw, EA, EB, EL, EBf,
                  ELCw, ELcal, Ca, H1, H2, H3, switch_gain, omega_bar, varsigma, tau)
        k3 = _rhs(z + 0.5 * dt * k2, u, w, dm, n, N, A, B, Bf, C, Cw, EA, EB, EL, EBf,
                  ELCw, ELcal, Ca, H1, H2, H3, switch_gain, omega_bar, varsigma, tau)
        k4 = _rhs(z + dt * k3, u, w, d1, n, N, A, B, Bf, C, Cw, EA, EB, EL, EBf,
                  ELCw, ELcal, Ca, H1, H2, H3, switch_gain, omega_bar, varsigma, tau)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for i in range(z.shape[0]):
            if not np.isfinite(z[i]) or abs(z[i]) > limit:
                return Z, U, D, W, k + 1
    return Z, U, D, W, -1


_SOURCE_INDEX = {EstimateSource.SMO: 0, EstimateSource.SMO_CO: 1, EstimateSource.TRUE_STATE: 2}


def _noise_table(cfg, p):
    count = cfg.steps // cfg.noise_hold + 1
    if not cfg.noise:
        return np.zeros((count, p))
    rng = np.random.default_rng(cfg.seed)
    return noise_sample(rng, np.eye(p), cfg.omega_bar, size=count)


def integrate_closed_loop(plant, aug, gains, law, spec, cfg):
    """Simulate the closed loop and return a :class:`Trajectory`.

    All observer layers are integrated in every run; ``law.source`` only
    selects which estimate feeds the controller. ``cfg.noise = False`` zeroes
    the measurement noise while the switching terms keep ``omega_bar``.
    """
    n, m, p = plant.n, plant.m, plant.p
    N = n + m
    if cfg.x0.shape != (n,):
        raise ValueError(f"x0 has shape {cfg.x0.shape}, expected ({n},)")
    if spec.m != m:
        raise ValueError(f"disturbance has {spec.m} channels, expected {m}")
    obs0 = np.zeros(N) if cfg.observer_init is None else np.asarray(cfg.observer_init, float).ravel()
    if obs0.shape != (N,):
        raise ValueError(f"observer_init has shape {obs0.shape}, expected ({N},)")
    if law.K_bar.shape != (m, N):
        raise ValueError(f"K_bar has shape {law.K_bar.shape}, expected ({m}, {N})")

    z0 = np.concatenate([cfg.x0, obs0, obs0, obs0[n:]])
    mats = ObserverMatrices.build(aug, gains)
    noise = _noise_table(cfg, p)
    c = np.ascontiguousarray
    Z, U, D, W, bad = _integrate(
        z0, cfg.steps, float(cfg.dt), noise, int(cfg.noise_hold),
        _SOURCE_INDEX[law.source], spec.table(), n, m, c(law.K_bar),
        c(plant.A), c(plant.B), c(plant.B_f), c(plant.C), c(plant.C_omega),
        mats.EA, mats.EB, mats.EL, mats.EBf, mats.ELCw, mats.ELcal, mats.C,
        mats.H1, mats.H2, mats.H3,
        float(cfg.switch_gain), float(cfg.omega_bar), float(cfg.varsigma),
        float(cfg.lowpass_tau), DIVERGENCE_LIMIT,
    )
    if bad >= 0:
        raise SimulationDiverged(bad, bad * cfg.dt)

    t = np.arange(Z.shape[0]) * cfg.dt
    x = Z[:, :n]
    y = x @ plant.C.T + W @ plant.C_omega.T
    return Trajectory(
        t=t, x=x, xhat=Z[:, n:2 * n], dhat=Z[:, 2 * n:n + N],
        xtilde=Z[:, n + N:2 * n + N], dtilde=Z[:, 2 * n + N:n + 2 * N],
        d=D, dfilt=Z[:, n + 2 * N:], u=U, y=y, omega=W, dt=cfg.dt,
        mode=law.source.value, meta={"seed": cfg.seed},
    )


# open-loop equivalence of the plant and its descriptor form

@njit(cache=True)
def _disturbance_dot(table, m, t):
    dd = np.zeros(m)
    for i in range(table.shape[0]):
        if int(table[i, 1]) == 0:
            a, w, ph = table[i, 2], table[i, 3], table[i, 4]
            dd[int(table[i, 0])] += a * w * np.cos(w * t + ph)
    return dd


@njit(cache=True)
def _open_loop_rhs(z, t, n, m, A, B, Bf, K, EA, EB, EBf, Phi_inv, table):
    x = z[:n]
    xa = z[n:]
    d = _disturbance(table, m, t)
    dbar = d + _mv(Phi_inv, _disturbance_dot(table, m, t))
    out = np.empty(z.shape[0])
    out[:n] = _mv(A, x) + _mv(B, _mv(K, x)) + _mv(Bf, d)
    out[n:] = _mv(EA, xa) + _mv(EB, _mv(K, xa[:n])) + _mv(EBf, dbar)
    return out


@njit(cache=True)
def _integrate_open_loop(z0, steps, dt, n, m, A, B, Bf, K, EA, EB, EBf, Phi_inv, table):
    Z = np.empty((steps + 1, z0.shape[0]))
    z = z0.copy()
    Z[0] = z
    for k in range(steps):
        t = k * dt
        k1 = _open_loop_rhs(z, t, n, m, A, B, Bf, K, EA, EB, EBf, Phi_inv, table)
        k2 = _open_loop_rhs(z + 0.5 * dt * k1, t + 0.5 * dt, n, m, A, B, Bf, K, EA, EB, EBf, Phi_inv, table)
        k3 = _open_loop_rhs(z + 0.5 * dt * k2, t + 0.5 * dt, n, m, A, B, Bf, K, EA, EB, EBf, Phi_inv, table)
        k4 = _open_loop_rhs(z + dt * k3, t + dt, n, m, A, B, Bf, K, EA, EB, EBf, Phi_inv, table)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        Z[k + 1] = z
    return Z


def integrate_open_loop(plant, aug, spec, x0, t_end=5.0, dt=1e-3, K=None):
    """Integrate the original plant and its descriptor form side by side.

    The descriptor state starts at ``[x0; d(0)]`` and is driven by
    ``d + Phi^-1 dd/dt``. With ``K`` given both use ``u = K x`` from their own
    state. Returns ``(t, x_plant, xa_descriptor)``.
    """
    n, m = plant.n, plant.m
    x0 = np.asarray(x0, dtype=float)
    K = np.zeros((m, n)) if K is None else np.asarray(K, dtype=float)
    table = spec.table()
    z0 = np.concatenate([x0, x0, _disturbance(table, m, 0.0)])
    c = np.ascontiguousarray
    EA, EB, EBf = aug.normal_form()
    steps = int(round(t_end / dt))
    Z = _integrate_open_loop(z0, steps, float(dt), n, m, c(plant.A), c(plant.B), c(plant.B_f),
                             c(K), c(EA), c(EB), c(EBf), c(np.linalg.inv(aug.Phi)), table)
    return np.arange(steps + 1) * dt, Z[:, :n], Z[:, n:]
