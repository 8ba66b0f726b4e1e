"""Plant, disturbance bounds and the descriptor augmentation.

The plant is

    dx/dt = A x + B u + B_f d,    y = C x + C_w w,    B_f = B Lambda

and appending the disturbance to the state gives the descriptor system

    E dxa/dt = Aa xa + Ba u + Bfa (d + Phi^-1 dd/dt),   y = Ca xa + C_w w

with xa = [x; d], E = [[I, B_f Phi^-1], [0, I]], Aa = blockdiag(A, -Phi),
Ba = [B; 0], Bfa = [B_f; Phi] and Ca = [C, 0].
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class PlantModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Lambda: np.ndarray
    C_omega: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C", "Lambda", "C_omega"):
            value = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if not np.all(np.isfinite(value)):
                raise ModelError(f"{name} has non-finite entries")
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        n, m, p = self.n, self.m, self.p
        expected = {"A": (n, n), "B": (n, m), "C": (p, n), "Lambda": (m, m), "C_omega": (p, p)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ModelError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def B_f(self):
        return self.B @ self.Lambda


@dataclass(frozen=True)
class DisturbanceBounds:
    """Bounds on the lumped disturbance and the measurement noise.

    ``switch_gain`` is the magnitude of the first switching function. Left as
    ``None`` it is computed as ``d_bar + h_bar * ||Phi^-1||_inf + eta``;
    pass ``phi`` for that. When set explicitly it overrides the formula.
    """

    d_bar: float = 0.0
    h_bar: float = 0.0
    eta: float = 1.0
    omega_bar: float = 1.0
    switch_gain: float | None = None
    phi: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.d_bar < 0 or self.h_bar < 0 or self.omega_bar < 0:
            raise ModelError("d_bar, h_bar and omega_bar must be non-negative")
        if self.eta <= 0:
            raise ModelError("eta must be positive")
        if self.switch_gain is None:
            phi_inv_norm = 0.0
            if self.phi is not None:
                phi_inv_norm = linalg.inf_norm(linalg.inverse(self.phi))
            gain = self.d_bar + self.h_bar * phi_inv_norm + self.eta
            object.__setattr__(self, "switch_gain", float(gain))
        if self.switch_gain < self.d_bar + self.eta:
            raise ModelError("switch_gain must be at least d_bar + eta")


@dataclass(frozen=True)
class AugmentedModel:
    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    B_f: np.ndarray
    C: np.ndarray
    Phi: np.ndarray
    C_omega: np.ndarray
    n: int
    m: int

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def size(self):
        return self.n + self.m

    @property
    def E_inv(self):
        # E is block unit-upper-triangular, so its inverse is exact
        Einv = np.eye(self.size)
        Einv[: self.n, self.n:] = -self.E[: self.n, self.n:]
        return Einv

    def normal_form(self):
        """Return ``(E^-1 A, E^-1 B, E^-1 B_f)``."""
        Einv = self.E_inv
        return Einv @ self.A, Einv @ self.B, Einv @ self.B_f


@dataclass
class ValidationReport:
    controllability_rank: int
    observability_rank: int
    n: int
    lambda_condition: float
    c_omega_psd: bool
    failures: list

    @property
    def ok(self):
        return not self.failures


def ctrb(A, B):
    n = A.shape[0]
    blocks = [B]
    for _ in range(1, n):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def obsv(A, C):
    return ctrb(A.T, C.T).T


def validate_plant(plant):
    """Check the structural assumptions on the plant.

    The pairs (A, B) and (A, C) must be controllable and observable, Lambda
    nonsingular and C_omega positive semidefinite with a non-negative
    diagonal. Ranks use the threshold ``1e-8 * sigma_max``.
    """
    failures = []
    rc = linalg.numerical_rank(ctrb(plant.A, plant.B))
    ro = linalg.numerical_rank(obsv(plant.A, plant.C))
    if rc < plant.n:
        failures.append(f"(A, B) is not controllable: rank {rc} < {plant.n}")
    if ro < plant.n:
        failures.append(f"(A, C) is not observable: rank {ro} < {plant.n}")
    cond = linalg.condition_number(plant.Lambda)
    if not np.isfinite(cond) or cond > linalg.TOL.condition_warn:
        failures.append(f"Lambda is singular (condition number {cond:.3g})")
    Cw = plant.C_omega
    sym = 0.5 * (Cw + Cw.T)
    psd = bool(np.all(np.diag(Cw) >= 0) and np.linalg.eigvalsh(sym)[0] >= -1e-12 * max(1.0, linalg.inf_norm(Cw)))
    if not psd:
        failures.append("C_omega is not positive semidefinite")
    return ValidationReport(rc, ro, plant.n, cond, psd, failures)


def _require_spd(Phi):
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    if Phi.shape[0] != Phi.shape[1]:
        raise ModelError(f"Phi must be square, got {Phi.shape}")
    if np.max(np.abs(Phi - Phi.T)) > 1e-12 * max(1.0, linalg.inf_norm(Phi)):
        raise ModelError("Phi must be symmetric")
    if np.linalg.eigvalsh(Phi)[0] <= 0:
        raise ModelError("Phi must be positive definite")
    return Phi


def build_augmented(plant, Phi):
    Phi = _require_spd(Phi)
    n, m, p = plant.n, plant.m, plant.p
    if Phi.shape != (m, m):
        raise ModelError(f"Phi has shape {Phi.shape}, expected {(m, m)}")
    B_f = plant.B_f
    E = np.eye(n + m)
    E[:n, n:] = B_f @ np.linalg.inv(Phi)
    A = np.zeros((n + m, n + m))
    A[:n, :n] = plant.A
    A[n:, n:] = -Phi
    B = np.vstack([plant.B, np.zeros((m, m))])
    Bf = np.vstack([B_f, Phi])
    C = np.hstack([plant.C, np.zeros((p, m))])
    return AugmentedModel(E=E, A=A, B=B, B_f=Bf, C=C, Phi=Phi, C_omega=plant.C_omega.copy(), n=n, m=m)


def augmented_disturbance(aug, d, d_dot):
    """The descriptor input ``d + Phi^-1 dd/dt``."""
    return np.asarray(d, dtype=float) + np.linalg.solve(aug.Phi, np.asarray(d_dot, dtype=float))
