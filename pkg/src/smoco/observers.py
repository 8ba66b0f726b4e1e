"""Right-hand sides of the sliding-mode observer, the cascade observer and the
low-pass comparator.

Both observer layers are written in normal form, i.e. premultiplied by
``E^-1``. The compiled cores (``_smo_rhs``, ``_cascade_rhs``) are shared by the
public evaluators below and by the fixed-step integrator in :mod:`smoco.sim`.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class SwitchConfig:
    switch_gain: float = 1000.0
    omega_bar: float = 1.0
    varsigma: float = 0.01

    def __post_init__(self):
        if self.varsigma <= 0:
            raise ValueError("varsigma must be positive")


@dataclass(frozen=True)
class ObserverMatrices:
    """Gains and model matrices premultiplied by ``E^-1``."""

    EA: np.ndarray
    EB: np.ndarray
    EL: np.ndarray
    EBf: np.ndarray
    ELCw: np.ndarray
    ELcal: np.ndarray
    C: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray

    @classmethod
    def build(cls, aug, gains):
        Einv = aug.E_inv
        c = np.ascontiguousarray
        return cls(
            EA=c(Einv @ aug.A), EB=c(Einv @ aug.B), EL=c(Einv @ gains.L_bar),
            EBf=c(Einv @ aug.B_f), ELCw=c(Einv @ gains.L_bar @ aug.C_omega),
            ELcal=c(Einv @ gains.Lcal_bar), C=c(aug.C),
            H1=c(gains.H1), H2=c(gains.H2), H3=c(gains.H3),
        )


@njit(cache=True)
def _mv(M, v):
    # plain loop; BLAS dispatch dominates at these sizes
    out = np.zeros(M.shape[0])
    for i in range(M.shape[0]):
        acc = 0.0
        for j in range(M.shape[1]):
            acc += M[i, j] * v[j]
        out[i] = acc
    return out


@njit(cache=True)
def _smoothed_sign(s, varsigma):
    if s.size == 0:
        return s.copy()
    return s / (np.max(np.abs(s)) + varsigma)


@njit(cache=True)
def _smo_rhs(EA, EB, EL, EBf, ELCw, C, H1, H2, xhat, y, u,
             switch_gain, omega_bar, varsigma):
    ey = y - _mv(C, xhat)
    us1 = switch_gain * _smoothed_sign(_mv(H1, ey), varsigma)
    us2 = -omega_bar * _smoothed_sign(_mv(H2, ey), varsigma)
    dx = _mv(EA, xhat) + _mv(EB, u) + _mv(EL, ey) + _mv(EBf, us1) - _mv(ELCw, us2)
    return dx, us1, us2


@njit(cache=True)
def _cascade_rhs(EA, EB, ELcal, EBf, ELCw, H3, xtilde, xhat, u, us1, us2,
                 omega_bar, varsigma):
    eps = xhat - xtilde
    us3 = omega_bar * _smoothed_sign(_mv(H3, eps), varsigma)
    return (_mv(EA, xtilde) + _mv(EB, u) + _mv(ELcal, eps) + _mv(EBf, us1)
            + _mv(ELCw, us3 - us2))


def _vec(v):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(v, dtype=float)))


def smoothed_sign(s, varsigma):
    """Continuous sign approximation ``s / (||s||_inf + varsigma)``."""
    if varsigma <= 0:
        raise ValueError("varsigma must be positive")
    return _smoothed_sign(_vec(s), float(varsigma))


def u_s1(s1, cfg):
    return cfg.switch_gain * smoothed_sign(s1, cfg.varsigma)


def u_s2(s2, cfg):
    return -cfg.omega_bar * smoothed_sign(s2, cfg.varsigma)


def u_s3(s3, cfg):
    return cfg.omega_bar * smoothed_sign(s3, cfg.varsigma)


def _check_dim(v, size, name):
    if v.shape != (size,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({size},)")


def smo_rhs(aug, gains, xhat_bar, y, u, cfg, matrices=None):
    """Time derivative of the first-layer (sliding-mode) estimate.

    The switching inputs use the measured output error ``y - Ca xhat`` in
    place of the unavailable ``Ca e``.
    """
    mats = matrices or ObserverMatrices.build(aug, gains)
    xhat_bar, y, u = _vec(xhat_bar), _vec(y), _vec(u)
    _check_dim(xhat_bar, aug.size, "xhat_bar")
    _check_dim(y, aug.p, "y")
    _check_dim(u, aug.m, "u")
    dx, _, _ = _smo_rhs(mats.EA, mats.EB, mats.EL, mats.EBf, mats.ELCw, mats.C,
                        mats.H1, mats.H2, xhat_bar, y, u,
                        cfg.switch_gain, cfg.omega_bar, cfg.varsigma)
    return dx


def smo_switching(aug, gains, xhat_bar, y, cfg):
    """``(u_s1, u_s2)`` evaluated from the measured output error."""
    ey = _vec(y) - aug.C @ _vec(xhat_bar)
    return u_s1(gains.H1 @ ey, cfg), u_s2(gains.H2 @ ey, cfg)


def cascade_rhs(aug, gains, xtilde_bar, xhat_bar, u, cfg, y, matrices=None):
    """Time derivative of the cascade estimate.

    ``u_s1`` and ``u_s2`` are taken from the first layer at the same instant,
    which is why the measurement ``y`` is needed here; ``u_s3`` acts on the
    internal difference ``xhat_bar - xtilde_bar`` and sees no measurement.
    """
    mats = matrices or ObserverMatrices.build(aug, gains)
    xtilde_bar, xhat_bar, u = _vec(xtilde_bar), _vec(xhat_bar), _vec(u)
    _check_dim(xtilde_bar, aug.size, "xtilde_bar")
    _check_dim(xhat_bar, aug.size, "xhat_bar")
    _check_dim(u, aug.m, "u")
    us1, us2 = smo_switching(aug, gains, xhat_bar, y, cfg)
    return _cascade_rhs(mats.EA, mats.EB, mats.ELcal, mats.EBf, mats.ELCw, mats.H3,
                        xtilde_bar, xhat_bar, u, us1, us2, cfg.omega_bar, cfg.varsigma)


def lowpass_rhs(d_filt, dhat, tau=0.01):
    """First-order lag ``1 / (tau s + 1)`` applied to the disturbance estimate."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return (_vec(dhat) - _vec(d_filt)) / tau
