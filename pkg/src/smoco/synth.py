"""Observer/controller gain synthesis and LMI certificates.

Gains are obtained by pole placement inside an LMI region and the matrix
inequalities are then checked a posteriori: the Lyapunov matrix of the first
observer layer is the solution of ``F.T P + P F = -I`` with
``F = E^-1 (Aa - L Ca)``, so the single-layer inequality evaluates to ``-I``
exactly, and the joint (cascade and closed-loop) inequalities are verified by
assembling the block matrices and checking their largest eigenvalue.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import place_poles

from . import linalg
from .model import ctrb, obsv


class SynthesisError(ValueError):
    pass


BETA_MAX = 1e12


@dataclass(frozen=True)
class LmiRegion:
    """Intersection of a conic sector, a disk and a half-plane.

    A pole ``s`` is inside when ``Re(s) < shift``, ``|s| < radius`` and
    ``|arg(-s)| < half_angle``.
    """

    half_angle: float
    radius: float
    shift: float

    def __post_init__(self):
        if not 0 < self.half_angle <= np.pi / 2:
            raise ValueError("half_angle must lie in (0, pi/2]")
        if self.radius <= 0 or self.radius <= abs(self.shift):
            raise ValueError("radius must be positive and exceed |shift|")

    def contains(self, pole):
        return region_contains(self, pole)

    def default_poles(self, count):
        """``count`` real poles evenly spaced in ``[1.05 shift, -0.9 radius]``."""
        hi, lo = 1.05 * self.shift, -0.9 * self.radius
        if not lo < hi < 0:
            raise SynthesisError(f"no default pole interval inside {self}")
        if count == 1:
            return np.array([0.5 * (hi + lo)])
        return np.linspace(hi, lo, count)


def region_contains(region, pole):
    s = complex(pole)
    return bool(
        s.real < region.shift
        and abs(s) < region.radius
        and abs(np.angle(-s)) < region.half_angle
    )


@dataclass
class SwitchGains:
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray
    residuals: dict
    schur_margins: dict
    rank_deficient: bool = False


@dataclass
class GainSet:
    L_bar: np.ndarray
    Lcal_bar: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray
    K: np.ndarray
    K_bar: np.ndarray
    B_dagger: np.ndarray
    residuals: dict = field(default_factory=dict)
    source: str = "synthesized"

    def as_dict(self):
        return {
            "L_bar": self.L_bar, "Lcal_bar": self.Lcal_bar, "H1": self.H1,
            "H2": self.H2, "H3": self.H3, "K": self.K, "K_bar": self.K_bar,
            "B_dagger": self.B_dagger,
        }


@dataclass
class Certificate:
    mode: str
    P_bar: np.ndarray
    N1: np.ndarray
    N2: np.ndarray | None
    Q: np.ndarray
    beta: float
    margins: dict
    pole_report: dict
    beta_cascade: float | None = None
    switch_residuals: dict = field(default_factory=dict)

    @property
    def passed(self):
        spd = linalg.sym_eig_min(self.P_bar) > 0 and linalg.sym_eig_min(self.Q) > 0
        return spd and all(v < 0 for v in self.margins.values())


def _check_self_conjugate(poles):
    poles = np.asarray(poles, dtype=complex).ravel()
    for s in poles:
        if abs(s.imag) > 1e-12:
            partners = np.abs(poles - np.conj(s)) <= 1e-9 * max(1.0, abs(s))
            if np.sum(partners) != np.sum(np.abs(poles - s) <= 1e-9 * max(1.0, abs(s))):
                raise SynthesisError("pole list is not closed under conjugation")
    return poles


def _ackermann(A, b, poles):
    """Gain ``k`` (row) with ``eig(A - b k) = poles`` for a single input."""
    n = A.shape[0]
    coeffs = np.real(np.poly(poles))
    phiA = np.zeros_like(A)
    for c in coeffs:
        phiA = phiA @ A + c * np.eye(n)
    Wc = ctrb(A, b)
    e_last = np.zeros((1, n))
    e_last[0, -1] = 1.0
    return e_last @ np.linalg.solve(Wc, phiA)


def place(A, B, poles):
    """Return ``G`` such that ``eig(A - B G)`` equals ``poles``."""
    A = np.asarray(A, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    poles = _check_self_conjugate(poles)
    if poles.size != A.shape[0]:
        raise SynthesisError(f"{poles.size} poles given for {A.shape[0]} states")
    if linalg.numerical_rank(ctrb(A, B)) < A.shape[0]:
        raise SynthesisError("pair is not controllable/observable; cannot place poles")
    if B.shape[1] == 1:
        return _ackermann(A, B, poles)
    with warnings.catch_warnings():
        # the YT robustness iteration may stop early; placement is still exact
        warnings.simplefilter("ignore", UserWarning)
        result = place_poles(A, B, poles, maxiter=100)
    return result.gain_matrix


def _check_spectrum(F, poles, what):
    got = np.sort_complex(linalg.eig_all(F))
    want = np.sort_complex(np.asarray(poles, dtype=complex))
    scale = np.maximum(np.abs(want), 1.0)
    # repeated poles are only determined to ~sqrt(eps); compare symmetric functions too
    if np.max(np.abs(got - want) / scale) > 1e-6:
        if np.max(np.abs(np.poly(got) - np.poly(want)) / np.maximum(np.abs(np.poly(want)), 1.0)) > 1e-6:
            raise SynthesisError(f"{what} spectrum {got} does not match requested {want}")


def observer_matrix(aug, L_bar):
    return aug.E_inv @ (aug.A - L_bar @ aug.C)


def cascade_matrix(aug, Lcal_bar):
    return aug.E_inv @ (aug.A - Lcal_bar)


def place_observer_gain(aug, poles):
    """Output-injection gain ``L_bar`` assigning ``eig(E^-1 (Aa - L_bar Ca))``."""
    EA = aug.E_inv @ aug.A
    if linalg.numerical_rank(obsv(EA, aug.C)) < aug.size:
        raise SynthesisError("(E^-1 Aa, Ca) is not observable")
    Lt = place(EA.T, aug.C.T, poles).T
    L_bar = aug.E @ Lt
    _check_spectrum(observer_matrix(aug, L_bar), poles, "observer")
    return L_bar


def _realize(poles, P_bar=None):
    """Real matrix with spectrum ``poles``.

    Real poles go on the diagonal and each conjugate pair ``a +- bi`` becomes
    the block ``[[a, b], [-b, a]]``. Given an SPD ``P_bar`` the block-diagonal
    form is conjugated by ``P_bar^(1/2)`` so that ``P M + M^T P`` is negative
    definite whenever every pole has negative real part.
    """
    poles = _check_self_conjugate(poles)
    real = sorted(s.real for s in poles if abs(s.imag) <= 1e-12)
    upper = sorted((s for s in poles if s.imag > 1e-12), key=lambda s: (s.real, s.imag))
    size = len(real) + 2 * len(upper)
    D = np.zeros((size, size))
    i = 0
    for r in real:
        D[i, i] = r
        i += 1
    for s in upper:
        D[i:i + 2, i:i + 2] = [[s.real, s.imag], [-s.imag, s.real]]
        i += 2
    if P_bar is None:
        return D
    root, inv_root = linalg.sqrtm_spd(P_bar)
    return inv_root @ D @ root


def place_cascade_gain(aug, poles, P_bar=None):
    """Cascade gain ``Lcal_bar`` with ``eig(E^-1 (Aa - Lcal_bar)) = poles``.

    The cascade layer sees the full estimate, so the assignment is exact:
    ``Lcal_bar = Aa - E M`` for any real ``M`` with the requested spectrum.
    Passing the first-layer Lyapunov matrix selects the realization that
    keeps the cascade diagonal block of the joint inequality negative.
    """
    M = _realize(poles, P_bar)
    if M.shape[0] != aug.size:
        raise SynthesisError(f"{M.shape[0]} poles given for {aug.size} states")
    Lcal = aug.A - aug.E @ M
    _check_spectrum(cascade_matrix(aug, Lcal), poles, "cascade")
    return Lcal


def observer_xi(aug, P_bar, N):
    PEA = P_bar @ aug.E_inv @ aug.A
    return PEA + PEA.T - N @ aug.C - aug.C.T @ N.T


def certify_observer(aug, L_bar):
    """Lyapunov certificate for the single-layer observer.

    Returns ``(P_bar, N1, margin)`` with ``N1 = P_bar E^-1 L_bar``; the margin
    is the largest eigenvalue of the inequality matrix and equals -1 up to
    rounding.
    """
    F = observer_matrix(aug, L_bar)
    linalg.require_hurwitz(F, "observer matrix E^-1 (A - L C)")
    P = linalg.solve_lyapunov(F, np.eye(aug.size))
    N1 = P @ aug.E_inv @ L_bar
    margin = linalg.sym_eig_max(observer_xi(aug, P, N1))
    return P, N1, margin


def gain_from_slack(aug, P_bar, N):
    """Recover an injection gain from its slack variable: ``E P^-1 N``."""
    return aug.E @ np.linalg.solve(P_bar, N)


def _schur_margin(residual_matrix, mu):
    rows, cols = residual_matrix.shape
    S = linalg.block_assemble([
        [-(mu ** 2) * np.eye(rows), residual_matrix],
        [residual_matrix.T, -np.eye(cols)],
    ])
    return linalg.sym_eig_max(S)


def solve_switch_gains(aug, L_bar, P_bar, scale=1.0):
    """Switching-function gains from the matching constraints.

    ``H1`` and ``H2`` minimise ``||(H Ca)^T - T||_F`` for the targets
    ``T1 = P E^-1 Bfa`` and ``T2 = P E^-1 L_bar C_w``; ``H3`` is set to
    ``T2^T`` directly. ``scale`` multiplies ``P_bar`` before forming the
    targets (any positive multiple of a Lyapunov matrix is one as well).

    The residual ``mu`` of each fit is returned along with the largest
    eigenvalue of ``[[-mu^2 I, R], [R^T, -I]]`` built from the residual
    matrix ``R``, which must be non-positive.
    """
    P = scale * np.asarray(P_bar, dtype=float)
    if linalg.sym_eig_min(P) <= 0:
        raise SynthesisError("P_bar must be positive definite")
    Einv = aug.E_inv
    T1 = P @ Einv @ aug.B_f
    T2 = P @ Einv @ L_bar @ aug.C_omega
    CT = aug.C.T
    rank_deficient = linalg.numerical_rank(CT) < CT.shape[1]
    X1, mu1 = linalg.lstsq(CT, T1)
    X2, mu2 = linalg.lstsq(CT, T2)
    H1, H2, H3 = X1.T, X2.T, T2.T.copy()
    R1 = (H1 @ aug.C).T - T1
    R2 = (H2 @ aug.C).T - T2
    R3 = H3.T - T2
    residuals = {"mu1": mu1, "mu2": mu2, "mu3": float(np.linalg.norm(R3, "fro"))}
    margins = {
        "schur1": _schur_margin(R1, mu1),
        "schur2": _schur_margin(R2, mu2),
        "schur3": _schur_margin(R3, residuals["mu3"]),
    }
    return SwitchGains(H1, H2, H3, residuals, margins, rank_deficient)


def place_state_feedback(plant, poles):
    """State feedback ``K`` with ``eig(A + B K) = poles``."""
    K = -place(plant.A, plant.B, poles)
    _check_spectrum(plant.A + plant.B @ K, poles, "controller")
    return K


def compensator_gain(plant, K):
    """Return ``(B_dagger, K_bar)`` with ``K_bar = [K, -B_dagger B_f]``."""
    Bd = linalg.pseudo_inverse(plant.B)
    Bf = plant.B_f
    if np.max(np.abs(plant.B @ Bd @ Bf - Bf)) > linalg.TOL.pinv_identity * max(1.0, linalg.inf_norm(Bf)):
        raise SynthesisError("B B^+ B_f != B_f: disturbance is not matched")
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (plant.m, plant.n):
        raise SynthesisError(f"K has shape {K.shape}, expected {(plant.m, plant.n)}")
    return Bd, np.hstack([K, -Bd @ Bf])


def cascade_xi(aug, P_bar, N1, N2, beta=1.0):
    """Joint inequality for the two observer layers.

    The upstream error block carries weight ``beta``; ``beta = 1`` is the
    shared-``P`` form.
    """
    PEA = P_bar @ aug.E_inv @ aug.A
    X11 = PEA + PEA.T - N1 @ aug.C - aug.C.T @ N1.T
    X12 = (N1 @ aug.C).T
    X22 = PEA + PEA.T - N2 - N2.T
    return linalg.block_assemble([[beta * X11, X12], [X12.T, X22]])


def closed_loop_xi(aug, plant, K, K_bar, P_bar, N1, Q, beta=1.0, N2=None):
    """Closed-loop inequality for the SMO (``N2 is None``) or SMO-CO controller.

    Block weights: the first observer error carries ``beta`` (SMO) or
    ``beta**2`` (SMO-CO) and the cascade error carries ``beta``; ``beta = 1``
    gives the unweighted block matrix.
    """
    Acl = plant.A + plant.B @ K
    X11 = Q @ Acl + Acl.T @ Q
    X12 = -Q @ plant.B @ K_bar
    PEA = P_bar @ aug.E_inv @ aug.A
    X22 = PEA + PEA.T - N1 @ aug.C - aug.C.T @ N1.T
    if N2 is None:
        return linalg.block_assemble([[X11, X12], [X12.T, beta * X22]])
    X23 = (N1 @ aug.C).T
    X33 = PEA + PEA.T - N2 - N2.T
    return linalg.block_assemble([
        [X11, X12, X12],
        [X12.T, beta ** 2 * X22, beta * X23],
        [X12.T, beta * X23.T, beta * X33],
    ])


def beta_search(build, beta_max=BETA_MAX):
    """Double ``beta`` from 1 until ``build(beta)`` is negative definite.

    Returns ``(beta, margin)``; raises ``SynthesisError`` once ``beta``
    exceeds ``beta_max``.
    """
    beta = 1.0
    while True:
        margin = linalg.sym_eig_max(build(beta))
        if margin < 0:
            return beta, margin
        beta *= 2.0
        if beta > beta_max:
            raise SynthesisError(f"beta search exhausted; final margin {margin:.6g}")


def certify_cascade(aug, L_bar, Lcal_bar, P_bar=None):
    """Joint two-layer certificate. Returns ``(P_bar, N1, N2, beta, margin)``."""
    if P_bar is None:
        P_bar, N1, _ = certify_observer(aug, L_bar)
    else:
        N1 = P_bar @ aug.E_inv @ L_bar
    linalg.require_hurwitz(cascade_matrix(aug, Lcal_bar), "cascade matrix E^-1 (A - Lcal)")
    N2 = P_bar @ aug.E_inv @ Lcal_bar
    beta, margin = beta_search(lambda b: cascade_xi(aug, P_bar, N1, N2, b))
    return P_bar, N1, N2, beta, margin


def pole_report(aug, plant, gains, observer_region=None, cascade_region=None):
    obs = linalg.eig_all(observer_matrix(aug, gains.L_bar))
    cas = linalg.eig_all(cascade_matrix(aug, gains.Lcal_bar))
    ctl = linalg.eig_all(plant.A + plant.B @ gains.K)
    report = {"observer": obs, "cascade": cas, "controller": ctl}
    if observer_region is not None:
        report["observer_in_region"] = all(region_contains(observer_region, s) for s in obs)
    if cascade_region is not None:
        report["cascade_in_region"] = all(region_contains(cascade_region, s) for s in cas)
    return report


def certify_closed_loop(aug, plant, gains, mode="SMO", observer_region=None, cascade_region=None):
    """Certificate for the observer-based compensation loop.

    ``mode`` is ``"SMO"`` (one observer layer) or ``"SMO_CO"`` (cascade).
    """
    mode = mode.upper().replace("-", "_")
    if mode not in ("SMO", "SMO_CO"):
        raise ValueError(f"unknown mode {mode!r}")
    Acl = plant.A + plant.B @ gains.K
    linalg.require_hurwitz(Acl, "A + B K")
    Q = linalg.solve_lyapunov(Acl, np.eye(plant.n))
    P, N1, m1 = certify_observer(aug, gains.L_bar)
    margins = {"observer": m1}
    N2 = None
    beta_cascade = None
    if mode == "SMO_CO":
        _, _, N2, beta_cascade, m3 = certify_cascade(aug, gains.L_bar, gains.Lcal_bar, P)
        margins["cascade"] = m3
    beta, mcl = beta_search(
        lambda b: closed_loop_xi(aug, plant, gains.K, gains.K_bar, P, N1, Q, b, N2)
    )
    margins["closed_loop"] = mcl
    return Certificate(
        mode=mode, P_bar=P, N1=N1, N2=N2, Q=Q, beta=beta, margins=margins,
        pole_report=pole_report(aug, plant, gains, observer_region, cascade_region),
        beta_cascade=beta_cascade, switch_residuals=dict(gains.residuals),
    )


def synthesize(aug, plant, observer_poles, cascade_poles, K, switch_scale=1.0):
    """Full gain set from pole lists and a state-feedback gain.

    The cascade gain is realized against the first-layer Lyapunov matrix so
    that the joint two-layer inequality holds.
    """
    L_bar = place_observer_gain(aug, observer_poles)
    P, _, _ = certify_observer(aug, L_bar)
    Lcal = place_cascade_gain(aug, cascade_poles, P_bar=P)
    sw = solve_switch_gains(aug, L_bar, P, scale=switch_scale)
    Bd, K_bar = compensator_gain(plant, K)
    return GainSet(
        L_bar=L_bar, Lcal_bar=Lcal, H1=sw.H1, H2=sw.H2, H3=sw.H3,
        K=np.asarray(K, dtype=float), K_bar=K_bar, B_dagger=Bd,
        residuals={**sw.residuals, **sw.schur_margins},
    )


def supplied_gains(plant, L_bar, Lcal_bar, H1, H2, H3, K):
    """Wrap externally supplied gains (e.g. a reference design) in a ``GainSet``."""
    Bd, K_bar = compensator_gain(plant, K)
    arr = lambda a: np.atleast_2d(np.asarray(a, dtype=float))
    return GainSet(
        L_bar=arr(L_bar), Lcal_bar=arr(Lcal_bar), H1=arr(H1), H2=arr(H2),
        H3=arr(H3), K=arr(K), K_bar=K_bar, B_dagger=Bd, source="supplied",
    )
