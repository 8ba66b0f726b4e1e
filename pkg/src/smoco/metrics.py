"""Signal norms and the observer comparison report."""

from dataclasses import asdict, dataclass

import numpy as np

NORM_CONVENTION = "l2 = sqrt(sum |v(t)|^2 dt) over samples with t_lo <= t <= t_hi"


def _window_mask(t, window):
    lo, hi = window
    t = np.asarray(t, dtype=float)
    if lo > hi:
        raise ValueError("window is reversed")
    if t.size == 0 or lo < t[0] - 1e-12 or hi > t[-1] + 1e-9:
        raise ValueError(f"window {window} is outside the trajectory span")
    mask = (t >= lo - 1e-12) & (t <= hi + 1e-9)
    if not mask.any():
        raise ValueError("empty window")
    return mask


def signal_l2(series, t, window, dt):
    """Rectangle-rule continuous 2-norm of a vector time series.

    Parameters
    ----------
    series : array_like, shape (T,) or (T, k)
    t : array_like, shape (T,)
        Sample times.
    window : (float, float)
        Closed integration window in seconds.
    dt : float
        Sample spacing.
    """
    v = np.asarray(series, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    mask = _window_mask(t, window)
    return float(np.sqrt(np.sum(v[mask] ** 2) * dt))


@dataclass
class ComparisonReport:
    window: tuple
    err_smo: float
    err_smoco: float
    u_smo: float
    u_smoco: float
    dist_err_smo: float
    dist_err_smoco: float
    dist_err_lf: float
    transient_dist_err_smoco: float | None
    transient_dist_err_lf: float | None
    error_ordering: str
    input_ordering: str
    error_margin: float
    input_margin: float
    lf_soft_flag: bool

    @property
    def orderings_pass(self):
        return self.error_ordering == "pass" and self.input_ordering == "pass"

    def as_dict(self):
        return asdict(self)


def _ordering(better, worse):
    if better < worse:
        return "pass"
    if better == worse:
        return "tie"
    return "fail"


def _margin(better, worse):
    # relative improvement of the cascade over the first layer
    return 0.0 if worse == 0 else float((worse - better) / worse)


def build_report(traj_smo, traj_smoco, window=(1.0, 30.0), transient=None):
    """Compare a first-layer run against a cascade run on the same grid.

    ``transient`` is an optional ``(t0, t1)`` window for the soft check that
    the low-pass comparator lags the cascade estimate of the disturbance.
    Without it the soft check uses the full window.
    """
    if traj_smo.t.shape != traj_smoco.t.shape or not np.array_equal(traj_smo.t, traj_smoco.t):
        raise ValueError("trajectories are on different grids")
    dt = traj_smo.dt
    t = traj_smo.t
    norm = lambda v, w=window: signal_l2(v, t, w, dt)

    err_smo = norm(traj_smo.x - traj_smo.xhat)
    err_smoco = norm(traj_smoco.x - traj_smoco.xtilde)
    u_smo = norm(traj_smo.u)
    u_smoco = norm(traj_smoco.u)
    dist_smo = norm(traj_smo.d - traj_smo.dhat)
    dist_co = norm(traj_smoco.d - traj_smoco.dtilde)
    dist_lf = norm(traj_smo.d - traj_smo.dfilt)

    tr_co = tr_lf = None
    if transient is not None:
        tr_co = norm(traj_smoco.d - traj_smoco.dtilde, transient)
        tr_lf = norm(traj_smo.d - traj_smo.dfilt, transient)
    soft = (tr_lf >= tr_co) if transient is not None else (dist_lf >= dist_co)

    return ComparisonReport(
        window=tuple(window), err_smo=err_smo, err_smoco=err_smoco,
        u_smo=u_smo, u_smoco=u_smoco, dist_err_smo=dist_smo,
        dist_err_smoco=dist_co, dist_err_lf=dist_lf,
        transient_dist_err_smoco=tr_co, transient_dist_err_lf=tr_lf,
        error_ordering=_ordering(err_smoco, err_smo),
        input_ordering=_ordering(u_smoco, u_smo),
        error_margin=_margin(err_smoco, err_smo), input_margin=_margin(u_smoco, u_smo),
        lf_soft_flag=bool(soft),
    )


def format_table(report):
    """Human-readable summary table."""
    r = report
    lines = [
        f"window [{r.window[0]:g}, {r.window[1]:g}] s; {NORM_CONVENTION}",
        f"{'':22s}{'SMO':>12s}{'SMO-CO':>12s}{'SMO-LF':>12s}",
        f"{'|x - x_est|_2':22s}{r.err_smo:12.4f}{r.err_smoco:12.4f}{'':>12s}",
        f"{'|u|_2':22s}{r.u_smo:12.4f}{r.u_smoco:12.4f}{'':>12s}",
        f"{'|d - d_est|_2':22s}{r.dist_err_smo:12.4f}{r.dist_err_smoco:12.4f}{r.dist_err_lf:12.4f}",
        f"error ordering: {r.error_ordering} (margin {100 * r.error_margin:.1f}%)",
        f"input ordering: {r.input_ordering} (margin {100 * r.input_margin:.1f}%)",
        f"low-pass lags cascade: {r.lf_soft_flag}",
    ]
    return "\n".join(lines)
