"""Glue between a :class:`~smoco.config.RunConfig` and the library calls."""

from dataclasses import replace

from .control import ControlLaw, EstimateSource
from .metrics import build_report
from .sim import integrate_closed_loop
from .synth import (
    certify_closed_loop, place_state_feedback, supplied_gains, synthesize,
)

MODES = {"smo": EstimateSource.SMO, "smoco": EstimateSource.SMO_CO}


def build_gains(cfg):
    """Supplied gains as given, or a synthesized set from poles/regions."""
    g = cfg.gains
    aug = cfg.augmented()
    if g.supplied is not None:
        s = g.supplied
        return supplied_gains(cfg.plant, s["L_bar"], s["Lcal_bar"], s["H1"], s["H2"], s["H3"], s["K"])
    K = g.K if g.K is not None else place_state_feedback(cfg.plant, g.controller_poles)
    return synthesize(aug, cfg.plant, g.observer_poles, g.cascade_poles, K, g.switch_scale)


def certify(cfg, gains, modes=("SMO", "SMO_CO")):
    aug = cfg.augmented()
    return {
        mode: certify_closed_loop(
            aug, cfg.plant, gains, mode,
            observer_region=cfg.gains.observer_region,
            cascade_region=cfg.gains.cascade_region,
        )
        for mode in modes
    }


def simulate(cfg, gains, mode, **overrides):
    """Run one closed loop; ``mode`` is ``"smo"`` or ``"smoco"``."""
    sim = replace(cfg.sim, **overrides) if overrides else cfg.sim
    law = ControlLaw.from_gains(gains, MODES[mode])
    traj = integrate_closed_loop(cfg.plant, cfg.augmented(), gains, law, cfg.disturbance, sim)
    traj.meta.update(config_hash=cfg.hash, seed=sim.seed)
    return traj


def compare(cfg, gains, **overrides):
    """Both closed loops plus the comparison report."""
    a = simulate(cfg, gains, "smo", **overrides)
    b = simulate(cfg, gains, "smoco", **overrides)
    onsets = cfg.disturbance.step_onsets()
    window = cfg.sim.metrics_window
    transient = None
    if onsets and window[0] <= onsets[0] and onsets[0] + 1.0 <= min(window[1], a.t[-1]):
        transient = (onsets[0], onsets[0] + 1.0)
    return a, b, build_report(a, b, window, transient)
