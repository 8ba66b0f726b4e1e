"""Command-line front end.

Subcommands: ``augment``, ``synthesize``, ``certify``, ``simulate`` and
``compare``. Exit codes are 0 on success, 1 when a certificate or ordering
check fails, and 2 on bad input.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, bundled_config, load_config, with_overrides, write_kv
from .linalg import NotHurwitzError
from .metrics import NORM_CONVENTION, format_table
from .model import ModelError, validate_plant
from .sim import SimulationDiverged
from .synth import SynthesisError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _mkdir(path):
    path.mkdir(parents=True, exist_ok=True)
    return path


def _provenance(cfg, command):
    return {"command": command, "config": cfg.source, "config_hash": cfg.hash,
            "seed": cfg.sim.seed, "version": __version__}


def _load(args):
    path = args.config or bundled_config("benchmark")
    cfg = load_config(path)
    cfg = with_overrides(cfg, seed=args.seed, dt=args.dt, t_end=args.t_end, mode=args.mode)
    report = validate_plant(cfg.plant)
    if not report.ok:
        raise ConfigError("plant", "; ".join(report.failures))
    return cfg, _mkdir(Path(args.out))


def _certificate_items(certs):
    items = {}
    for mode, cert in certs.items():
        p = mode.lower()
        items[f"{p}.passed"] = cert.passed
        items[f"{p}.beta"] = cert.beta
        if cert.beta_cascade is not None:
            items[f"{p}.beta_cascade"] = cert.beta_cascade
        for k, v in cert.margins.items():
            items[f"{p}.margin.{k}"] = v
        for k, v in cert.pole_report.items():
            items[f"{p}.poles.{k}"] = v
        items[f"{p}.P_bar"] = cert.P_bar
        items[f"{p}.Q"] = cert.Q
        for k, v in cert.switch_residuals.items():
            items[f"{p}.switch.{k}"] = v
    return items


def _certify(cfg, gains, out, command):
    from .pipeline import certify

    certs = certify(cfg, gains)
    write_kv(out / "certificate.txt", _certificate_items(certs), _provenance(cfg, command))
    for mode, cert in certs.items():
        print(f"{mode}: beta={cert.beta:g} " + " ".join(f"{k}={v:.6g}" for k, v in cert.margins.items())
              + f" -> {'PASS' if cert.passed else 'FAIL'}")
    return all(c.passed for c in certs.values())


def cmd_augment(args):
    cfg, out = _load(args)
    aug = cfg.augmented()
    items = {"E": aug.E, "A": aug.A, "B": aug.B, "B_f": aug.B_f, "C": aug.C,
             "B_f_plant": cfg.plant.B_f, "Phi": aug.Phi}
    path = write_kv(out / "augmented.txt", items, _provenance(cfg, "augment"))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_synthesize(args):
    from .pipeline import build_gains

    cfg, out = _load(args)
    gains = build_gains(cfg)
    items = {**gains.as_dict(), "source": gains.source}
    items.update({f"residual.{k}": v for k, v in gains.residuals.items()})
    write_kv(out / "gains.txt", items, _provenance(cfg, "synthesize"))
    ok = _certify(cfg, gains, out, "synthesize")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_certify(args):
    from .pipeline import build_gains

    cfg, out = _load(args)
    ok = _certify(cfg, build_gains(cfg), out, "certify")
    return EXIT_OK if ok else EXIT_FAIL


def _modes(cfg):
    mode = cfg.sim.mode.lower()
    return ["smo", "smoco"] if mode == "both" else [mode]


def cmd_simulate(args):
    from .pipeline import build_gains, simulate

    cfg, out = _load(args)
    gains = build_gains(cfg)
    prov = _provenance(cfg, "simulate")
    for mode in _modes(cfg):
        traj = simulate(cfg, gains, mode)
        path = out / f"trajectory_{mode}.csv"
        traj.to_csv(path, {**prov, "mode": mode}, decimation=cfg.sim.decimation)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_compare(args):
    from .pipeline import build_gains, compare
    from .plotting import render_all

    cfg, out = _load(args)
    gains = build_gains(cfg)
    a, b, report = compare(cfg, gains)
    prov = _provenance(cfg, "compare")
    for mode, traj in (("smo", a), ("smoco", b)):
        traj.to_csv(out / f"trajectory_{mode}.csv", {**prov, "mode": mode},
                    decimation=cfg.sim.decimation)
    items = {"norm_convention": NORM_CONVENTION, **report.as_dict(),
             "orderings_pass": report.orderings_pass}
    write_kv(out / "report.txt", items, prov)
    table = format_table(report)
    (out / "report_table.txt").write_text(table + "\n")
    figs = [] if args.no_figures else render_all(a, b, _mkdir(out / "figures"))
    print(table)
    for f in figs:
        print(f"wrote {f}")
    return EXIT_OK if report.orderings_pass else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(prog="smoco", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (default: bundled benchmark)")
    common.add_argument("--mode", choices=["smo", "smoco", "both"])
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--dt", type=float)
    common.add_argument("--t-end", type=float, dest="t_end")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, text in (
        ("augment", cmd_augment, "write the descriptor-form matrices"),
        ("synthesize", cmd_synthesize, "compute gains and certificates"),
        ("certify", cmd_certify, "certify the configured gains"),
        ("simulate", cmd_simulate, "simulate and write trajectory CSVs"),
        ("compare", cmd_compare, "simulate both observers and write the comparison report"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=func)
        if name == "compare":
            p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    return parser


def _failure(out, command, kind, exc):
    record = {"status": "error", "command": command, "kind": kind, "message": str(exc)}
    if isinstance(exc, ConfigError):
        record["field"] = exc.path
    print(json.dumps(record), file=sys.stderr)
    try:
        Path(out).mkdir(parents=True, exist_ok=True)
        write_kv(Path(out) / "failure.txt", record)
    except OSError:
        pass


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not hasattr(args, "no_figures"):
        args.no_figures = False
    try:
        return args.func(args)
    except (SynthesisError, NotHurwitzError, SimulationDiverged, np.linalg.LinAlgError) as exc:
        _failure(args.out, args.command, "failure", exc)
        return EXIT_FAIL
    except (ConfigError, ModelError, ValueError) as exc:
        _failure(args.out, args.command, "input", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
