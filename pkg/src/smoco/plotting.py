"""Figures for the comparison run, rendered to files with the Agg backend."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_disturbance(traj_smo, traj_smoco, path):
    m = traj_smo.d.shape[1]
    fig, axes = plt.subplots(m, 1, figsize=(8, 2.6 * m), sharex=True, squeeze=False)
    for i, ax in enumerate(axes[:, 0]):
        ax.plot(traj_smo.t, traj_smo.d[:, i], "k", lw=1.2, label="d")
        ax.plot(traj_smo.t, traj_smo.dhat[:, i], lw=0.6, label="SMO")
        ax.plot(traj_smo.t, traj_smo.dfilt[:, i], lw=0.8, label="SMO-LF")
        ax.plot(traj_smoco.t, traj_smoco.dtilde[:, i], lw=0.8, label="SMO-CO")
        ax.set_ylabel(f"d{i + 1}")
    axes[0, 0].legend(loc="upper right", ncol=4, fontsize=8)
    axes[-1, 0].set_xlabel("t [s]")
    return _save(fig, path)


def plot_errors(traj_smo, traj_smoco, path):
    n = traj_smo.x.shape[1]
    fig, axes = plt.subplots(n, 1, figsize=(8, 2.2 * n), sharex=True, squeeze=False)
    for i, ax in enumerate(axes[:, 0]):
        ax.plot(traj_smo.t, traj_smo.x[:, i] - traj_smo.xhat[:, i], lw=0.6, label="x - xhat")
        ax.plot(traj_smoco.t, traj_smoco.x[:, i] - traj_smoco.xtilde[:, i], lw=0.8, label="x - xtilde")
        ax.set_ylabel(f"e{i + 1}")
    axes[0, 0].legend(loc="upper right", fontsize=8)
    axes[-1, 0].set_xlabel("t [s]")
    return _save(fig, path)


def plot_inputs(traj_smo, traj_smoco, path):
    m = traj_smo.u.shape[1]
    fig, axes = plt.subplots(m, 1, figsize=(8, 2.6 * m), sharex=True, squeeze=False)
    for i, ax in enumerate(axes[:, 0]):
        ax.plot(traj_smo.t, traj_smo.u[:, i], lw=0.6, label="u(xhat)")
        ax.plot(traj_smoco.t, traj_smoco.u[:, i], lw=0.8, label="u(xtilde)")
        ax.set_ylabel(f"u{i + 1}")
    axes[0, 0].legend(loc="upper right", fontsize=8)
    axes[-1, 0].set_xlabel("t [s]")
    return _save(fig, path)


def render_all(traj_smo, traj_smoco, out_dir, stride=10):
    """Write the three comparison figures; ``stride`` thins the samples."""
    out = Path(out_dir)
    a, b = _thin(traj_smo, stride), _thin(traj_smoco, stride)
    return [
        plot_disturbance(a, b, out / "disturbance.png"),
        plot_errors(a, b, out / "estimation_error.png"),
        plot_inputs(a, b, out / "control_input.png"),
    ]


class _View:
    def __init__(self, traj, stride):
        for name in ("t", "x", "xhat", "xtilde", "d", "dhat", "dtilde", "dfilt", "u"):
            setattr(self, name, getattr(traj, name)[::stride])


def _thin(traj, stride):
    return _View(traj, max(1, int(stride)))
