"""PNG figures rendered next to the CSV outputs (Agg backend, no display)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps repeated renders identical
_META = {"Software": None}

ENVELOPE_STYLE = {
    "gronwall": ("H(0) e^{ct} bound on |grad v_t|^2 + 2 Phi", "C1"),
    "velocity_bound": ("velocity bound", "C2"),
    "comparison": ("comparison ODE y(t)", "C3"),
    "envelope": ("closed-form envelope", "C4"),
}


def _simple_axis(ax):
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.grid(True, alpha=0.3)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_ledger(led, path, title=None):
    """Energies over time (left) and E against its envelopes (right)."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))
    ax0.plot(led.t, led.H, label="H")
    ax0.plot(led.t, 0.5 * led.gradvt2, label="kinetic  |grad v_t|^2 / 2")
    ax0.plot(led.t, led.phi, label="Phi")
    ax0.set_xlabel("t")
    ax0.set_ylabel("energy")
    ax0.legend(frameon=False, fontsize=8)
    _simple_axis(ax0)

    ax1.plot(led.t, led.E, "k", lw=2, label="E = |grad v|^2")
    for key in ("comparison", "envelope"):
        if key in led.envelopes:
            label, color = ENVELOPE_STYLE[key]
            ax1.plot(led.t, led.envelopes[key], color=color, ls="--", label=label)
    ax1.set_xlabel("t")
    ax1.set_yscale("log")
    ax1.legend(frameon=False, fontsize=8)
    _simple_axis(ax1)
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def plot_trajectory(traj, path, n_modes=6):
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in range(min(n_modes, traj.a.shape[1])):
        ax.plot(traj.t, traj.a[:, j], label=f"a_{j + 1}")
    if traj.t_stop is not None:
        ax.axvline(traj.t_stop, color="r", lw=0.8, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("modal coefficient")
    ax.legend(frameon=False, fontsize=8, ncol=2)
    _simple_axis(ax)
    return _save(fig, path)


def plot_margins(reports, path):
    """Horizontal bars of the worst margin per bound (symlog scale)."""
    names = [k for k, r in reports.items() if not r.skipped]
    margins = np.array([reports[k].worst_margin for k in names], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 0.5 * len(names) + 1.5))
    colors = ["C2" if reports[k].passed else "C3" for k in names]
    ax.barh(names, margins, color=colors)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xscale("symlog", linthresh=1e-8)
    ax.set_xlabel("worst margin (bound - observed)")
    _simple_axis(ax)
    return _save(fig, path)


def plot_convergence(rows, path):
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, kind, xlabel in ((axes[0], "m", "modes (finer level)"),
                             (axes[1], "dt", "dt (finer level)")):
        sel = [r for r in rows if r.kind == kind]
        if not sel:
            ax.set_visible(False)
            continue
        x = [r.fine for r in sel]
        y = [max(r.difference, 1e-300) for r in sel]
        ax.loglog(x, y, "o-")
        for r in sel:
            if r.flagged:
                ax.plot(r.fine, max(r.difference, 1e-300), "rx", ms=10)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("max_t L2 difference")
        _simple_axis(ax)
    return _save(fig, path)
