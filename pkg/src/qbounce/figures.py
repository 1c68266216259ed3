"""Figure rendering for the CLI report paths (PNG alongside the CSVs)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy.ndimage import maximum_filter1d

_RC = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def render_autocorrelation(series, path, t_cl=None, title=""):
    """|A(t)|^2 with its per-period recurrence envelope."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        abs2 = np.abs(series.values) ** 2
        ax.plot(series.times, abs2, lw=0.4, color="#9bb4d4", label=r"$|A(t)|^2$")
        if t_cl is not None:
            w = max(1, int(round(t_cl / series.sample_interval)))
            env = maximum_filter1d(abs2, size=w, mode="nearest")
            ax.plot(series.times, env, lw=1.4, color="#b03030", label="envelope")
        ax.set_xlabel("t (scaled units)")
        ax.set_ylabel(r"$|\langle\psi(0)|\psi(t)\rangle|^2$")
        ax.set_ylim(bottom=0)
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def render_sweep(rows, path, title=""):
    """Revival-time ratios vs modulation strength."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        lam = np.array([r.lam for r in rows])
        for attr, style, label in (
                ("ratio_numeric", "o-", "numeric"),
                ("ratio_analytic_general", "--", "general formula"),
                ("ratio_analytic_simple", ":", "simple bouncer formula")):
            y = np.array([getattr(r, attr) for r in rows])
            ok = np.isfinite(y)
            if np.any(ok):
                ax.plot(lam[ok], y[ok], style, label=label)
        ax.set_xlabel(r"modulation strength $\lambda$")
        ax.set_ylabel(r"$T_\lambda / T_0$")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
