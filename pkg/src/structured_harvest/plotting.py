"""Figures for the report path, written next to the CSV files they display."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no Software/date metadata so repeated runs give identical files
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def steady_profile(l, x, E_star, N_star, R_star, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(l, x, color="k", lw=1.5)
        ax.set_xlabel("size l (cm)")
        ax.set_ylabel("density x*(l) (individuals/cm)")
        ax.set_title(f"no-harvest steady state: E*={E_star:.2f}, N*={N_star:.0f}, R(E*)={R_star:.3f}",
                     fontsize=9)
        return _save(fig, path)


def replacement_curve(E, R, E_star, E_crit, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(E, R, color="k", lw=1.5)
        ax.axhline(1.0, ls="--", color="0.4", lw=1)
        ax.axvline(E_star, ls="--", color="tab:blue", lw=1, label=f"E* = {E_star:.2f}")
        if E_crit is not None:
            ax.axvline(E_crit, ls=":", color="tab:red", lw=1, label=f"E_crit = {E_crit:.2f}")
        ax.set_xlabel("crowding E (individuals)")
        ax.set_ylabel("replacement index R(E)")
        ax.legend(frameon=False)
        return _save(fig, path)


def time_dynamics(records: dict, path):
    """records maps a label to (t, E, N)."""
    with plt.rc_context(STYLE):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.6))
        for label, (t, E, N) in records.items():
            a1.plot(t, E, lw=1.2, label=label)
            a2.plot(t, N, lw=1.2, label=label)
        a1.set_xlabel("t (yr)")
        a1.set_ylabel("E(t)")
        a2.set_xlabel("t (yr)")
        a2.set_ylabel("N(t)")
        a1.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def revenue_curve(l_star, J, viable, l_opt, path):
    l_star = np.asarray(l_star, dtype=float)
    J = np.asarray(J, dtype=float)
    viable = np.asarray(viable, dtype=bool)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(l_star, J, color="k", lw=1.5, marker=".", ms=3)
        for l_bad in l_star[~viable]:
            ax.axvspan(l_bad - 0.5, l_bad + 0.5, color="tab:red", alpha=0.15, lw=0)
        if l_opt is not None:
            ax.axvline(l_opt, ls="--", color="tab:blue", lw=1, label=f"l*_opt = {l_opt:.2f} cm")
            ax.legend(frameon=False)
        ax.set_xlabel("threshold l* (cm)")
        ax.set_ylabel("J_T ($)")
        return _save(fig, path)


def profile_comparison(l, x_base, x_opt, l_opt, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(l, x_base, color="k", lw=1.5, label="no harvest")
        ax.plot(l, x_opt, color="tab:blue", lw=1.5, label="optimal threshold")
        ax.axvline(l_opt, ls="--", color="0.4", lw=1)
        ax.set_xlabel("size l (cm)")
        ax.set_ylabel("density (individuals/cm)")
        ax.legend(frameon=False)
        return _save(fig, path)


def adjoint_profile(l, lam, S, c, l_star, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(l, c, color="0.5", lw=1, label="price c(l)")
        ax.plot(l, lam, color="tab:blue", lw=1.5, label="shadow value")
        ax.plot(l, S, color="k", lw=1.5, label="switching S = c - shadow")
        ax.axhline(0.0, color="0.6", lw=0.8)
        if l_star is not None:
            ax.axvline(l_star, ls="--", color="tab:red", lw=1)
        ax.set_xlabel("size l (cm)")
        ax.set_ylabel("$ per individual")
        ax.legend(frameon=False)
        return _save(fig, path)
