"""Figure rendering for the CLI report path.

Each function takes the already computed data and a target path; figures
are saved next to the delimited output with the same stem.  Rendering is
headless (Agg) and deliberately plain: one panel per quantity, no styling
beyond what makes the curves readable.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_scatter_figure",
    "save_pole_figure",
    "save_norm_figure",
    "save_dynamics_figure",
    "save_pendulum_figure",
]

_CLASS_STYLE = {
    "bound": ("tab:blue", "o"),
    "anti-bound": ("tab:cyan", "s"),
    "resonant": ("tab:red", "v"),
    "anti-resonant": ("tab:orange", "^"),
}


def _save(fig, path):
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_scatter_figure(path, E, R, T, G):
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.6),
                                   constrained_layout=True)
    ax1.plot(E, R, label="R")
    ax1.plot(E, T, label="T")
    ax1.set_ylabel("probability")
    ax1.legend()
    ax2.plot(E, G, color="tab:green")
    ax2.set_xlabel("E")
    ax2.set_ylabel("G  [2e^2/h]")
    _save(fig, path)


def save_pole_figure(path, poles, k_label="Re k", e_note=""):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.2, 4.2), constrained_layout=True)
    for kind, (color, marker) in _CLASS_STYLE.items():
        ks = [p.k for p in poles if p.kind == kind]
        es = [p.E for p in poles if p.kind == kind]
        if not ks:
            continue
        ax1.scatter([z.real for z in ks], [z.imag for z in ks],
                    c=color, marker=marker, label=kind)
        ax2.scatter([z.real for z in es], [z.imag for z in es],
                    c=color, marker=marker)
    ax1.axhline(0.0, color="0.8", lw=0.8)
    ax1.axvline(0.0, color="0.8", lw=0.8)
    ax1.set_xlabel(k_label)
    ax1.set_ylabel("Im " + k_label.split()[-1])
    ax1.legend(fontsize="small")
    ax2.axhline(0.0, color="0.8", lw=0.8)
    ax2.set_xlabel("Re E" + (f"  ({e_note})" if e_note else ""))
    ax2.set_ylabel("Im E")
    _save(fig, path)


def save_norm_figure(path, t, N, dNdt):
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.6),
                                   constrained_layout=True)
    ax1.plot(t, N / N[0] - 1.0)
    ax1.set_ylabel("N(t)/N(0) - 1")
    ax2.plot(t, dNdt, color="tab:red")
    ax2.set_xlabel("t")
    ax2.set_ylabel("dN/dt")
    _save(fig, path)


def save_dynamics_figure(path, t, columns):
    fig, ax = plt.subplots(figsize=(6.8, 4.4), constrained_layout=True)
    for label, values in columns.items():
        vals = np.asarray(values, dtype=float)
        if label == "P":
            ax.plot(t, vals, color="black", lw=1.4, label="P")
        elif np.any(vals > 0):
            ax.plot(t, vals, lw=1.0, label=label)
    ax.set_yscale("log")
    floor = max(1e-16, np.min(columns["P"][columns["P"] > 0]) * 0.1)
    ax.set_ylim(bottom=floor)
    ax.set_xlabel("t")
    ax.set_ylabel("survival probability")
    ax.legend(fontsize="small")
    _save(fig, path)


def save_pendulum_figure(path, t, xs):
    fig, ax = plt.subplots(figsize=(6.8, 4.0), constrained_layout=True)
    ax.plot(t, xs[:, 0], label="x1")
    ax.plot(t, xs[:, 1], label="x2")
    ax.set_xlabel("t")
    ax.set_ylabel("displacement")
    ax.legend()
    _save(fig, path)
