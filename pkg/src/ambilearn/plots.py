"""Static SVG figures for simulation and sweep outputs."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_run(log, out_dir, zones=None) -> list:
    """Trajectory, coefficients, error-vs-gamma, radius, and confidence figures."""
    plt = _plt()
    out_dir = Path(out_dir)
    written = []
    t = log["t"]
    p = log.meta["p"]

    state_cols = [c for c in ("x1", "x2", "x3") if c in log.columns] or \
                 [c for c in log.columns if c.startswith("x_")]

    if {"x1", "x2"} <= set(log.columns):
        fig, ax = plt.subplots(figsize=(6, 4))
        if zones is not None:
            for reg in zones.regions:
                ax.axvspan(reg.x1_min, min(reg.x1_max, log["x1"].max() + 0.5),
                           alpha=0.15, label=f"e={reg.e}")
        ax.plot(log["x1"], log["x2"], lw=1.0)
        ax.set_xlabel("x1 [m]")
        ax.set_ylabel("x2 [m]")
        ax.set_title("trajectory over road zones")
        if zones is not None and zones.regions:
            ax.legend(loc="best", fontsize=8)
        written.append(_save(fig, out_dir / "trajectory.svg"))

    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(p):
        ax.plot(t, log[f"alpha_{i + 1}"], lw=1.0, label=f"alpha_{i + 1}")
    ax.set_xlabel("t")
    ax.set_title("learned coefficients")
    ax.legend(fontsize=8)
    written.append(_save(fig, out_dir / "alpha.svg"))

    if np.isfinite(log["inf_error"]).any():
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(t, log["inf_error"], lw=1.0, label="|alpha - alpha*|_inf")
        ax.plot(t, log["gamma"], lw=1.0, label="gamma")
        ax.set_xlabel("t")
        ax.set_yscale("log")
        ax.set_title("estimate quality vs bound")
        ax.legend(fontsize=8)
        written.append(_save(fig, out_dir / "error_vs_gamma.svg"))

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, log["eps_hat"], lw=1.0, label="adaptive radius")
    ax.plot(t, log["eps"], lw=1.0, ls="--", label="perfect-information radius")
    if "eps_hat_oracle" in log.columns and np.isfinite(log["eps_hat_oracle"]).any():
        ax.plot(t, log["eps_hat_oracle"], lw=0.8, ls=":", label="oracle radius")
    ax.set_xlabel("t")
    ax.set_title("ambiguity radius")
    ax.legend(fontsize=8)
    written.append(_save(fig, out_dir / "radius.svg"))

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, log["confidence"], lw=1.0)
    ax.axhline(1.0 - log.meta["beta"], ls="--", lw=0.8, color="gray")
    ax.set_xlabel("t")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("composite confidence")
    written.append(_save(fig, out_dir / "confidence.svg"))

    del state_cols
    return written


def plot_sweep(ts, curves, online, beta, out_dir) -> list:
    """Confidence curves per horizon cap; ``curves`` maps T0 -> array over ts."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    for T0 in sorted(curves):
        ax.plot(ts, curves[T0], lw=1.0, label=f"T0 = {T0}")
    if online is not None:
        ax.plot(ts, online, lw=0.8, ls=":", color="black", label="online run")
    ax.axhline(1.0 - beta, ls="--", lw=0.8, color="gray")
    ax.set_xlabel("t")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("composite confidence vs horizon cap")
    ax.legend(fontsize=8)
    return [_save(fig, Path(out_dir) / "sweep.svg")]


def _save(fig, path) -> str:
    path = Path(path)
    fig.savefig(path, format="svg", bbox_inches="tight")
    import matplotlib.pyplot as plt
    plt.close(fig)
    return str(path)
