"""Report figures, rendered to PNG next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_trace_figure(path, trace, labels) -> None:
    """Per-section error vs. adaptive threshold, with attack shading."""
    g = trace.mse.shape[1]
    fig, axes = plt.subplots(g, 1, figsize=(10, 2.6 * g), sharex=True, squeeze=False)
    for i in range(g):
        ax = axes[i][0]
        ax.plot(trace.t, trace.mse[:, i], lw=0.7, label=f"section {i} error")
        ax.plot(trace.t, trace.thresholds[:, i], lw=1.0, color="tab:red", label="threshold")
        if labels is not None and labels.any():
            ax.fill_between(trace.t, 0, 1, where=labels, transform=ax.get_xaxis_transform(),
                            alpha=0.15, color="tab:orange", label="attack")
        ax.set_yscale("log")
        ax.set_ylabel("MSE")
        ax.legend(loc="upper left", fontsize=8)
    axes[-1][0].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_figure(path, rows, x_key: str, y_keys, x_label: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    x = [row[x_key] for row in rows]
    for y_key in y_keys:
        ax.plot(x, [row[y_key] for row in rows], marker="o", label=y_key)
    ax.set_xlabel(x_label)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_noise_figure(path, rows) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    for adaptive in (True, False):
        sel = [r for r in rows if r["adaptive"] == adaptive]
        if not sel:
            continue
        sel.sort(key=lambda r: r["sigma"])
        label = "adaptive threshold" if adaptive else "static threshold"
        ax.plot([r["sigma"] for r in sel], [r["f1"] for r in sel], marker="o", label=label)
    ax.set_xlabel("noise sigma")
    ax.set_ylabel("F1")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_training_figure(path, cost_trace) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    ax.plot(np.arange(len(cost_trace)), cost_trace)
    ax.set_xlabel("epoch")
    ax.set_ylabel("training cost")
    ax.set_yscale("log")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(out_dir, trace, labels, results: dict) -> None:
    figdir = Path(out_dir) / "figures"
    figdir.mkdir(exist_ok=True)
    save_trace_figure(figdir / "trace.png", trace, labels)
    if "sweep_w_anom" in results:
        save_sweep_figure(figdir / "sweep_w_anom.png", results["sweep_w_anom"],
                          "w_anom", ["f1", "recall", "precision"], "anomaly waiting window")
    if "sweep_w_grace" in results:
        save_sweep_figure(figdir / "sweep_w_grace.png", results["sweep_w_grace"],
                          "w_grace", ["f1", "interventions_per_hour"], "grace time [s]")
    if "sweep_noise" in results:
        save_noise_figure(figdir / "sweep_noise.png", results["sweep_noise"])
