"""SVG figures for case-study reports"""
import os

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams.update(
    {
        "font.family": "DejaVu Sans",
        "axes.unicode_minus": False,
        # fixed ids and no timestamp keep reruns byte-identical
        "svg.hashsalt": "probesizer",
    }
)
import matplotlib.pyplot as plt  # noqa: E402

from probesizer.config import POWER_THRESHOLD  # noqa: E402


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_power_curves(curves, path, title=None):
    """One line per labelled PowerCurve, test size on a log axis"""
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    for label, curve in curves.items():
        ax.plot(curve.sizes, curve.powers, marker="o", label=label)
    ax.axhline(POWER_THRESHOLD, color="grey", linestyle="--", linewidth=1)
    ax.set_xscale("log", base=2)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("test set size")
    ax.set_ylabel("power")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    return _save(fig, path)


def plot_margin_overlay(rows, path, title=None):
    """Mean accuracy with its +-stdev band and the +-margin envelope"""
    n_train = [row["n_train"] for row in rows]
    mean = [row["mean"] for row in rows]
    stdev = [row["stdev"] for row in rows]
    margin = [row["margin"] for row in rows]

    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ax.plot(n_train, mean, marker="o", label="mean accuracy")
    ax.fill_between(
        n_train,
        [m - s for m, s in zip(mean, stdev)],
        [m + s for m, s in zip(mean, stdev)],
        alpha=0.3,
        label="mean +- stdev",
    )
    ax.plot(n_train, [m + e for m, e in zip(mean, margin)], color="black", linestyle=":", label="mean +- margin")
    ax.plot(n_train, [m - e for m, e in zip(mean, margin)], color="black", linestyle=":")
    ax.set_xscale("log", base=2)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("training set size")
    ax.set_ylabel("test accuracy")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    return _save(fig, path)


def write_figures(report, out_dir):
    """SVGs for whatever the report has to show; returns the written paths"""
    paths = []
    if report.curves:
        paths.append(
            plot_power_curves(report.curves, os.path.join(out_dir, "power.svg"), report.kind.value)
        )
    if "cells" in report.summary:
        paths.append(
            plot_margin_overlay(
                report.summary["cells"], os.path.join(out_dir, "margins.svg"), report.kind.value
            )
        )
    return paths
