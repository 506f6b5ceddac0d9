"""Figure rendering for the CLI report paths. All functions write PNG files;
matplotlib is imported lazily with the Agg backend so library use never
touches a display.
"""

import os

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    plt.rcParams.update({
        "figure.dpi": 110,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
    })
    return plt


def _ensure_dir(directory):
    os.makedirs(directory, exist_ok=True)


def convergence_figure(trace, path):
    """Objective and fixed-point residual along a solve trace."""
    plt = _plt()
    n = np.asarray(trace.n)
    obj = np.asarray(trace.objective)
    fp = np.asarray(trace.fp_residual)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3))
    gap = obj - obj.min()
    ax1.semilogy(n, np.maximum(gap, 1e-300), lw=1.2)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("objective minus best seen")
    ax2.semilogy(n, np.maximum(fp, 1e-300), lw=1.2, color="tab:orange")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("fixed-point residual")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def solution_figure(x, path, shape=None):
    """The solution as an image when a 2d shape is known, else as a line."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    if shape is not None and len(shape) == 2:
        im = ax.imshow(np.asarray(x).reshape(shape), cmap="gray")
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.grid(False)
    else:
        ax.plot(np.asarray(x), lw=1.2)
        ax.set_xlabel("index")
        ax.set_ylabel("value")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def denoise_figure(original, result, path):
    plt = _plt()
    fig, axes = plt.subplots(1, 2, figsize=(7, 3.2))
    vmin = min(original.min(), result.min())
    vmax = max(original.max(), result.max())
    for ax, img, title in zip(axes, (original, result), ("input", "output")):
        im = ax.imshow(img, cmap="gray", vmin=vmin, vmax=vmax)
        ax.set_title(title)
        ax.grid(False)
    fig.colorbar(im, ax=list(axes), shrink=0.85)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def bench_figure(rows, path):
    """Residual and distance-to-reference curves, one line per algorithm."""
    plt = _plt()
    by_alg = {}
    for alg, n, obj, fp, dist, dev in rows:
        by_alg.setdefault(alg, []).append((n, fp, dist))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3))
    for alg, series in sorted(by_alg.items()):
        arr = np.asarray(series)
        ax1.semilogy(arr[:, 0], np.maximum(arr[:, 1], 1e-300), lw=1.2, label=alg)
        ax2.semilogy(arr[:, 0], np.maximum(arr[:, 2], 1e-300), lw=1.2, label=alg)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("fixed-point residual")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("distance to reference")
    ax1.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def check_figure(report, path):
    """Pass/fail bars for each named check in a report document."""
    plt = _plt()
    names, values, colors = [], [], []
    for chk in report["checks"]:
        if not chk.get("enforced", True):
            continue
        names.append(chk["name"])
        margin = chk.get("margin", 0.0)
        values.append(margin)
        colors.append("tab:green" if chk["passed"] else "tab:red")
    fig, ax = plt.subplots(figsize=(6, 0.45 * max(4, len(names))))
    pos = np.arange(len(names))
    ax.barh(pos, values, color=colors)
    ax.set_yticks(pos, names)
    ax.invert_yaxis()
    ax.set_xlabel("margin (negative is safe)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
