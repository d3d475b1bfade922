"""Matplotlib figures for bench output.  Figures go to files only."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GAP_FLOOR = 1e-16


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_gap_traces(traces, path, gap="nu_d", alphas=None, title=None):
    """log10 gap against iterations x alpha, one line per labelled trace.

    ``traces`` maps a label to a ConvergenceTrace or to a (meta, cols) pair
    as returned by io.read_trace.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, tr in traces.items():
        if isinstance(tr, tuple):
            cols = tr[1]
            it, val = cols["iteration"], cols[gap]
        else:
            it = np.array([r.iteration for r in tr.rows], dtype=float)
            val = np.array([getattr(r, gap) for r in tr.rows])
        alpha = 1.0 if alphas is None else alphas.get(label, 1.0)
        ax.plot(it * alpha, np.log10(np.maximum(val, GAP_FLOOR)), label=label)
    ax.set_xlabel("iterations x alpha")
    ax.set_ylabel(f"log10 {gap}")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_scaling(rows, slope, path):
    """Chain-example iteration counts on log-log axes with the fitted line."""
    N = np.array([r["N"] for r in rows], dtype=float)
    it = np.array([r["mean_iterations"] for r in rows])
    coef = np.polyfit(np.log(N), np.log(it), 1)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(N, it, "o", label="mean iterations")
    ax.loglog(N, np.exp(np.polyval(coef, np.log(N))), "-", label=f"slope {slope:.2f}")
    ax.set_xlabel("N")
    ax.set_ylabel("iterations to g <= 0.001 g(y0)")
    ax.legend()
    return _finish(fig, path)


def plot_medians(medians, path, ylabel, title=None):
    """Bar chart of per-label medians."""
    labels = list(medians)
    fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(labels) + 2), 4))
    ax.bar(range(len(labels)), [medians[k] for k in labels])
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return _finish(fig, path)
