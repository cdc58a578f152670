"""Report figures, rendered off-screen to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .analysis import ChangeRateTable, CorrelationMatrix  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_change_rates(table: ChangeRateTable, path, title: str = "", predicted: dict | None = None):
    """Change rate per cycle for every operator, with interval bars.

    ``predicted`` optionally maps operator name to a rate per cycle.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for op in table.operators():
        rows = [e for e in table if e.operator == op and e.defined]
        if not rows:
            continue
        x = np.array([e.cycle for e in rows])
        y = np.array([e.rate for e in rows])
        err = np.array([[e.rate - e.ci_low for e in rows], [e.ci_high - e.rate for e in rows]])
        line = ax.errorbar(x, y, yerr=err, marker="o", ms=3, capsize=2, label=op)
        if predicted and op in predicted:
            ax.plot(x, np.asarray(predicted[op])[: len(x)], "--", color=line[0].get_color(), lw=1)
    ax.set_xlabel("cycle")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set_ylabel("change rate")
    ax.set_ylim(bottom=0)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7, ncol=2)
    return _save(fig, path)


def plot_correlations(matrix: CorrelationMatrix, path, title: str = ""):
    fig, ax = plt.subplots(figsize=(5.6, 5.0))
    vals = np.array(matrix.values, dtype=float)
    np.fill_diagonal(vals, np.nan)
    lim = np.nanmax(np.abs(vals)) if np.isfinite(vals).any() else 1.0
    im = ax.imshow(vals, cmap="RdBu_r", vmin=-lim, vmax=lim)
    fig.colorbar(im, ax=ax, shrink=0.8, label="p_ij")
    ax.set_xlabel("detector")
    ax.set_ylabel("detector")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_class_means(means: dict[str, float], path, errors: dict[str, float] | None = None):
    names = list(means)
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    yerr = [errors.get(n, 0.0) for n in names] if errors else None
    ax.bar(names, [means[n] for n in names], yerr=yerr, capsize=3, color="tab:blue")
    ax.axhline(0, color="k", lw=0.6)
    ax.set_ylabel("mean p_ij")
    return _save(fig, path)


def plot_fit(observed: list[np.ndarray], predicted: list[np.ndarray], labels: list[str], path):
    """Predicted against observed rates, one marker style per circuit."""
    fig, ax = plt.subplots(figsize=(4.8, 4.4))
    top = 0.0
    for obs, pred, lab in zip(observed, predicted, labels):
        ax.plot(obs, pred, "o", ms=3, label=lab)
        top = max(top, float(np.max(obs, initial=0)), float(np.max(pred, initial=0)))
    ax.plot([0, top], [0, top], "k--", lw=0.8)
    ax.set_xlabel("observed rate")
    ax.set_ylabel("predicted rate")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_distribution(dist: dict[str, float], path, top: int = 16):
    items = sorted(dist.items(), key=lambda kv: -kv[1])[:top]
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    ax.bar([k for k, _ in items], [v for _, v in items])
    ax.set_ylabel("probability")
    ax.tick_params(axis="x", rotation=90, labelsize=7)
    return _save(fig, path)
