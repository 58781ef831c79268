"""PNG figures rendered off-screen to bytes for the report commands."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["ladder_png", "path_png", "slope_png", "tail_png"]


def _render(fig):
    buf = io.BytesIO()
    fig.tight_layout()
    fig.savefig(buf, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)
    return buf.getvalue()


def path_png(path, title, max_modes=6):
    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(min(path.n, max_modes)):
        ax.plot(path.times, path.nodes[:, i], label=f"mode {i + 1}")
    ax.set_xlabel("t")
    ax.set_ylabel("coefficient")
    ax.set_title(title)
    ax.legend(fontsize="small")
    return _render(fig)


def ladder_png(report, title):
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.asarray(report.values, dtype=float)
    series = [("rate error", report.rate_errors)]
    if report.path_errors is not None:
        series.append(("path error", report.path_errors))
    for label, ys in series:
        ys = np.asarray(ys, dtype=float)
        keep = ys > 0
        if keep.any():
            ax.loglog(x[keep], ys[keep], "o-", label=label)
    ax.set_xlabel(report.variable)
    ax.set_ylabel("error")
    ax.set_title(title)
    ax.legend(fontsize="small")
    return _render(fig)


def slope_png(fit, reference, title):
    fig, ax = plt.subplots(figsize=(6, 4))
    eps = np.asarray(fit.eps)
    rates = np.asarray(fit.rates, dtype=float)
    ok = np.isfinite(rates)
    ax.plot(eps[ok] ** 2, rates[ok], "o-", label="-eps^2 log p")
    if reference is not None:
        ax.axhline(reference, color="k", ls="--", label="tube action")
    ax.set_xlabel("eps^2")
    ax.set_title(title)
    ax.legend(fontsize="small")
    return _render(fig)


def tail_png(samples, std, title):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(samples, bins=100, density=True, alpha=0.6, label="samples")
    x = np.linspace(-5 * std, 5 * std, 400)
    ax.plot(x, np.exp(-0.5 * (x / std) ** 2) / (std * np.sqrt(2 * np.pi)), "k", label="Gaussian")
    ax.set_xlabel("mode 1")
    ax.set_title(title)
    ax.legend(fontsize="small")
    return _render(fig)
