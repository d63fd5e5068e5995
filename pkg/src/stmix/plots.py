"""Matplotlib renderers for the CLI report paths.

Every CLI command that writes a delimited table also renders a figure next
to it through one of these helpers.  All functions write a PNG and return
the path; none of them show interactive windows.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150

_STRATUM_STYLE = {
    "all": dict(color="black", ls="-"),
    "low_low": dict(color="tab:blue", ls="-"),
    "low_high": dict(color="tab:orange", ls="--"),
    "high_high": dict(color="tab:red", ls="-."),
}


def save_variogram_plot(results, path, title=None):
    """Semivariance curves per stratum, plus ratios to the pooled curve."""
    strata = [r for r in results if r.stratum != "all"]
    base = next(r for r in results if r.stratum == "all")
    ncols = 2 if strata else 1
    fig, axes = plt.subplots(1, ncols, figsize=(6 * ncols, 4.2), squeeze=False)
    ax = axes[0, 0]
    for r in results:
        ok = np.isfinite(r.values)
        ax.plot(r.centers[ok], r.values[ok], marker="o", ms=3,
                label=r.stratum, **_STRATUM_STYLE.get(r.stratum, {}))
    ax.set_xlabel("distance (km)")
    ax.set_ylabel("mean squared difference")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    if strata:
        ax2 = axes[0, 1]
        for r in strata:
            ok = np.isfinite(r.values) & np.isfinite(base.values)
            ax2.plot(r.centers[ok], r.values[ok] / base.values[ok], marker="o",
                     ms=3, label=f"{r.stratum} / all",
                     **_STRATUM_STYLE.get(r.stratum, {}))
        ax2.axhline(1.0, color="gray", lw=0.8)
        ax2.set_xlabel("distance (km)")
        ax2.set_ylabel("ratio to pooled curve")
        ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_demo_plot(curves, path):
    """Covariance vs distance for a few anchor points, plus the weights."""
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
    s = curves.s
    anchors = [0, len(s) // 4, len(s) // 2]
    for i in anchors:
        h = np.abs(s - s[i])
        order = np.argsort(h)
        axes[0].plot(h[order], curves.cov[i, order], label=f"anchor s={s[i]:+.2f}")
    axes[0].set_xlabel("|s - s'|")
    axes[0].set_ylabel("covariance")
    axes[0].set_title(f"{curves.variant} covariate")
    axes[0].legend(fontsize=8)
    axes[1].plot(s, curves.x, label="x(s)")
    axes[1].plot(s, curves.w2, label="weight on long-range component")
    axes[1].set_xlabel("s")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_trace_plot(trace, path):
    """Monitored covariance probes and latent-effect cells per iteration."""
    fig, axes = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    for i, (h_s, h_t) in enumerate(trace.lags):
        axes[0].plot(trace.cov_trace[:, i], lw=0.6,
                     label=f"h_s={h_s:g} km, h_t={h_t:g} d")
    axes[0].set_ylabel("covariance probe")
    axes[0].legend(fontsize=7, ncol=3)
    for i, (site, t) in enumerate(trace.cells):
        axes[1].plot(trace.mu_trace[:, i], lw=0.6, label=f"cell ({site},{t})")
    axes[1].set_ylabel("latent effect probe")
    axes[1].set_xlabel("iteration")
    axes[1].legend(fontsize=7, ncol=3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_effects_plot(rows, path):
    """Interval plot of covariance and correlation ratios per covariate."""
    fig, ax = plt.subplots(figsize=(8, 0.45 * len(rows) + 1.5))
    labels, centers, los, his = [], [], [], []
    for r in rows:
        zero_lag = r.h_s == 0 and r.h_t == 0
        val = (r.delta_mean, r.delta_lower, r.delta_upper) if zero_lag else (
            r.dtilde_mean, r.dtilde_lower, r.dtilde_upper
        )
        kind = "variance" if zero_lag else (
            "spatial cor." if r.h_t == 0 else "temporal cor."
        )
        labels.append(f"{r.name} ({kind} @ {r.h_s:g}km,{r.h_t:g}d)")
        centers.append(val[0])
        los.append(val[0] - val[1])
        his.append(val[2] - val[0])
    ypos = np.arange(len(rows))[::-1]
    ax.errorbar(centers, ypos, xerr=[los, his], fmt="o", ms=4, capsize=3)
    ax.axvline(1.0, color="gray", lw=0.8)
    ax.set_yticks(ypos)
    ax.set_yticklabels(labels, fontsize=8)
    ax.set_xlabel("posterior ratio (interval excluding 1 = significant)")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_prediction_plot(result, truth, path):
    """Predicted vs observed with 95% bars (truth may be None)."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    if truth is not None:
        ax.errorbar(truth, result.mean,
                    yerr=[result.mean - result.lower, result.upper - result.mean],
                    fmt="o", ms=3, alpha=0.6, lw=0.7)
        lim = [min(truth.min(), result.lower.min()),
               max(truth.max(), result.upper.max())]
        ax.plot(lim, lim, color="gray", lw=0.8)
        ax.set_xlabel("observed")
    else:
        idx = np.arange(len(result))
        ax.errorbar(idx, result.mean,
                    yerr=[result.mean - result.lower, result.upper - result.mean],
                    fmt="o", ms=3, alpha=0.6, lw=0.7)
        ax.set_xlabel("target index")
    ax.set_ylabel("posterior predictive mean (95% interval)")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_cv_plot(table, path):
    """Validation metrics against the number of mixture components."""
    ms = [row["M"] for row in table]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    for ax, key in zip(axes, ("mse", "ave_var", "coverage")):
        ax.plot(ms, [row[key] for row in table], marker="o")
        ax.set_xlabel("components M")
        ax.set_ylabel(key)
        ax.set_xticks(ms)
    axes[2].axhline(0.95, color="gray", lw=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_dataset_plot(data, path):
    """Site map colored by mean response plus a few site trajectories."""
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
    with np.errstate(invalid="ignore"):
        site_mean = np.nanmean(np.where(data.mask, data.y, np.nan), axis=1)
    sc = axes[0].scatter(data.coords[:, 0], data.coords[:, 1], c=site_mean,
                         cmap="viridis", s=30)
    fig.colorbar(sc, ax=axes[0], label="site mean response")
    axes[0].set_xlabel("x (km)")
    axes[0].set_ylabel("y (km)")
    for i in range(min(5, data.n_sites)):
        axes[1].plot(np.where(data.mask[i], data.y[i], np.nan), lw=0.8,
                     label=data.site_ids[i])
    axes[1].set_xlabel("time index")
    axes[1].set_ylabel("response")
    axes[1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
