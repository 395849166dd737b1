"""Figure rendering for the report paths: every experiment writes a PNG
next to its delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_loglog_decay",
    "save_partition_profiles",
    "save_schedule_chart",
    "save_cauchy_diffs",
    "save_region_ratios",
]


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_loglog_decay(path, x, y, slope=None, intercept=None, title="", xlabel="scale", ylabel="value"):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.loglog(x, y, "o-", color="tab:blue", label="measured")
    if slope is not None:
        xs = np.asarray(x, dtype=float)
        ref = np.exp(intercept) * xs**slope if intercept is not None else y[0] * (xs / xs[0]) ** slope
        ax.loglog(xs, ref, "--", color="tab:gray", label=f"slope {slope:.2f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _finish(fig, path)


def save_partition_profiles(path, consts, chis, psis, n=1):
    fig, axes = plt.subplots(1, 2, figsize=(8.4, 3.2))
    ratios = np.linspace(0.0, 0.999, 600)
    freq = np.stack([np.sqrt(1 - ratios**2), ratios], axis=1)
    for c, style in zip(chis, ("-", "--", ":")):
        axes[0].plot(ratios, c(freq), style, label=c.name)
    for d in consts.delta:
        axes[0].axvline(d, color="gray", alpha=0.3, lw=0.7)
    axes[0].set_xlabel("|tau| / |(sigma, tau)|")
    axes[0].set_title("sphere cutoffs")
    axes[0].legend(fontsize=8)
    rr = np.geomspace(1e-2, 1e2, 600)
    freq2 = np.stack([np.ones_like(rr), rr], axis=1)
    for p, style in zip(psis, ("-", "--", ":")):
        axes[1].semilogx(rr, p(freq2), style, label=p.name)
    for e in consts.eps:
        axes[1].axvline(e, color="gray", alpha=0.3, lw=0.7)
    axes[1].set_xlabel("|tau| / |sigma_tilde|")
    axes[1].set_title("block-ratio cutoffs")
    axes[1].legend(fontsize=8)
    _finish(fig, path)


def save_schedule_chart(path, schedule):
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    markers = {"B": "o", "E1": "s", "E2": "^", "E3": "v"}
    for (i, j, kind), cls_ in sorted(schedule.entries.items()):
        x = i + 0.18 * (j - 1)
        ax.scatter(x, float(cls_.p), marker=markers[kind], color="tab:blue", s=24)
        ax.scatter(x, float(cls_.l), marker=markers[kind], color="tab:orange", s=24)
    ax.set_xlabel("stage (substages offset)")
    ax.set_ylabel("order")
    ax.set_title("first order (blue) and second order (orange) per piece")
    ax.grid(alpha=0.3)
    _finish(fig, path)


def save_cauchy_diffs(path, R_ladder, diffs_by_label, title="cutoff-doubling differences"):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    mids = np.asarray(R_ladder, dtype=float)[1:]
    for label, d in diffs_by_label.items():
        ax.loglog(mids, np.maximum(np.asarray(d, dtype=float), 1e-300), "o-", label=label)
    ax.set_xlabel("cutoff")
    ax.set_ylabel("|value(2R) - value(R)|")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _finish(fig, path)


def save_region_ratios(path, per_region, title="sup |value| / envelope per region"):
    fig, ax = plt.subplots(figsize=(6.4, 3.4))
    labels = list(per_region)
    vals = [per_region[k]["sup_ratio"] for k in labels]
    colors = ["tab:green" if per_region[k].get("pass", True) else "tab:red" for k in labels]
    ax.bar(range(len(labels)), vals, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("sup ratio")
    ax.set_title(title)
    _finish(fig, path)
