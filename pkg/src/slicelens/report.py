"""Matplotlib figure rendering for CLI reports and eval tables."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

COHEN_BANDS = ((0.2, "small"), (0.5, "medium"), (0.8, "large"), (1.3, "very large"))


def render_slice_scatter(views: list[dict], path, threshold: float | None = None) -> None:
    """Scatter of slice size vs effect size with Cohen reference bands."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for level, label in COHEN_BANDS:
        ax.axhline(level, color="#cccccc", linewidth=0.8, zorder=1)
        ax.annotate(label, xy=(1.0, level), xycoords=("axes fraction", "data"),
                    fontsize=7, color="#888888", ha="right", va="bottom")
    if threshold is not None:
        ax.axhline(threshold, color="#d62728", linewidth=1.0, linestyle="--",
                   label=f"threshold = {threshold:g}", zorder=2)
    if views:
        sizes = [v["size"] for v in views]
        effects = [v["effect_size"] for v in views]
        ax.scatter(sizes, effects, s=36, color="#1f77b4", zorder=3)
        for v in views:
            ax.annotate(str(v.get("rank", "")), xy=(v["size"], v["effect_size"]),
                        xytext=(4, 4), textcoords="offset points", fontsize=8)
        ax.set_xscale("log")
    else:
        ax.text(0.5, 0.5, "no slices", transform=ax.transAxes,
                ha="center", va="center", color="#888888")
    ax.set_xlabel("slice size")
    ax.set_ylabel("effect size")
    ax.set_title("problematic slices")
    if threshold is not None:
        ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_sampling_curve(rows: list[dict], path) -> None:
    """Runtime and relative accuracy against sample fraction, per algorithm."""
    fig, (ax_time, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    algorithms = sorted({r["algorithm"] for r in rows})
    for algorithm in algorithms:
        sub = sorted((r for r in rows if r["algorithm"] == algorithm),
                     key=lambda r: r["fraction"])
        fractions = [r["fraction"] for r in sub]
        ax_time.plot(fractions, [r["seconds"] for r in sub], marker="o", label=algorithm)
        ax_acc.plot(fractions, [r["relative_accuracy"] for r in sub], marker="o",
                    label=algorithm)
    for ax, ylabel in ((ax_time, "seconds"), (ax_acc, "relative accuracy")):
        ax.set_xscale("log")
        ax.set_xlabel("sample fraction")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=8)
    ax_acc.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_fdr_power(outcomes, path) -> None:
    """False discovery rate and power per policy over the alpha grid."""
    fig, (ax_fdr, ax_power) = plt.subplots(1, 2, figsize=(10, 4))
    policies = sorted({o.policy for o in outcomes})
    for policy in policies:
        sub = sorted((o for o in outcomes if o.policy == policy), key=lambda o: o.alpha)
        alphas = [o.alpha for o in sub]
        ax_fdr.plot(alphas, [o.mfdr for o in sub], marker="o", label=policy)
        ax_power.plot(alphas, [o.power for o in sub], marker="o", label=policy)
    grid = sorted({o.alpha for o in outcomes})
    ax_fdr.plot(grid, grid, linestyle=":", color="#999999", label="alpha")
    for ax, ylabel in ((ax_fdr, "estimated mFDR"), (ax_power, "power")):
        ax.set_xlabel("alpha")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_method_bars(means: dict[str, float], path) -> None:
    """Mean union accuracy per search method on the injected benchmark."""
    fig, ax = plt.subplots(figsize=(5, 4))
    methods = list(means)
    ax.bar(methods, [means[m] for m in methods], color="#1f77b4")
    ax.set_ylabel("mean accuracy")
    ax.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
