"""Matplotlib figures emitted next to the delimited score reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .scoring import MetricsReport, rescale_rmse_for_plot

ABILITY_COLORS = {"Const": "#d9534f", "Unders": "#428bca", "Reas": "#cab035"}


def accuracy_by_task_figure(report: MetricsReport, abilities: dict[str, str], path: Path) -> None:
    tasks = sorted(report.per_task_accuracy)
    scores = [report.per_task_accuracy[t] for t in tasks]
    rmse_tasks = sorted(report.per_task_rmse)
    for task in rmse_tasks:
        metric = "counting" if "counting" in task else "distance"
        tasks.append(task)
        scores.append(rescale_rmse_for_plot(report.per_task_rmse[task], metric))
    colors = [ABILITY_COLORS.get(abilities.get(t, ""), "#888888") for t in tasks]

    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(tasks)), 4.2))
    ax.bar(range(len(tasks)), scores, color=colors)
    ax.set_xticks(range(len(tasks)))
    ax.set_xticklabels(tasks, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("accuracy % (RMSE tasks rescaled)")
    ax.set_ylim(0, 100)
    ax.axhline(25.0, color="#999999", linewidth=0.8, linestyle="--")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def condition_breakdown_figure(report: MetricsReport, path: Path) -> None:
    axes_names = [a for a in ("weather", "time_of_day", "scene_type", "source")
                  if report.condition_breakdown.get(a)]
    if not axes_names:
        return
    fig, axs = plt.subplots(1, len(axes_names), figsize=(4 * len(axes_names), 3.6))
    if len(axes_names) == 1:
        axs = [axs]
    for ax, axis_name in zip(axs, axes_names):
        rows = report.condition_breakdown[axis_name]
        labels = list(rows)
        values = [rows[l]["accuracy"] for l in labels]
        hatches = ["//" if rows[l]["small_sample"] else "" for l in labels]
        bars = ax.bar(range(len(labels)), values, color="#428bca")
        for bar, hatch in zip(bars, hatches):
            bar.set_hatch(hatch)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
        ax.set_title(axis_name)
        ax.set_ylim(0, 100)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def ability_summary_figure(report: MetricsReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    names, values, colors = [], [], []
    for ability in ("Const", "Unders", "Reas"):
        if ability in report.ability_accuracy:
            names.append(ability)
            values.append(report.ability_accuracy[ability])
            colors.append(ABILITY_COLORS[ability])
    names.append("Avg")
    values.append(report.average)
    colors.append("#555555")
    ax.bar(names, values, color=colors)
    ax.set_ylabel("accuracy %")
    ax.set_ylim(0, 100)
    for k, v in enumerate(values):
        ax.text(k, v + 1, f"{v:.1f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def kappa_figure(rows: dict[str, tuple[float, str]], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    names = list(rows)
    values = [rows[n][0] for n in names]
    ax.bar(names, values, color=[ABILITY_COLORS.get(n, "#888888") for n in names])
    ax.set_ylabel("Cohen's kappa")
    ax.set_ylim(-0.2, 1.0)
    ax.axhline(0.0, color="#333333", linewidth=0.8)
    for k, name in enumerate(names):
        ax.text(k, values[k] + 0.02, rows[name][1], ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
