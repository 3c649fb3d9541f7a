"""Matplotlib renderings written next to the delimited outputs.

Figures are a convenience layer over the CSV/report files; nothing numeric
depends on them. All rendering goes through the Agg backend so the CLI
works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_CLUSTER_CMAP = "tab10"


def save_dataset_views(dataset, path_prefix: str) -> list[str]:
    """One scatter per view, colored by label when labels exist."""
    paths = []
    for h, view in enumerate(dataset.views, start=1):
        fig, ax = plt.subplots(figsize=(6, 5))
        if dataset.labels is not None:
            ax.scatter(view[:, 0], view[:, 1], c=dataset.labels, cmap=_CLUSTER_CMAP, s=6, alpha=0.7)
        else:
            ax.scatter(view[:, 0], view[:, 1], s=6, alpha=0.7)
        ax.set_title(f"view {h}")
        ax.set_aspect("equal", adjustable="datalim")
        out = f"{path_prefix}view_{h}.png"
        fig.savefig(out, dpi=120, bbox_inches="tight")
        plt.close(fig)
        paths.append(out)
    return paths


def save_objective_history(history: list[float], path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(history) + 1), history, marker="o", markersize=3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.set_title("objective trajectory")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_confusion(counts: np.ndarray, path: str) -> None:
    normalized = counts / np.maximum(counts.sum(axis=1, keepdims=True), 1)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(normalized, cmap="Blues", vmin=0.0, vmax=1.0)
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            ax.text(j, i, str(int(counts[i, j])), ha="center", va="center", fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("truth")
    ax.set_title("confusion matrix (row-normalized shading)")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_round_trace(round_log: list[dict], path: str) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    rounds = [rec["round"] for rec in round_log]
    client_ids = sorted(round_log[0]["client_objectives"])
    for cid in client_ids:
        axes[0].plot(rounds, [rec["client_objectives"][cid] for rec in round_log],
                     marker="o", markersize=3, label=f"client {cid}")
    axes[0].set_xlabel("round")
    axes[0].set_ylabel("local objective")
    axes[0].legend()
    axes[1].plot(rounds, [rec["payload_bytes"] for rec in round_log], marker="s", markersize=3)
    axes[1].set_xlabel("round")
    axes[1].set_ylabel("payload bytes")
    fig.suptitle("federation rounds")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def save_ablation(rows: list[dict], path: str) -> None:
    labels = [row["estimator"] for row in rows]
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(x - 0.2, [row["accuracy"] for row in rows], width=0.4, label="accuracy")
    ax.bar(x + 0.2, [row["nmi"] for row in rows], width=0.4, label="nmi")
    ax.set_xticks(x, labels)
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.set_title("distance-transform ablation")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
