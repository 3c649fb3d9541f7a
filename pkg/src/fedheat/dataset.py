"""Multi-view dataset container and its on-disk directory format.

A dataset directory holds one headerless CSV per view (``view_1.csv`` ..
``view_s.csv``), an optional ``labels.csv`` (one integer per line) and a
plain-text ``meta`` file with ``key = value`` lines. Floats are written with
shortest round-trip repr so that write -> read -> write is byte-identical.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = "fedheat-dataset-1"


@dataclass
class MultiViewDataset:
    """Per-view sample matrices with aligned optional ground-truth labels."""

    views: list[np.ndarray]
    labels: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.views:
            raise ValueError("dataset needs at least one view")
        self.views = [np.asarray(v, dtype=float) for v in self.views]
        n = self.views[0].shape[0]
        for h, v in enumerate(self.views):
            if v.ndim != 2:
                raise ValueError(f"view {h + 1} must be 2-D, got shape {v.shape}")
            if v.shape[0] != n:
                raise ValueError(
                    f"view {h + 1} has {v.shape[0]} rows, expected {n} (views must align)"
                )
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape != (n,):
                raise ValueError(f"labels shape {self.labels.shape} does not match n={n}")

    @property
    def n_samples(self) -> int:
        return self.views[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> list[int]:
        return [v.shape[1] for v in self.views]

    def subset(self, indices) -> "MultiViewDataset":
        """Row subset sharing this dataset's metadata (used for federated splits)."""
        idx = np.asarray(indices, dtype=int)
        return MultiViewDataset(
            views=[v[idx] for v in self.views],
            labels=None if self.labels is None else self.labels[idx],
            meta=dict(self.meta),
        )


@dataclass
class FederatedSplit:
    """Disjoint per-client row-index lists covering the whole dataset."""

    client_indices: list[np.ndarray]
    fractions: list[float]

    def __post_init__(self):
        self.client_indices = [np.asarray(ix, dtype=int) for ix in self.client_indices]

    @property
    def n_clients(self) -> int:
        return len(self.client_indices)


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips exactly
    return repr(float(x))


def save_dataset(dataset: MultiViewDataset, path: str) -> None:
    """Write a dataset directory; overwrites existing files in place."""
    os.makedirs(path, exist_ok=True)
    for h, view in enumerate(dataset.views, start=1):
        with open(os.path.join(path, f"view_{h}.csv"), "w") as f:
            for row in view:
                f.write(",".join(_fmt(v) for v in row))
                f.write("\n")
    if dataset.labels is not None:
        with open(os.path.join(path, "labels.csv"), "w") as f:
            for y in dataset.labels:
                f.write(f"{int(y)}\n")
    meta = dict(dataset.meta)
    meta.setdefault("format", FORMAT_VERSION)
    meta["n"] = dataset.n_samples
    meta["s"] = dataset.n_views
    meta["d_h"] = ",".join(str(d) for d in dataset.dims)
    with open(os.path.join(path, "meta"), "w") as f:
        for key in sorted(meta):
            f.write(f"{key} = {meta[key]}\n")


def load_dataset(path: str) -> MultiViewDataset:
    """Read a dataset directory written by :func:`save_dataset`."""
    meta_path = os.path.join(path, "meta")
    if not os.path.isfile(meta_path):
        raise ValueError(f"not a dataset directory (missing meta): {path}")
    meta: dict = {}
    with open(meta_path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    s = int(meta.get("s", 0))
    if s < 1:
        raise ValueError(f"meta file of {path} has invalid view count: {meta.get('s')!r}")
    views = []
    for h in range(1, s + 1):
        view_path = os.path.join(path, f"view_{h}.csv")
        if not os.path.isfile(view_path):
            raise ValueError(f"dataset directory {path} is missing view_{h}.csv")
        rows = []
        with open(view_path) as f:
            for line in f:
                rows.append([float(tok) for tok in line.strip().split(",")])
        views.append(np.asarray(rows, dtype=float))
    labels = None
    labels_path = os.path.join(path, "labels.csv")
    if os.path.isfile(labels_path):
        with open(labels_path) as f:
            labels = np.asarray([int(line.strip()) for line in f if line.strip()], dtype=int)
    # round-trip typed meta values where downstream code needs them
    for key in ("n", "c", "seed"):
        if key in meta:
            meta[key] = int(meta[key])
    return MultiViewDataset(views=views, labels=labels, meta=meta)
