"""Clustering quality metrics with assignment-based label matching.

Cluster labels coming out of a fuzzy solver are arbitrary, so accuracy is
maximized over label bijections. Entropies use natural log (the NMI
normalization cancels the base). Internal indices (silhouette, CH) operate
on the concatenation of all views with plain Euclidean distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist


@dataclass
class MetricReport:
    """Metric values, each either present or absent with a recorded reason."""

    accuracy: float | None = None
    nmi: float | None = None
    ari: float | None = None
    silhouette: float | None = None
    calinski_harabasz: float | None = None
    view_consensus: float | None = None
    cross_view_stability_artifact: float | None = None
    notes: dict[str, str] = field(default_factory=dict)

    FIELDS = (
        "accuracy",
        "nmi",
        "ari",
        "silhouette",
        "calinski_harabasz",
        "view_consensus",
        "cross_view_stability_artifact",
    )

    def lines(self, prefix: str = "metric.") -> list[str]:
        out = []
        for name in self.FIELDS:
            value = getattr(self, name)
            if value is None:
                reason = self.notes.get(name, "not computed")
                out.append(f"{prefix}{name}: absent ({reason})")
            else:
                out.append(f"{prefix}{name}: {value!r}")
        return out


def _as_labels(a, name="labels") -> np.ndarray:
    arr = np.asarray(a, dtype=int)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    return arr


def _check_pair(pred, truth):
    p = _as_labels(pred, "predictions")
    t = _as_labels(truth, "truth")
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: predictions {p.shape[0]} vs truth {t.shape[0]}")
    return p, t


def contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Joint count table with one row per label of a, one column per label of b."""
    size = (int(a.max()) + 1, int(b.max()) + 1)
    table = np.zeros(size, dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def confusion_matrix(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    """Count matrix (truth rows, prediction columns) plus its row-normalized form."""
    p, t = _check_pair(pred, truth)
    counts = contingency(t, p)
    row_sums = counts.sum(axis=1, keepdims=True)
    normalized = np.divide(counts, row_sums, out=np.zeros_like(counts, dtype=float), where=row_sums > 0)
    return counts, normalized


def accuracy_matched(pred, truth) -> float:
    """Best agreement over cluster-label bijections (assignment on the confusion table)."""
    p, t = _check_pair(pred, truth)
    counts = contingency(t, p)
    c = max(counts.shape)
    padded = np.zeros((c, c), dtype=np.int64)
    padded[: counts.shape[0], : counts.shape[1]] = counts
    rows, cols = linear_sum_assignment(-padded)
    return float(padded[rows, cols].sum()) / p.size


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(a, b) -> float:
    """Mutual information normalized by the arithmetic mean of the entropies."""
    x, y = _check_pair(a, b)
    table = contingency(x, y)
    n = table.sum()
    hx = _entropy(table.sum(axis=1))
    hy = _entropy(table.sum(axis=0))
    if hx == 0.0 and hy == 0.0:
        return 1.0  # both partitions are single clusters, hence identical
    px = table.sum(axis=1) / n
    py = table.sum(axis=0) / n
    mi = 0.0
    for i, j in zip(*np.nonzero(table)):
        pij = table[i, j] / n
        mi += pij * np.log(pij / (px[i] * py[j]))
    return float(2.0 * mi / (hx + hy))


def ari(a, b) -> float:
    """Pair-counting Rand index, adjusted for chance."""
    x, y = _check_pair(a, b)
    table = contingency(x, y)
    n = table.sum()

    def comb2(v):
        return v * (v - 1) / 2.0

    sum_ij = comb2(table.astype(float)).sum()
    sum_a = comb2(table.sum(axis=1).astype(float)).sum()
    sum_b = comb2(table.sum(axis=0).astype(float)).sum()
    total = comb2(float(n))
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        return 1.0  # degenerate: both partitions trivial and identical
    return float((sum_ij - expected) / (maximum - expected))


def silhouette(features: np.ndarray, labels) -> float:
    """Mean silhouette over samples; singleton clusters contribute 0 by convention."""
    x = np.asarray(features, dtype=float)
    y = _as_labels(labels)
    if x.shape[0] != y.shape[0]:
        raise ValueError("features and labels must have the same length")
    values = np.unique(y)
    if values.size < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    dists = cdist(x, x)
    n = x.shape[0]
    scores = np.zeros(n)
    masks = {v: y == v for v in values}
    sizes = {v: int(masks[v].sum()) for v in values}
    for i in range(n):
        own = y[i]
        if sizes[own] == 1:
            scores[i] = 0.0
            continue
        a_i = dists[i, masks[own]].sum() / (sizes[own] - 1)
        b_i = min(dists[i, masks[v]].mean() for v in values if v != own)
        denom = max(a_i, b_i)
        scores[i] = 0.0 if denom == 0 else (b_i - a_i) / denom
    return float(scores.mean())


def calinski_harabasz(features: np.ndarray, labels) -> float:
    """Between/within dispersion ratio: (SSB/(c-1)) / (SSW/(n-c))."""
    x = np.asarray(features, dtype=float)
    y = _as_labels(labels)
    values = np.unique(y)
    c = values.size
    n = x.shape[0]
    if c < 2:
        raise ValueError("calinski-harabasz needs at least 2 clusters")
    if n <= c:
        raise ValueError("needs more samples than clusters")
    overall = x.mean(axis=0)
    ssw = 0.0
    ssb = 0.0
    for v in values:
        grp = x[y == v]
        mean = grp.mean(axis=0)
        ssw += float(np.sum((grp - mean) ** 2))
        ssb += grp.shape[0] * float(np.sum((mean - overall) ** 2))
    if ssw == 0.0:
        raise ValueError("degenerate clustering: zero within-cluster dispersion")
    return float((ssb / (c - 1)) / (ssw / (n - c)))


def view_consensus(global_labels, per_view_labels: list) -> float:
    """Mean agreement (NMI) between the cross-view labels and each single view's."""
    if not per_view_labels:
        raise ValueError("need at least one view's labels")
    return float(np.mean([nmi(global_labels, lv) for lv in per_view_labels]))


def cross_view_stability(per_view_labels: list, c: int) -> float:
    """Frequency-based stability score across views.

    One minus the mean pairwise L2 distance between the views' cluster-size
    frequency vectors. A single view has nothing to disagree with and scores 1.
    """
    if not per_view_labels:
        raise ValueError("need at least one view's labels")
    freqs = []
    for lv in per_view_labels:
        y = _as_labels(lv)
        counts = np.bincount(y, minlength=c).astype(float)
        freqs.append(counts / counts.sum())
    if len(freqs) == 1:
        return 1.0
    dists = []
    for i in range(len(freqs)):
        for j in range(i + 1, len(freqs)):
            dists.append(float(np.linalg.norm(freqs[i] - freqs[j])))
    return 1.0 - float(np.mean(dists))


def full_report(
    pred,
    truth=None,
    features: np.ndarray | None = None,
    per_view: list | None = None,
    c: int | None = None,
) -> MetricReport:
    """Compute every metric the inputs allow, recording reasons for the rest."""
    report = MetricReport()
    p = _as_labels(pred, "predictions")
    if truth is not None:
        report.accuracy = accuracy_matched(p, truth)
        report.nmi = nmi(p, truth)
        report.ari = ari(p, truth)
    else:
        for name in ("accuracy", "nmi", "ari"):
            report.notes[name] = "no ground-truth labels"
    if features is not None:
        try:
            report.silhouette = silhouette(features, p)
        except ValueError as exc:
            report.notes["silhouette"] = str(exc)
        try:
            report.calinski_harabasz = calinski_harabasz(features, p)
        except ValueError as exc:
            report.notes["calinski_harabasz"] = str(exc)
    else:
        report.notes["silhouette"] = "no feature data"
        report.notes["calinski_harabasz"] = "no feature data"
    if per_view:
        report.view_consensus = view_consensus(p, per_view)
        report.cross_view_stability_artifact = cross_view_stability(
            per_view, c if c is not None else int(p.max()) + 1
        )
    else:
        report.notes["view_consensus"] = "no per-view labels"
        report.notes["cross_view_stability_artifact"] = "no per-view labels"
    return report
