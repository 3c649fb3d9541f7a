"""Centralized multi-view fuzzy clustering with heat-kernel distances.

Alternating minimization over the membership matrix U, per-view centers A
and view weights V. The U and V updates are exact minimizers of the
objective with the other blocks held fixed; the center update is one
fixed-point step (kernel weights are evaluated at the current centers).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import MultiViewDataset
from .kernel import DEFAULT_HKC_EPS, HKC_TYPES, compute_coeffs, kernel_distance_matrix

log = logging.getLogger("fedheat")

KMEANSPP = "kmeans++"
RANDOM = "random"
INIT_MODES = (KMEANSPP, RANDOM)

HEAT_KERNEL = "heat_kernel"
SQUARED_EUCLIDEAN = "squared_euclidean"
DISTANCE_MODES = (HEAT_KERNEL, SQUARED_EUCLIDEAN)


@dataclass
class ClusterConfig:
    """Hyperparameters for one solver run.

    The fuzzifier ``m`` and the view exponent ``alpha`` must both exceed 1;
    ``distance`` selects the kernel objective or the plain squared-Euclidean
    ablation baseline.
    """

    c: int
    m: float = 2.0
    alpha: float = 5.0
    epsilon: float = 1e-6
    t_max: int = 100
    seed: int = 0
    init: str = KMEANSPP
    hkc_type: str = "minmax"
    hkc_eps: float = DEFAULT_HKC_EPS
    recompute_hkc_per_iter: bool = False
    distance: str = HEAT_KERNEL

    def __post_init__(self):
        if self.c < 1:
            raise ValueError(f"cluster count must be >= 1, got {self.c}")
        if not self.m > 1:
            raise ValueError(f"fuzzifier m must be > 1, got {self.m}")
        if not self.alpha > 1:
            raise ValueError(f"view exponent alpha must be > 1, got {self.alpha}")
        if not self.epsilon > 0:
            raise ValueError(f"convergence threshold must be > 0, got {self.epsilon}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.hkc_type not in HKC_TYPES:
            raise ValueError(f"hkc_type must be one of {HKC_TYPES}, got {self.hkc_type!r}")
        if self.distance not in DISTANCE_MODES:
            raise ValueError(f"distance must be one of {DISTANCE_MODES}, got {self.distance!r}")


@dataclass
class ClusterModel:
    """Fitted model: row-stochastic memberships, per-view centers, simplex view weights."""

    memberships: np.ndarray
    centers: list[np.ndarray]
    weights: np.ndarray
    objective_history: list[float] = field(default_factory=list)
    iterations: int = 0
    diagnostics: list[str] = field(default_factory=list)

    @property
    def labels(self) -> np.ndarray:
        """Hard labels: argmax of each membership row, lowest index on ties."""
        return np.argmax(self.memberships, axis=1)


def dataset_coeffs(dataset: MultiViewDataset, config: ClusterConfig) -> list[np.ndarray]:
    """Heat-kernel coefficients for every view of a dataset."""
    return [compute_coeffs(v, config.hkc_type, config.hkc_eps) for v in dataset.views]


def distance_tensor(
    views: list[np.ndarray],
    centers: list[np.ndarray],
    coeffs: list[np.ndarray],
    mode: str = HEAT_KERNEL,
) -> list[np.ndarray]:
    """Per-view (n, c) dissimilarity matrices between samples and centers."""
    if not (len(views) == len(centers) == len(coeffs)):
        raise ValueError("views, centers and coeffs must have one entry per view")
    out = []
    for x, a, d in zip(views, centers, coeffs):
        if mode == HEAT_KERNEL:
            out.append(kernel_distance_matrix(x, a, d))
        else:
            diff = x[:, None, :] - a[None, :, :]
            out.append(np.einsum("ikj,ikj->ik", diff, diff))
    return out


def update_memberships(
    distances: list[np.ndarray], weights: np.ndarray, m: float, alpha: float
) -> np.ndarray:
    """Closed-form membership update for fixed centers and view weights.

    Memberships are proportional to the aggregated cross-view dissimilarity
    raised to -1/(m-1), computed in ratio form for numerical stability. Rows
    whose aggregated dissimilarity hits exactly zero are hard-assigned to the
    zero-dissimilarity clusters (split equally on ties), which is the usual
    fuzzy-c-means convention for the singularity of the negative power.
    """
    agg = np.zeros_like(distances[0])
    for h, dist in enumerate(distances):
        agg += (weights[h] ** alpha) * dist
    n, c = agg.shape
    u = np.empty_like(agg)
    exponent = 1.0 / (m - 1.0)
    zero_rows = (agg == 0.0).any(axis=1)
    if np.any(zero_rows):
        mask = agg[zero_rows] == 0.0
        u[zero_rows] = mask / mask.sum(axis=1, keepdims=True)
    ok = ~zero_rows
    if np.any(ok):
        # u_ik = 1 / sum_k' (D_ik / D_ik')^(1/(m-1)); ratios avoid overflow
        ratios = (agg[ok][:, :, None] / agg[ok][:, None, :]) ** exponent
        u[ok] = 1.0 / ratios.sum(axis=2)
    return u


def update_centers(
    views: list[np.ndarray],
    memberships: np.ndarray,
    weights: np.ndarray,
    distances: list[np.ndarray],
    current_centers: list[np.ndarray],
    m: float,
    alpha: float,
    mode: str = HEAT_KERNEL,
) -> tuple[list[np.ndarray], list[str]]:
    """One fixed-point step of the center update.

    Each new center is the weighted mean of samples with weights
    mu^m * exp(-weighted squared distance to the current center); the
    constant per-view factor v_h^alpha cancels in the ratio and is omitted
    so it cannot underflow the weights. ``distances`` must have been
    evaluated at ``current_centers``. An all-zero weight column keeps the
    previous center and is reported as a degenerate cluster.
    """
    um = memberships**m
    new_centers = []
    diagnostics: list[str] = []
    for h, x in enumerate(views):
        if mode == HEAT_KERNEL:
            w = um * (1.0 - distances[h])  # (n, c) kernel similarity weights
        else:
            w = um
        den = w.sum(axis=0)
        num = w.T @ x
        dead = den == 0.0
        if np.any(dead):
            for k in np.flatnonzero(dead):
                diagnostics.append(f"degenerate cluster {k} in view {h + 1}: zero total weight")
            den = np.where(dead, 1.0, den)
            new = num / den[:, None]
            new[dead] = current_centers[h][dead]
        else:
            new = num / den[:, None]
        new_centers.append(new)
    return new_centers, diagnostics


def update_view_weights(
    distances: list[np.ndarray], memberships: np.ndarray, m: float, alpha: float
) -> np.ndarray:
    """Closed-form view-weight update: v_h proportional to cost_h^(-1/(alpha-1)).

    A view with exactly zero cost would make the negative power diverge; in
    that case the unit weight is split equally among the zero-cost views.
    """
    um = memberships**m
    costs = np.array([float(np.sum(um * dist)) for dist in distances])
    if np.any(costs == 0.0):
        v = (costs == 0.0).astype(float)
        return v / v.sum()
    ratios = (costs[:, None] / costs[None, :]) ** (1.0 / (alpha - 1.0))
    return 1.0 / ratios.sum(axis=1)


def objective(
    distances: list[np.ndarray],
    memberships: np.ndarray,
    weights: np.ndarray,
    m: float,
    alpha: float,
) -> float:
    """Weighted cross-view clustering cost sum_h v_h^alpha sum_ik mu_ik^m d_ik^h."""
    um = memberships**m
    total = 0.0
    for h, dist in enumerate(distances):
        total += (weights[h] ** alpha) * float(np.sum(um * dist))
    return float(total)


def init_centers(dataset: MultiViewDataset, config: ClusterConfig) -> list[np.ndarray]:
    """Seeded center initialization.

    Both modes pick c sample row indices shared across views, so a cluster
    starts from the same underlying sample in every view; independent
    per-view picks would let one cluster start on different ground-truth
    groups in different views, which the unified membership matrix cannot
    reconcile. The k-means++ D^2 weighting runs on the feature concatenation
    of all views.
    """
    n = dataset.n_samples
    if config.c > n:
        raise ValueError(f"cluster count {config.c} exceeds sample count {n}")
    rng = np.random.default_rng(config.seed)
    if config.init == RANDOM:
        idx = rng.choice(n, size=config.c, replace=False)
    else:
        idx = _kmeanspp_indices(dataset.views, config.c, rng)
    return [v[idx].copy() for v in dataset.views]


def _point_d2(views: list[np.ndarray], idx: int) -> np.ndarray:
    d2 = np.zeros(views[0].shape[0])
    for x in views:
        d2 += np.sum((x - x[idx]) ** 2, axis=1)
    return d2


def _kmeanspp_indices(views: list[np.ndarray], c: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++ seeding (several D^2-sampled candidates per step,
    keep the one minimizing the resulting potential), the variant standard
    libraries ship. Plain single-candidate sampling re-picks inside wide
    clusters often enough to orphan a ground-truth group."""
    n = views[0].shape[0]
    # a generous candidate count: shapes here can be as wide as the gaps
    # between them, and splitting one must stay cheaper than covering it
    n_trials = max(8, 2 + int(np.log(c)))
    chosen = np.empty(c, dtype=int)
    chosen[0] = int(rng.integers(n))
    d2 = _point_d2(views, chosen[0])
    for k in range(1, c):
        total = d2.sum()
        if total <= 0:
            # all remaining mass is on already-chosen duplicates
            remaining = np.setdiff1d(np.arange(n), chosen[:k])
            chosen[k] = int(rng.choice(remaining))
            d2 = np.minimum(d2, _point_d2(views, chosen[k]))
            continue
        cumulative = np.cumsum(d2 / total)
        candidates = np.searchsorted(cumulative, rng.random(n_trials), side="right")
        best_idx, best_d2, best_pot = -1, None, np.inf
        for cand in candidates:
            cand_d2 = np.minimum(d2, _point_d2(views, int(cand)))
            pot = cand_d2.sum()
            if pot < best_pot:
                best_idx, best_d2, best_pot = int(cand), cand_d2, pot
        chosen[k] = best_idx
        d2 = best_d2
    return chosen


def iterate_once(
    views: list[np.ndarray],
    coeffs: list[np.ndarray],
    centers: list[np.ndarray],
    weights: np.ndarray,
    distances: list[np.ndarray],
    m: float,
    alpha: float,
    mode: str = HEAT_KERNEL,
):
    """One full U -> A -> V update round.

    ``distances`` must match ``centers``. Returns the new state together
    with the distances at the new centers and the objective value, so the
    caller can chain iterations without recomputation.
    """
    u = update_memberships(distances, weights, m, alpha)
    centers, diags = update_centers(views, u, weights, distances, centers, m, alpha, mode)
    distances = distance_tensor(views, centers, coeffs, mode)
    weights = update_view_weights(distances, u, m, alpha)
    j = objective(distances, u, weights, m, alpha)
    return u, centers, weights, distances, j, diags


def fit(dataset: MultiViewDataset, config: ClusterConfig) -> ClusterModel:
    """Run the alternating solver until |dJ| < epsilon or t_max iterations.

    Deterministic for a fixed config: all randomness flows from the config
    seed through center initialization.
    """
    for h, v in enumerate(dataset.views):
        if not np.all(np.isfinite(v)):
            raise ValueError(f"view {h + 1} contains non-finite values")
    coeffs = dataset_coeffs(dataset, config)
    centers = init_centers(dataset, config)
    weights = np.full(dataset.n_views, 1.0 / dataset.n_views)
    distances = distance_tensor(dataset.views, centers, coeffs, config.distance)
    memberships = None
    history: list[float] = []
    diagnostics: list[str] = []
    j_prev = None
    iterations = 0
    for t in range(1, config.t_max + 1):
        if config.recompute_hkc_per_iter and t > 1:
            coeffs = dataset_coeffs(dataset, config)
            distances = distance_tensor(dataset.views, centers, coeffs, config.distance)
        memberships, centers, weights, distances, j, diags = iterate_once(
            dataset.views, coeffs, centers, weights, distances,
            config.m, config.alpha, config.distance,
        )
        diagnostics.extend(diags)
        history.append(j)
        iterations = t
        log.debug("iteration %d: objective %.6g", t, j)
        if j_prev is not None and abs(j - j_prev) < config.epsilon:
            break
        j_prev = j
    return ClusterModel(
        memberships=memberships,
        centers=centers,
        weights=weights,
        objective_history=history,
        iterations=iterations,
        diagnostics=diagnostics,
    )


def per_view_labels(
    dataset: MultiViewDataset,
    model: ClusterModel,
    coeffs: list[np.ndarray] | None = None,
    config: ClusterConfig | None = None,
) -> list[np.ndarray]:
    """Single-view hard labels: nearest center by that view's kernel distance."""
    mode = config.distance if config is not None else HEAT_KERNEL
    if coeffs is None:
        cfg = config or ClusterConfig(c=model.centers[0].shape[0])
        coeffs = dataset_coeffs(dataset, cfg)
    distances = distance_tensor(dataset.views, model.centers, coeffs, mode)
    return [np.argmin(d, axis=1) for d in distances]
