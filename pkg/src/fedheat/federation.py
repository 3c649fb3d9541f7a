"""Deterministic in-process simulation of the federated clustering protocol.

One coordinator plays both server roles (aggregation and distribution).
Clients train locally with the centralized update machinery on their own
data and kernel coefficients; the server only ever sees model parameters
and summary statistics, never raw rows. All aggregation reductions run in
client-id order so results are independent of execution order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import chi2

from .dataset import MultiViewDataset
from .kernel import compute_coeffs
from .privacy import PrivacyConfig, budget_schedule, dp_noise_centers, dp_noise_view_weights, secure_sum
from .solver import ClusterConfig, distance_tensor, init_centers, iterate_once, objective

log = logging.getLogger("fedheat")

WEIGHTED = "weighted"
MEDIAN = "median"
FEDAVG = "fedavg"
AGGREGATIONS = (WEIGHTED, MEDIAN, FEDAVG)

BY_SAMPLES = "samples"
BY_QUALITY = "quality"
WEIGHTINGS = (BY_SAMPLES, BY_QUALITY)

STATIC = "static"
ADAPTIVE = "adaptive"
PERSONALIZATION_MODES = (STATIC, ADAPTIVE)

ROUND_HEADER_BYTES = 32
FLOAT_BYTES = 8

# normalization is skipped inside this tolerance so vectors that are already
# analytically on the simplex pass through bitwise unchanged
_SIMPLEX_TOL = 1e-12


class CertificationError(ValueError):
    """Raised when the federation's input data fails quality certification."""


@dataclass
class FedConfig:
    """Protocol parameters wrapping the shared local-solver configuration."""

    cluster: ClusterConfig
    rounds: int = 10
    local_iters: int = 50
    aggregation: str = WEIGHTED
    client_weighting: str = BY_SAMPLES
    epsilon_conv: float = 1e-4
    gamma: float = 0.5
    rho: float = 0.5
    personalization: str = STATIC
    privacy: PrivacyConfig = field(default_factory=PrivacyConfig)

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.local_iters < 0:
            raise ValueError(f"local_iters must be >= 0, got {self.local_iters}")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}, got {self.aggregation!r}")
        if self.client_weighting not in WEIGHTINGS:
            raise ValueError(f"client_weighting must be one of {WEIGHTINGS}")
        if not self.epsilon_conv > 0:
            raise ValueError(f"epsilon_conv must be > 0, got {self.epsilon_conv}")
        for name, value in (("gamma", self.gamma), ("rho", self.rho)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.personalization not in PERSONALIZATION_MODES:
            raise ValueError(f"personalization must be one of {PERSONALIZATION_MODES}")


@dataclass
class ClientState:
    """One simulated participant: local data, coefficients and local model."""

    client_id: int
    dataset: MultiViewDataset
    coeffs: list[np.ndarray]
    centers: list[np.ndarray]
    weights: np.ndarray
    memberships: np.ndarray | None = None
    gamma: float = 0.5
    rho: float = 0.5
    objective_history: list[float] = field(default_factory=list)
    last_objective: float | None = None
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return self.dataset.n_samples


@dataclass
class ClientStats:
    """What a client shares with the server each round (never raw rows)."""

    client_id: int
    n_samples: int
    quality: np.ndarray            # per-cluster mean membership
    mean_max_membership: float     # confidence summary used for quality weighting
    centers: list[np.ndarray]
    weights: np.ndarray
    feature_means: list[np.ndarray]
    feature_vars: list[np.ndarray]
    local_objective: float


@dataclass
class GlobalModel:
    """Server-side aggregate shared with every client."""

    centers: list[np.ndarray]
    weights: np.ndarray
    round_index: int = 0
    feature_means: list[np.ndarray] | None = None
    feature_vars: list[np.ndarray] | None = None


@dataclass
class FederationResult:
    global_model: GlobalModel
    clients: list[ClientState]
    round_log: list[dict]
    converged_round: int | None
    certification: dict | None = None


def renormalize_simplex(v: np.ndarray) -> np.ndarray:
    """Project a nonnegative vector back onto the simplex by rescaling.

    Vectors already summing to one within machine tolerance are returned
    unchanged so analytically normalized updates stay bitwise stable.
    """
    total = float(v.sum())
    if total <= 0:
        return np.full_like(v, 1.0 / v.shape[0])
    if abs(total - 1.0) <= _SIMPLEX_TOL:
        return v
    return v / total


# ---------------------------------------------------------------------------
# data preparation and certification


def prepare_and_validate(
    datasets: list[MultiViewDataset],
    clusters_per_client: list[int],
    eta_min: float = 0.95,
    xi_min: float = 0.90,
) -> tuple[list[MultiViewDataset], dict]:
    """Certify raw client datasets for federation.

    Checks sample sufficiency (n >= 10c), dimensional consistency within and
    across clients, per-view completeness (fraction of fully observed rows,
    before imputation), and flags Mahalanobis outliers beyond the 0.999
    chi-square quantile. Missing entries are imputed by column means when a
    view's missing fraction is below 5%. Raises CertificationError listing
    the offending clients when any hard check or global threshold fails.
    """
    if len(datasets) < 2:
        raise CertificationError("certification requires at least 2 clients")
    if len(clusters_per_client) != len(datasets):
        raise CertificationError("need one cluster count per client")
    failures: list[str] = []
    s_ref = datasets[0].n_views
    dims_ref = datasets[0].dims
    certified: list[MultiViewDataset] = []
    completeness: list[list[float]] = []
    outlier_counts: list[int] = []
    for idx, (ds, c) in enumerate(zip(datasets, clusters_per_client), start=1):
        n = ds.n_samples
        if n < 10 * c:
            failures.append(f"client {idx}: {n} samples < 10*c = {10 * c}")
        if ds.n_views != s_ref:
            failures.append(f"client {idx}: has {ds.n_views} views, expected {s_ref}")
        elif ds.dims != dims_ref:
            failures.append(f"client {idx}: view widths {ds.dims} != {dims_ref}")
        etas = []
        views = []
        n_outliers = 0
        for h, view in enumerate(ds.views, start=1):
            x = np.array(view, dtype=float)
            if np.any(np.isinf(x)):
                failures.append(f"client {idx} view {h}: infinite values")
                views.append(x)
                etas.append(0.0)
                continue
            missing = np.isnan(x)
            etas.append(float(np.mean(~missing.any(axis=1))))
            if missing.any():
                frac = float(missing.mean())
                if frac < 0.05:
                    col_means = np.nanmean(x, axis=0)
                    x = np.where(missing, col_means, x)
                else:
                    failures.append(
                        f"client {idx} view {h}: {frac:.1%} entries missing (>= 5% threshold)"
                    )
            if not np.isnan(x).any() and x.shape[0] > x.shape[1]:
                n_outliers += int(np.sum(_mahalanobis_sq(x) > chi2.ppf(0.999, df=x.shape[1])))
            views.append(x)
        completeness.append(etas)
        outlier_counts.append(n_outliers)
        certified.append(MultiViewDataset(views=views, labels=ds.labels, meta=dict(ds.meta)))
    if failures:
        raise CertificationError("certification failed: " + "; ".join(failures))
    eta_global = float(np.mean([np.mean(etas) for etas in completeness]))
    xi_global = _consistency_score(certified)
    if eta_global < eta_min:
        raise CertificationError(
            f"global completeness {eta_global:.4f} below threshold {eta_min}"
        )
    if xi_global < xi_min:
        raise CertificationError(
            f"global consistency {xi_global:.4f} below threshold {xi_min}"
        )
    metadata = {
        "n_clients": len(datasets),
        "samples": [ds.n_samples for ds in datasets],
        "views": [ds.n_views for ds in datasets],
        "clusters": list(clusters_per_client),
        "eta_global": eta_global,
        "xi_global": xi_global,
        "completeness": completeness,
        "outlier_flags": outlier_counts,
    }
    return certified, metadata


def _mahalanobis_sq(x: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=0)
    centered = x - mu
    cov = np.cov(x, rowvar=False)
    cov = np.atleast_2d(cov) + 1e-9 * np.eye(x.shape[1])
    inv = np.linalg.inv(cov)
    return np.einsum("ij,jk,ik->i", centered, inv, centered)


def _consistency_score(datasets: list[MultiViewDataset]) -> float:
    """Minimum over views of the mean pairwise correlation of per-feature
    means across clients; an interpretation of inter-client consistency for
    same-feature views (single-feature views count as perfectly aligned)."""
    scores = []
    for h in range(datasets[0].n_views):
        means = [ds.views[h].mean(axis=0) for ds in datasets]
        pair_scores = []
        for i in range(len(means)):
            for j in range(i + 1, len(means)):
                pair_scores.append(_pearson(means[i], means[j]))
        scores.append(float(np.mean(pair_scores)))
    return float(min(scores))


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if a.size < 2:
        return 1.0
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return 1.0 if np.allclose(a - a.mean(), b - b.mean()) else 0.0
    return float(np.corrcoef(a, b)[0, 1])


# ---------------------------------------------------------------------------
# initialization and local rounds


def init_federation(
    datasets: list[MultiViewDataset], config: FedConfig
) -> tuple[GlobalModel, list[ClientState]]:
    """Build the initial global model and per-client states.

    The global centers are seeded by the shared init routine on the
    coordinator-held concatenation of client views (the simulation
    coordinator owns all rows anyway); client ``l`` seeds its local centers
    with sub-seed ``seed + l`` (ids are 1-based so no client collides with
    the server stream).
    """
    if not datasets:
        raise ValueError("at least one client dataset required")
    s = datasets[0].n_views
    dims = datasets[0].dims
    for idx, ds in enumerate(datasets[1:], start=2):
        if ds.n_views != s or ds.dims != dims:
            raise ValueError(f"client {idx} view shapes {ds.dims} do not match client 1 {dims}")
    pooled = MultiViewDataset(
        views=[np.concatenate([ds.views[h] for ds in datasets], axis=0) for h in range(s)]
    )
    global_model = GlobalModel(
        centers=init_centers(pooled, config.cluster),
        weights=np.full(s, 1.0 / s),
        round_index=0,
    )
    clients = []
    for idx, ds in enumerate(datasets, start=1):
        local_cfg = ClusterConfig(
            c=config.cluster.c,
            m=config.cluster.m,
            alpha=config.cluster.alpha,
            epsilon=config.cluster.epsilon,
            t_max=config.cluster.t_max,
            seed=config.cluster.seed + idx,
            init=config.cluster.init,
            hkc_type=config.cluster.hkc_type,
            hkc_eps=config.cluster.hkc_eps,
            recompute_hkc_per_iter=config.cluster.recompute_hkc_per_iter,
            distance=config.cluster.distance,
        )
        clients.append(
            ClientState(
                client_id=idx,
                dataset=ds,
                coeffs=[compute_coeffs(v, local_cfg.hkc_type, local_cfg.hkc_eps) for v in ds.views],
                centers=init_centers(ds, local_cfg),
                weights=np.full(ds.n_views, 1.0 / ds.n_views),
                gamma=config.gamma,
                rho=config.rho,
            )
        )
    return global_model, clients


def client_round(
    state: ClientState,
    global_model: GlobalModel,
    local_iters: int,
    config: FedConfig,
    privacy_rng: np.random.Generator | None = None,
    eps_t: float | None = None,
) -> ClientStats:
    """One client's work for a round: blend, local training, statistics.

    The client re-initializes from the convex blend of global and local
    parameters, runs ``local_iters`` alternating updates on its own data,
    and returns share-ready statistics. When differential privacy is active
    the shared copies of centers and view weights are noised; the client's
    retained local model stays clean.
    """
    cluster = config.cluster
    # the blend averages cluster k of the global model with cluster k of the
    # local one, which is only meaningful after matching identities; without
    # this the round-0 blend of two independently seeded center sets tears
    # clusters apart exactly like unaligned aggregation would
    perm = align_clusters(state.centers, global_model.centers)
    if not np.array_equal(perm, np.arange(perm.shape[0])):
        state.centers = [a[perm] for a in state.centers]
        if state.memberships is not None:
            state.memberships = state.memberships[:, perm]
    state.centers = [
        state.gamma * g + (1.0 - state.gamma) * a
        for g, a in zip(global_model.centers, state.centers)
    ]
    state.weights = renormalize_simplex(
        state.rho * global_model.weights + (1.0 - state.rho) * state.weights
    )
    views = state.dataset.views
    if local_iters > 0:
        coeffs = state.coeffs
        distances = distance_tensor(views, state.centers, coeffs, cluster.distance)
        for _ in range(local_iters):
            if cluster.recompute_hkc_per_iter:
                coeffs = [compute_coeffs(v, cluster.hkc_type, cluster.hkc_eps) for v in views]
                distances = distance_tensor(views, state.centers, coeffs, cluster.distance)
            state.memberships, state.centers, state.weights, distances, j, diags = iterate_once(
                views, coeffs, state.centers, state.weights, distances,
                cluster.m, cluster.alpha, cluster.distance,
            )
            state.objective_history.append(j)
            state.diagnostics.extend(diags)
        local_j = state.objective_history[-1]
    elif state.memberships is not None:
        distances = distance_tensor(views, state.centers, state.coeffs, cluster.distance)
        local_j = objective(distances, state.memberships, state.weights, cluster.m, cluster.alpha)
    else:
        local_j = float("nan")
    shared_centers = [a.copy() for a in state.centers]
    shared_weights = state.weights.copy()
    if config.privacy.enabled:
        if privacy_rng is None or eps_t is None:
            raise ValueError("privacy enabled but no rng/budget supplied")
        shared_centers = dp_noise_centers(
            shared_centers, eps_t, config.privacy.delta, config.privacy.sensitivity, privacy_rng
        )
        shared_weights = dp_noise_view_weights(
            shared_weights, eps_t, config.privacy.delta, state.n_samples, privacy_rng
        )
    if state.memberships is not None:
        quality = state.memberships.mean(axis=0)
        mean_max = float(state.memberships.max(axis=1).mean())
    else:
        quality = np.full(cluster.c, 1.0 / cluster.c)
        mean_max = 1.0 / cluster.c
    return ClientStats(
        client_id=state.client_id,
        n_samples=state.n_samples,
        quality=quality,
        mean_max_membership=mean_max,
        centers=shared_centers,
        weights=shared_weights,
        feature_means=[v.mean(axis=0) for v in views],
        feature_vars=[v.var(axis=0) for v in views],
        local_objective=local_j,
    )


# ---------------------------------------------------------------------------
# alignment and aggregation


def align_clusters(
    local_centers: list[np.ndarray], reference_centers: list[np.ndarray]
) -> np.ndarray:
    """Permutation mapping reference cluster slots to local cluster indices.

    Minimum-total-squared-distance assignment between center rows, with the
    per-view squared distances summed across views. Averaging cluster k
    across clients is meaningless unless every client means the same thing
    by k, and labels coming out of independent local training are arbitrary.
    """
    c_local = local_centers[0].shape[0]
    c_ref = reference_centers[0].shape[0]
    if c_local != c_ref:
        raise ValueError(
            f"cannot align models with different cluster counts ({c_local} vs {c_ref})"
        )
    cost = np.zeros((c_ref, c_local))
    for ref, loc in zip(reference_centers, local_centers):
        diff = ref[:, None, :] - loc[None, :, :]
        cost += np.sum(diff * diff, axis=2)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(c_ref, dtype=int)
    perm[rows] = cols
    return perm


def apply_alignment(stats: ClientStats, state: ClientState, perm: np.ndarray) -> None:
    """Reorder a client's shared statistics and retained state to reference order."""
    identity = np.array_equal(perm, np.arange(perm.shape[0]))
    if identity:
        return
    stats.quality = stats.quality[perm]
    stats.centers = [a[perm] for a in stats.centers]
    state.centers = [a[perm] for a in state.centers]
    if state.memberships is not None:
        state.memberships = state.memberships[:, perm]


def compute_client_weights(stats_list: list[ClientStats], mode: str = BY_SAMPLES) -> np.ndarray:
    """Aggregation weights per client, in client-id order."""
    ordered = sorted(stats_list, key=lambda s: s.client_id)
    if mode == BY_SAMPLES:
        counts = np.array([s.n_samples for s in ordered], dtype=float)
        return counts / counts.sum()
    if mode == BY_QUALITY:
        scores = np.array([s.mean_max_membership for s in ordered], dtype=float)
        if scores.sum() <= 0:
            return np.full(len(ordered), 1.0 / len(ordered))
        return scores / scores.sum()
    raise ValueError(f"unknown client weighting {mode!r}")


def aggregate_weighted(
    stats_list: list[ClientStats],
    client_weights: np.ndarray,
    round_index: int = 0,
    privacy: PrivacyConfig | None = None,
    mask_seed: int = 0,
) -> GlobalModel:
    """Convex combination of client models, reduced in client-id order.

    With ``privacy.secure_sum`` enabled the weighted contributions travel as
    masked fixed-point shares and the server only unmasks their sum.
    """
    ordered = sorted(stats_list, key=lambda s: s.client_id)
    if len(client_weights) != len(ordered):
        raise ValueError("one weight per client required")
    shapes = [a.shape for a in ordered[0].centers]
    for stats in ordered[1:]:
        if [a.shape for a in stats.centers] != shapes:
            raise ValueError("aggregation requires dimension-aligned client models")
    if privacy is not None and privacy.enabled and privacy.secure_sum:
        flat = [
            np.concatenate([a.ravel() for a in s.centers] + [s.weights])
            for s in ordered
        ]
        contributions = [w * f for w, f in zip(client_weights, flat)]
        total = secure_sum(
            contributions,
            [s.client_id for s in ordered],
            seed=mask_seed,
            scale=privacy.fixed_point_scale,
        )
        centers = []
        offset = 0
        for shape in shapes:
            size = int(np.prod(shape))
            centers.append(total[offset : offset + size].reshape(shape))
            offset += size
        weights = total[offset:]
    else:
        centers = [np.zeros(shape) for shape in shapes]
        weights = np.zeros_like(ordered[0].weights)
        for w, stats in zip(client_weights, ordered):
            for h, a in enumerate(stats.centers):
                centers[h] = centers[h] + w * a
            weights = weights + w * stats.weights
    return GlobalModel(
        centers=centers,
        weights=renormalize_simplex(np.clip(weights, 0.0, None)),
        round_index=round_index,
    )


def aggregate_median(stats_list: list[ClientStats], round_index: int = 0) -> GlobalModel:
    """Elementwise median of client models; lower median on even counts.

    The lower-median convention keeps every aggregated coordinate equal to a
    value some client actually reported, which is the robustness point of
    median aggregation.
    """
    ordered = sorted(stats_list, key=lambda s: s.client_id)
    k = (len(ordered) - 1) // 2
    centers = []
    for h in range(len(ordered[0].centers)):
        stack = np.stack([s.centers[h] for s in ordered], axis=0)
        centers.append(np.sort(stack, axis=0)[k])
    weights = np.sort(np.stack([s.weights for s in ordered], axis=0), axis=0)[k]
    return GlobalModel(
        centers=centers,
        weights=renormalize_simplex(np.clip(weights, 0.0, None)),
        round_index=round_index,
    )


def aggregate_fedavg(stats_list: list[ClientStats], round_index: int = 0) -> GlobalModel:
    """Unweighted averaging: weighted aggregation with uniform weights."""
    uniform = np.full(len(stats_list), 1.0 / len(stats_list))
    return aggregate_weighted(stats_list, uniform, round_index)


def aggregate_feature_stats(
    stats_list: list[ClientStats],
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Unweighted client means of the per-view feature means and variances.

    Exactly the shared-statistics aggregation rule: when clients hold
    different sample counts this is *not* the pooled mean/variance.
    """
    ordered = sorted(stats_list, key=lambda s: s.client_id)
    n_views = len(ordered[0].feature_means)
    means = []
    variances = []
    for h in range(n_views):
        means.append(np.mean([s.feature_means[h] for s in ordered], axis=0))
        variances.append(np.mean([s.feature_vars[h] for s in ordered], axis=0))
    return means, variances


def check_convergence(prev: GlobalModel, new: GlobalModel, eps: float) -> bool:
    """Strictly-below-threshold movement of both centers (Frobenius) and weights (L2)."""
    center_sq = 0.0
    for a_prev, a_new in zip(prev.centers, new.centers):
        center_sq += float(np.sum((a_new - a_prev) ** 2))
    center_change = np.sqrt(center_sq)
    weight_change = float(np.linalg.norm(new.weights - prev.weights))
    return center_change < eps and weight_change < eps


def payload_bytes(c: int, dims: list[int], include_stats: bool = True) -> int:
    """Deterministic per-message byte accounting for one client's upload.

    8 bytes per float: centers (sum_h c*d_h), view weights (s), optional
    statistics block (quality c + centers sum_h c*d_h + views s), plus a
    fixed 32-byte round header. Independent of the client's sample count:
    only model parameters travel.
    """
    center_floats = c * int(np.sum(dims))
    s = len(dims)
    total = ROUND_HEADER_BYTES + FLOAT_BYTES * (center_floats + s)
    if include_stats:
        total += FLOAT_BYTES * (c + center_floats + s)
    return total


# ---------------------------------------------------------------------------
# main loop


def run_federation(datasets: list[MultiViewDataset], config: FedConfig) -> FederationResult:
    """Execute the full protocol: broadcast, local rounds, align, aggregate.

    Returns the final global model, per-client states (with memberships),
    and one log record per round with client objectives, payload bytes and
    the convergence flag. Early-stops once the global model moves less than
    ``epsilon_conv`` between rounds.
    """
    global_model, clients = init_federation(datasets, config)
    privacy = config.privacy
    schedule = None
    privacy_rng = None
    if privacy.enabled:
        schedule = budget_schedule(privacy.epsilon_total, config.rounds, privacy.schedule)
        privacy_rng = np.random.default_rng([config.cluster.seed, 987654321])
    round_log: list[dict] = []
    converged_round = None
    per_client_payload = payload_bytes(config.cluster.c, datasets[0].dims)
    for t in range(config.rounds):
        eps_t = schedule[t] if schedule is not None else None
        stats_list = []
        for state in clients:
            stats_list.append(
                client_round(state, global_model, config.local_iters, config, privacy_rng, eps_t)
            )
        for state, stats in zip(clients, stats_list):
            perm = align_clusters(stats.centers, global_model.centers)
            apply_alignment(stats, state, perm)
        if config.aggregation == WEIGHTED:
            weights = compute_client_weights(stats_list, config.client_weighting)
            new_global = aggregate_weighted(
                stats_list, weights, round_index=t + 1, privacy=privacy,
                mask_seed=config.cluster.seed + 1000003 * (t + 1),
            )
        elif config.aggregation == MEDIAN:
            new_global = aggregate_median(stats_list, round_index=t + 1)
        else:
            new_global = aggregate_fedavg(stats_list, round_index=t + 1)
        new_global.feature_means, new_global.feature_vars = aggregate_feature_stats(stats_list)
        converged = check_convergence(global_model, new_global, config.epsilon_conv)
        if config.personalization == ADAPTIVE:
            for state, stats in zip(clients, stats_list):
                improved = (
                    state.last_objective is not None
                    and np.isfinite(stats.local_objective)
                    and stats.local_objective < state.last_objective
                )
                step = -0.05 if improved else 0.05
                state.gamma = float(np.clip(state.gamma + step, 0.1, 0.9))
                state.rho = float(np.clip(state.rho + step, 0.1, 0.9))
        for state, stats in zip(clients, stats_list):
            state.last_objective = stats.local_objective
        round_log.append(
            {
                "round": t,
                "client_objectives": {s.client_id: s.local_objective for s in stats_list},
                "payload_bytes": per_client_payload * len(clients),
                "converged": converged,
                "epsilon_t": eps_t,
            }
        )
        global_model = new_global
        log.debug("round %d: payload %d bytes, converged=%s", t, per_client_payload, converged)
        if converged:
            converged_round = t
            break
    return FederationResult(
        global_model=global_model,
        clients=clients,
        round_log=round_log,
        converged_round=converged_round,
    )


def pooled_predictions(
    result: FederationResult, client_indices: list[np.ndarray], n_total: int
) -> np.ndarray:
    """Assemble one prediction vector from the clients' aligned memberships.

    Every sample belongs to exactly one client; its label is the argmax of
    that client's membership row (lowest index on ties).
    """
    labels = np.full(n_total, -1, dtype=int)
    for state, idx in zip(result.clients, client_indices):
        if state.memberships is None:
            raise ValueError(f"client {state.client_id} has no memberships (local_iters=0?)")
        labels[np.asarray(idx, dtype=int)] = np.argmax(state.memberships, axis=1)
    if np.any(labels < 0):
        raise ValueError("client index lists do not cover the dataset")
    return labels
