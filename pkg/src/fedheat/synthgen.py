"""Two-view geometric benchmark generator, federated partitioning, and the
two-view Iris scenario.

Eight parametric shapes, four per view. Every generator draws its latent
uniforms and its standard-normal jitters in a frozen order, and always draws
the normals even when the jitter scale is zero, so a noiseless twin generated
from the same seed shares the latent stream exactly. That twin is what the
validator uses to recover the injected noise.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import kstest

from .dataset import FederatedSplit, MultiViewDataset

GENERATOR_VERSION = "1"

CIRCLE = "circle"
ELLIPSE = "ellipse"
CRESCENT = "crescent"
SCURVE = "scurve"
DIAMOND = "diamond"
RING = "ring"
CROSS = "cross"
HEART = "heart"
SHAPE_KINDS = (CIRCLE, ELLIPSE, CRESCENT, SCURVE, DIAMOND, RING, CROSS, HEART)

EPS_SHAPE = 0.1  # fidelity budget for the distance-to-template gate

IRIS_SHA256 = "111f8932a62b6c883fdc21a018d7459e603d6468fd8bdb4d1e0f0b125f2c9f39"


@dataclass
class ShapeSpec:
    """One cluster's shape: kind, placement, geometry parameters, jitter scale.

    ``noise_scale`` multiplies every Gaussian jitter term of the shape's
    defining equations; 1.0 keeps the benchmark's default magnitudes, 0.0 produces the
    noiseless ideal shape.
    """

    kind: str
    center: tuple[float, float]
    params: dict = field(default_factory=dict)
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.noise_scale < 0:
            raise ValueError(f"noise_scale must be >= 0, got {self.noise_scale}")
        for key, value in self.params.items():
            if key not in ("inner_shift",) and value <= 0:
                raise ValueError(f"shape parameter {key} must be positive, got {value}")

    def jitter_sigma(self) -> float:
        """Largest positional jitter std of this shape (for validation bounds)."""
        base = {
            CIRCLE: 0.0, ELLIPSE: 0.0, RING: 0.0,
            CRESCENT: 0.1, SCURVE: 0.1, DIAMOND: 0.1, HEART: 0.1,
            CROSS: 0.3,
        }[self.kind]
        return base * self.noise_scale


def benchmark_specs(noise_scale: float = 1.0) -> list[list[ShapeSpec]]:
    """The benchmark's shape layout: four clusters in each of two views."""
    view1 = [
        ShapeSpec(CIRCLE, (2.0, 2.0), {"radius": 0.5}, noise_scale),
        ShapeSpec(ELLIPSE, (8.0, 2.0), {"a": 1.5, "b": 0.4}, noise_scale),
        ShapeSpec(CRESCENT, (2.0, 8.0), {"r_outer": 1.2, "r_inner": 0.6, "inner_shift": 0.4}, noise_scale),
        ShapeSpec(SCURVE, (8.0, 8.0), {"r_base": 0.3, "r_amp": 0.3}, noise_scale),
    ]
    view2 = [
        ShapeSpec(DIAMOND, (2.0, 2.0), {"r_base": 0.5, "petal": 0.3}, noise_scale),
        ShapeSpec(RING, (6.0, 6.0), {"r_inner": 0.8, "r_outer": 1.3}, noise_scale),
        ShapeSpec(CROSS, (6.0, -3.0), {"half_length": 1.0, "bar_sigma": 0.3}, noise_scale),
        ShapeSpec(HEART, (-2.0, -2.0), {"scale": 0.3}, noise_scale),
    ]
    return [view1, view2]


# ---------------------------------------------------------------------------
# generators: each returns (points, injected standard-normal draws)


def _gen_circle(n, spec, rng):
    r0 = spec.params.get("radius", 0.5)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    xi = rng.uniform(0.0, 1.0, n)
    r = r0 * np.sqrt(xi)
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)]) + spec.center
    return pts, np.empty(0)


def _gen_ellipse(n, spec, rng):
    a = spec.params.get("a", 1.5)
    b = spec.params.get("b", 0.4)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    xi = rng.uniform(0.0, 1.0, n)
    r = np.sqrt(xi)
    pts = np.column_stack([a * r * np.cos(theta), b * r * np.sin(theta)]) + spec.center
    return pts, np.empty(0)


def _gen_crescent(n, spec, rng):
    r_out = spec.params.get("r_outer", 1.2)
    r_in = spec.params.get("r_inner", 0.6)
    shift = spec.params.get("inner_shift", 0.4)
    s = spec.noise_scale
    t_eps = rng.standard_normal(n)
    t = rng.uniform(-np.pi / 3.0, np.pi / 3.0, n) + 0.1 * s * t_eps
    r_eta = rng.standard_normal(n)
    n_outer = (n + 1) // 2  # arcs split as evenly as possible, outer first
    pts = np.empty((n, 2))
    r_outer = r_out + 0.1 * s * r_eta[:n_outer]
    pts[:n_outer, 0] = r_outer * np.cos(t[:n_outer])
    pts[:n_outer, 1] = r_outer * np.sin(t[:n_outer])
    r_inner = r_in + 0.1 * s * r_eta[n_outer:]
    pts[n_outer:, 0] = shift + r_inner * np.cos(t[n_outer:])
    pts[n_outer:, 1] = r_inner * np.sin(t[n_outer:])
    return pts + spec.center, np.concatenate([t_eps, r_eta])


def _gen_scurve(n, spec, rng):
    r_base = spec.params.get("r_base", 0.3)
    r_amp = spec.params.get("r_amp", 0.3)
    s = spec.noise_scale
    t_eps = rng.standard_normal(n)
    t = rng.uniform(0.0, 2.0 * np.pi, n) + 0.05 * s * t_eps
    r_eta = rng.standard_normal(n)
    r = r_base + r_amp * np.sin(3.0 * t) + 0.1 * s * r_eta
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)]) + spec.center
    return pts, np.concatenate([t_eps, r_eta])


def _gen_diamond(n, spec, rng):
    r_base = spec.params.get("r_base", 0.5)
    petal = spec.params.get("petal", 0.3)
    s = spec.noise_scale
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    eps = rng.standard_normal(n)
    r = r_base + petal * np.abs(np.cos(4.0 * theta)) + 0.1 * s * eps
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)]) + spec.center
    return pts, eps


def _gen_ring(n, spec, rng):
    r_in = spec.params.get("r_inner", 0.8)
    r_out = spec.params.get("r_outer", 1.3)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    xi = rng.uniform(0.0, 1.0, n)
    r = r_in + (r_out - r_in) * xi
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)]) + spec.center
    return pts, np.empty(0)


def _gen_cross(n, spec, rng):
    half = spec.params.get("half_length", 1.0)
    bar = spec.params.get("bar_sigma", 0.3) * spec.noise_scale
    xi = rng.uniform(0.0, 1.0, n)
    eta = rng.standard_normal(n)
    n_h = (n + 1) // 2  # horizontal bar first, then vertical
    pts = np.empty((n, 2))
    pts[:n_h, 0] = 2.0 * half * (xi[:n_h] - 0.5)
    pts[:n_h, 1] = bar * eta[:n_h]
    pts[n_h:, 0] = bar * eta[n_h:]
    pts[n_h:, 1] = 2.0 * half * (xi[n_h:] - 0.5)
    return pts + spec.center, eta


def _heart_curve(t, scale):
    x = scale * 16.0 * np.sin(t) ** 3
    y = scale * (13.0 * np.cos(t) - 5.0 * np.cos(2.0 * t) - 2.0 * np.cos(3.0 * t) - np.cos(4.0 * t))
    return x, y


def _gen_heart(n, spec, rng):
    scale = spec.params.get("scale", 0.3)
    s = spec.noise_scale
    t_eps = rng.standard_normal(n)
    t = rng.uniform(0.0, 2.0 * np.pi, n) + 0.1 * s * t_eps
    eta_x = rng.standard_normal(n)
    eta_y = rng.standard_normal(n)
    cx, cy = _heart_curve(t, scale)
    pts = np.column_stack([cx + 0.1 * s * eta_x, cy + 0.1 * s * eta_y]) + spec.center
    return pts, np.concatenate([t_eps, eta_x, eta_y])


_GENERATORS = {
    CIRCLE: _gen_circle,
    ELLIPSE: _gen_ellipse,
    CRESCENT: _gen_crescent,
    SCURVE: _gen_scurve,
    DIAMOND: _gen_diamond,
    RING: _gen_ring,
    CROSS: _gen_cross,
    HEART: _gen_heart,
}


def generate_shape(n: int, spec: ShapeSpec, rng: np.random.Generator) -> np.ndarray:
    """Sample n points of one shape (public entry point, points only)."""
    pts, _ = generate_shape_with_noise(n, spec, rng)
    return pts


def generate_shape_with_noise(
    n: int, spec: ShapeSpec, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Sample n points plus the standard-normal draws that fed the jitter terms."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return _GENERATORS[spec.kind](n, spec, rng)


def gen_circle(n, spec, rng):
    return generate_shape(n, spec, rng)


def gen_ellipse(n, spec, rng):
    return generate_shape(n, spec, rng)


def gen_crescent(n, spec, rng):
    return generate_shape(n, spec, rng)


def gen_scurve(n, spec, rng):
    return generate_shape(n, spec, rng)


def gen_diamond(n, spec, rng):
    return generate_shape(n, spec, rng)


def gen_ring(n, spec, rng):
    return generate_shape(n, spec, rng)


def gen_cross(n, spec, rng):
    return generate_shape(n, spec, rng)


def gen_heart(n, spec, rng):
    return generate_shape(n, spec, rng)


# ---------------------------------------------------------------------------
# deterministic noiseless templates


def template_points(spec: ShapeSpec, n_points: int = 1000) -> np.ndarray:
    """Deterministic dense sampling of the shape's noiseless support.

    Angle-jittered shapes get their parameter domain extended by four jitter
    stds so tangential jitter stays on-template; only radial/coordinate noise
    then counts against the fidelity budget.
    """
    kind = spec.kind
    cx, cy = spec.center
    if kind in (CIRCLE, ELLIPSE, RING):
        if kind == CIRCLE:
            n_theta, n_r = 50, max(1, n_points // 50)
            r_grid = spec.params.get("radius", 0.5) * np.sqrt((np.arange(n_r) + 0.5) / n_r)
            ax = ay = 1.0
        elif kind == ELLIPSE:
            n_theta, n_r = 100, max(1, n_points // 100)
            r_grid = np.sqrt((np.arange(n_r) + 0.5) / n_r)
            ax, ay = spec.params.get("a", 1.5), spec.params.get("b", 0.4)
        else:
            n_theta, n_r = 100, max(1, n_points // 100)
            lo, hi = spec.params.get("r_inner", 0.8), spec.params.get("r_outer", 1.3)
            r_grid = lo + (hi - lo) * (np.arange(n_r) + 0.5) / n_r
            ax = ay = 1.0
        theta = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
        rr, tt = np.meshgrid(r_grid, theta)
        return np.column_stack([cx + ax * (rr * np.cos(tt)).ravel(), cy + ay * (rr * np.sin(tt)).ravel()])
    if kind == CRESCENT:
        pad = 4.0 * 0.1 * spec.noise_scale
        half = n_points // 2
        t = np.linspace(-np.pi / 3.0 - pad, np.pi / 3.0 + pad, half)
        r_out = spec.params.get("r_outer", 1.2)
        r_in = spec.params.get("r_inner", 0.6)
        shift = spec.params.get("inner_shift", 0.4)
        outer = np.column_stack([cx + r_out * np.cos(t), cy + r_out * np.sin(t)])
        inner = np.column_stack([cx + shift + r_in * np.cos(t), cy + r_in * np.sin(t)])
        return np.vstack([outer, inner])
    if kind == SCURVE:
        t = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
        r = spec.params.get("r_base", 0.3) + spec.params.get("r_amp", 0.3) * np.sin(3.0 * t)
        return np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])
    if kind == DIAMOND:
        t = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
        r = spec.params.get("r_base", 0.5) + spec.params.get("petal", 0.3) * np.abs(np.cos(4.0 * t))
        return np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])
    if kind == CROSS:
        half = spec.params.get("half_length", 1.0)
        m = n_points // 2
        line = np.linspace(-half, half, m)
        horizontal = np.column_stack([cx + line, np.full(m, cy)])
        vertical = np.column_stack([np.full(m, cx), cy + line])
        return np.vstack([horizontal, vertical])
    if kind == HEART:
        t = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
        hx, hy = _heart_curve(t, spec.params.get("scale", 0.3))
        return np.column_stack([cx + hx, cy + hy])
    raise ValueError(f"unknown shape kind {kind!r}")


# ---------------------------------------------------------------------------
# benchmark assembly and partitioning


def _cluster_rng(seed: int, view: int, cluster: int) -> np.random.Generator:
    return np.random.default_rng([seed, view, cluster])


def assemble_benchmark(
    n_per_cluster: int = 250,
    noise_scale: float = 1.0,
    seed: int = 0,
    specs_by_view: list[list[ShapeSpec]] | None = None,
) -> MultiViewDataset:
    """Build the two-view, four-cluster benchmark.

    Row i carries the same cluster label in both views. Each (view, cluster)
    pair generates from its own sub-seeded stream, so clusters could be
    produced in parallel without changing a single byte.
    """
    if specs_by_view is None:
        specs_by_view = benchmark_specs(noise_scale)
    c = len(specs_by_view[0])
    views = []
    for h, specs in enumerate(specs_by_view, start=1):
        if len(specs) != c:
            raise ValueError("every view needs the same number of cluster specs")
        blocks = [
            generate_shape(n_per_cluster, spec, _cluster_rng(seed, h, k))
            for k, spec in enumerate(specs)
        ]
        views.append(np.vstack(blocks))
    labels = np.repeat(np.arange(c), n_per_cluster)
    meta = {
        "kind": "synthetic-benchmark",
        "n_per_cluster": n_per_cluster,
        "c": c,
        "seed": seed,
        "noise_scale": noise_scale,
        "generator": GENERATOR_VERSION,
    }
    return MultiViewDataset(views=views, labels=labels, meta=meta)


def partition_federated(
    dataset: MultiViewDataset, fractions: list[float], seed: int = 0
) -> FederatedSplit:
    """Label-stratified disjoint split of row indices by the given fractions."""
    fractions = [float(f) for f in fractions]
    if any(f < 0 for f in fractions):
        raise ValueError("fractions must be non-negative")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    labels = dataset.labels
    if labels is None:
        labels = np.zeros(dataset.n_samples, dtype=int)
    rng = np.random.default_rng(seed)
    per_client: list[list[np.ndarray]] = [[] for _ in fractions]
    cum = np.cumsum(fractions)
    for value in np.unique(labels):
        idx = np.flatnonzero(labels == value)
        idx = rng.permutation(idx)
        # round half up: banker's rounding would split 212.5 as 212/38
        cuts = np.floor(cum * idx.size + 0.5).astype(int)
        cuts[-1] = idx.size
        start = 0
        for ci, stop in enumerate(cuts):
            per_client[ci].append(idx[start:stop])
            start = stop
    client_indices = [np.sort(np.concatenate(parts)) for parts in per_client]
    return FederatedSplit(client_indices=client_indices, fractions=fractions)


def load_iris_two_view(seed: int = 0) -> tuple[MultiViewDataset, FederatedSplit]:
    """The 150-sample flower table as a two-view federated scenario.

    View 1 takes attributes 1 and 3 (sepal length, petal length), view 2
    attributes 2 and 4 (sepal width, petal width). The 90/60 stratified
    split gives both clients all three species. The vendored table is
    checksum-verified before use.
    """
    raw = resources.files("fedheat").joinpath("data/iris.csv").read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != IRIS_SHA256:
        raise ValueError(f"vendored iris table is corrupt (sha256 {digest})")
    rows = [line.split(",") for line in raw.decode().strip().split("\n")]
    table = np.array([[float(v) for v in row[:4]] for row in rows])
    labels = np.array([int(row[4]) for row in rows])
    dataset = MultiViewDataset(
        views=[table[:, [0, 2]], table[:, [1, 3]]],
        labels=labels,
        meta={"kind": "iris-two-view", "c": 3, "seed": seed, "generator": GENERATOR_VERSION},
    )
    split = partition_federated(dataset, [0.6, 0.4], seed=seed)
    return dataset, split


# ---------------------------------------------------------------------------
# validation


@dataclass
class ClusterValidation:
    view: int
    cluster: int
    kind: str
    count: int
    count_expected: int
    count_ok: bool
    distance_to_template: float       # max over points
    distance_robust: float            # 99.9th percentile over points
    distance_bound: float
    distance_ok: bool


@dataclass
class ValidationReport:
    clusters: list[ClusterValidation]
    counts_ok: bool
    shapes_ok: bool
    ks_pvalue: float | None
    ks_ok: bool | None
    data_matches_seed: bool | None
    passed: bool
    regeneration_recommended: bool

    def lines(self) -> list[str]:
        out = [
            f"counts_ok: {self.counts_ok}",
            f"shapes_ok: {self.shapes_ok}",
            f"ks_pvalue: {'skipped' if self.ks_pvalue is None else repr(self.ks_pvalue)}",
            f"ks_ok: {'skipped' if self.ks_ok is None else self.ks_ok}",
            f"data_matches_seed: {self.data_matches_seed}",
            f"passed: {self.passed}",
            f"regeneration_recommended: {self.regeneration_recommended}",
        ]
        for cv in self.clusters:
            out.append(
                f"view {cv.view} cluster {cv.cluster} ({cv.kind}): count {cv.count}/{cv.count_expected}"
                f" dist_max {cv.distance_to_template:.4f} dist_p999 {cv.distance_robust:.4f}"
                f" bound {cv.distance_bound:.4f} ok={cv.count_ok and cv.distance_ok}"
            )
        return out


def validate_generated(
    dataset: MultiViewDataset,
    specs_by_view: list[list[ShapeSpec]] | None = None,
    alpha: float = 0.05,
) -> ValidationReport:
    """Shape-fidelity, count and noise-distribution checks (report only).

    Fidelity gates on the 99.9th-percentile directed distance from generated
    points to a 1000-point noiseless template, bounded by the fidelity
    budget plus three jitter stds; the strict maximum is reported alongside.
    With Gaussian jitter the sample maximum grows like sigma*sqrt(2 ln n),
    so gating the maximum at 3 sigma would reject valid large datasets. The
    noise check regenerates the injected standard normals from the recorded
    seed and KS-tests them; it is skipped for noiseless data.
    """
    meta = dataset.meta
    if specs_by_view is None:
        specs_by_view = benchmark_specs(float(meta.get("noise_scale", 1.0)))
    labels = dataset.labels
    if labels is None:
        raise ValueError("validation requires ground-truth labels")
    seed = meta.get("seed")
    expected = int(meta.get("n_per_cluster", 0)) or None
    clusters: list[ClusterValidation] = []
    injected: list[np.ndarray] = []
    data_matches = True if seed is not None else None
    for h, specs in enumerate(specs_by_view, start=1):
        view = dataset.views[h - 1]
        for k, spec in enumerate(specs):
            pts = view[labels == k]
            n_expected = expected if expected is not None else pts.shape[0]
            tree = cKDTree(template_points(spec))
            dists, _ = tree.query(pts)
            bound = EPS_SHAPE + 3.0 * spec.jitter_sigma()
            robust = float(np.quantile(dists, 0.999))
            clusters.append(
                ClusterValidation(
                    view=h,
                    cluster=k,
                    kind=spec.kind,
                    count=int(pts.shape[0]),
                    count_expected=int(n_expected),
                    count_ok=pts.shape[0] == n_expected,
                    distance_to_template=float(dists.max()),
                    distance_robust=robust,
                    distance_bound=bound,
                    distance_ok=robust <= bound,
                )
            )
            if seed is not None and pts.shape[0] > 0:
                regen, draws = generate_shape_with_noise(
                    pts.shape[0], spec, _cluster_rng(int(seed), h, k)
                )
                if not np.array_equal(regen, pts):
                    data_matches = False
                elif spec.noise_scale > 0:
                    injected.append(draws)
    counts_ok = all(cv.count_ok for cv in clusters)
    shapes_ok = all(cv.distance_ok for cv in clusters)
    ks_pvalue = None
    ks_ok = None
    if injected:
        pooled = np.concatenate(injected)
        if pooled.size:
            ks_pvalue = float(kstest(pooled, "norm").pvalue)
            ks_ok = ks_pvalue >= alpha
    passed = counts_ok and shapes_ok and (ks_ok is not False) and (data_matches is not False)
    return ValidationReport(
        clusters=clusters,
        counts_ok=counts_ok,
        shapes_ok=shapes_ok,
        ks_pvalue=ks_pvalue,
        ks_ok=ks_ok,
        data_matches_seed=data_matches,
        passed=passed,
        regeneration_recommended=not passed,
    )
