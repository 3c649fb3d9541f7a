import hashlib
from importlib import resources

import numpy as np
import pytest
from scipy.spatial import cKDTree

from fedheat.synthgen import (
    IRIS_SHA256,
    SHAPE_KINDS,
    ShapeSpec,
    assemble_benchmark,
    benchmark_specs,
    generate_shape,
    generate_shape_with_noise,
    load_iris_two_view,
    partition_federated,
    template_points,
    validate_generated,
    _heart_curve,
)


def all_specs(noise_scale=1.0):
    view1, view2 = benchmark_specs(noise_scale)
    return view1 + view2


class TestGenerators:
    @pytest.mark.parametrize("n", [1, 7, 64])
    def test_exact_row_counts(self, n):
        rng_seed = 11
        for spec in all_specs():
            pts = generate_shape(n, spec, np.random.default_rng(rng_seed))
            assert pts.shape == (n, 2)

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="n >= 1"):
            generate_shape(0, all_specs()[0], np.random.default_rng(0))

    def test_circle_radial_bound(self):
        spec = benchmark_specs(0.0)[0][0]
        pts = generate_shape(2000, spec, np.random.default_rng(1))
        radii = np.linalg.norm(pts - np.array(spec.center), axis=1)
        assert radii.max() <= 0.5 + 1e-12

    def test_heart_parametric_spot_check(self):
        # t = pi/2 on the noiseless curve
        x, y = _heart_curve(np.pi / 2.0, 0.3)
        spec = benchmark_specs(0.0)[1][3]
        assert spec.center[0] + x == pytest.approx(2.8, abs=1e-12)
        assert spec.center[1] + y == pytest.approx(-0.8, abs=1e-12)

    def test_noiseless_points_on_templates(self):
        for spec in all_specs(0.0):
            pts = generate_shape(300, spec, np.random.default_rng(2))
            tree = cKDTree(template_points(spec))
            dists, _ = tree.query(pts)
            assert dists.max() <= 0.1, spec.kind

    def test_crescent_stays_in_arc_bands(self):
        spec = benchmark_specs(0.0)[0][2]
        pts = generate_shape(500, spec, np.random.default_rng(3))
        tree = cKDTree(template_points(spec))
        dists, _ = tree.query(pts)
        assert dists.max() <= 0.02

    def test_noise_draws_are_recorded(self):
        spec = benchmark_specs(1.0)[0][2]  # crescent: angle + radius jitter
        pts, draws = generate_shape_with_noise(50, spec, np.random.default_rng(4))
        assert draws.shape == (100,)

    def test_same_seed_same_latents_regardless_of_noise(self):
        # the noiseless twin consumes the identical draw stream
        noisy_spec = benchmark_specs(1.0)[1][3]
        clean_spec = benchmark_specs(0.0)[1][3]
        _, draws_a = generate_shape_with_noise(40, noisy_spec, np.random.default_rng(5))
        _, draws_b = generate_shape_with_noise(40, clean_spec, np.random.default_rng(5))
        assert np.array_equal(draws_a, draws_b)

    def test_shape_kind_validation(self):
        with pytest.raises(ValueError, match="unknown shape"):
            ShapeSpec("blob", (0.0, 0.0))

    def test_negative_parameter_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            ShapeSpec("circle", (0.0, 0.0), {"radius": -1.0})


class TestAssemble:
    def test_desk_scale_counts(self):
        ds = assemble_benchmark(250, 1.0, seed=0)
        assert ds.n_samples == 1000
        assert ds.n_views == 2
        assert np.array_equal(np.bincount(ds.labels), [250, 250, 250, 250])

    def test_full_scale_counts(self):
        ds = assemble_benchmark(2500, 1.0, seed=0)
        assert ds.n_samples == 10000
        assert np.array_equal(np.bincount(ds.labels), [2500] * 4)

    def test_labels_shared_across_views(self):
        # both views are generated block-by-block over the same label vector,
        # so row i's cluster is the same in each view by construction
        ds = assemble_benchmark(50, 1.0, seed=1)
        assert ds.labels.shape == (200,)
        assert ds.meta["c"] == 4

    def test_deterministic(self):
        a = assemble_benchmark(60, 1.0, seed=9)
        b = assemble_benchmark(60, 1.0, seed=9)
        for x, y in zip(a.views, b.views):
            assert np.array_equal(x, y)
        c = assemble_benchmark(60, 1.0, seed=10)
        assert not np.array_equal(a.views[0], c.views[0])


class TestPartition:
    def test_full_scale_85_15(self):
        ds = assemble_benchmark(2500, 1.0, seed=0)
        split = partition_federated(ds, [0.85, 0.15], seed=0)
        assert [ix.size for ix in split.client_indices] == [8500, 1500]

    def test_single_client_gets_everything(self):
        ds = assemble_benchmark(30, 1.0, seed=0)
        split = partition_federated(ds, [1.0], seed=0)
        assert np.array_equal(split.client_indices[0], np.arange(120))

    def test_disjoint_cover(self):
        ds = assemble_benchmark(40, 1.0, seed=2)
        split = partition_federated(ds, [0.5, 0.3, 0.2], seed=2)
        merged = np.concatenate(split.client_indices)
        assert len(merged) == len(set(merged.tolist())) == ds.n_samples

    def test_per_label_proportions_within_one(self):
        ds = assemble_benchmark(100, 1.0, seed=3)
        split = partition_federated(ds, [0.7, 0.3], seed=3)
        for frac, ix in zip([0.7, 0.3], split.client_indices):
            for label in range(4):
                count = int(np.sum(ds.labels[ix] == label))
                assert abs(count - frac * 100) <= 1

    def test_fractions_must_sum_to_one(self):
        ds = assemble_benchmark(10, 1.0, seed=0)
        with pytest.raises(ValueError, match="sum to 1"):
            partition_federated(ds, [0.5, 0.4])


class TestIris:
    def test_shape_and_split(self):
        ds, split = load_iris_two_view(seed=0)
        assert ds.n_samples == 150
        assert ds.dims == [2, 2]
        assert ds.meta["c"] == 3
        assert [ix.size for ix in split.client_indices] == [90, 60]

    def test_all_species_on_both_clients(self):
        ds, split = load_iris_two_view(seed=4)
        for ix in split.client_indices:
            assert set(ds.labels[ix].tolist()) == {0, 1, 2}

    def test_vendored_checksum(self):
        raw = resources.files("fedheat").joinpath("data/iris.csv").read_bytes()
        assert hashlib.sha256(raw).hexdigest() == IRIS_SHA256

    def test_views_are_attribute_pairs(self):
        ds, _ = load_iris_two_view(seed=0)
        # first flower of the canonical table: 5.1, 3.5, 1.4, 0.2
        np.testing.assert_allclose(ds.views[0][0], [5.1, 1.4])
        np.testing.assert_allclose(ds.views[1][0], [3.5, 0.2])


class TestValidation:
    def test_noiseless_dataset_passes(self):
        ds = assemble_benchmark(150, 0.0, seed=0)
        report = validate_generated(ds)
        assert report.counts_ok and report.shapes_ok and report.passed
        assert report.ks_pvalue is None  # nothing injected, nothing to test
        assert all(cv.distance_to_template <= 0.1 for cv in report.clusters)

    def test_noisy_dataset_runs_ks(self):
        ds = assemble_benchmark(150, 1.0, seed=0)
        report = validate_generated(ds)
        assert report.ks_pvalue is not None
        assert report.data_matches_seed is True

    def test_wrong_template_flagged(self):
        ds = assemble_benchmark(100, 0.0, seed=0)
        specs = benchmark_specs(0.0)
        specs[0][0] = ShapeSpec("circle", (50.0, 50.0), {"radius": 0.5}, 0.0)
        report = validate_generated(ds, specs)
        assert not report.shapes_ok
        assert not report.passed
        assert report.regeneration_recommended

    def test_tampered_rows_detected(self):
        ds = assemble_benchmark(100, 1.0, seed=0)
        ds.views[0][0] += 100.0
        report = validate_generated(ds)
        assert report.data_matches_seed is False
        assert not report.passed

    def test_count_mismatch_detected(self):
        ds = assemble_benchmark(100, 1.0, seed=0)
        ds.meta["n_per_cluster"] = 99
        report = validate_generated(ds)
        assert not report.counts_ok

    def test_all_shape_kinds_covered(self):
        kinds = {spec.kind for spec in all_specs()}
        assert kinds == set(SHAPE_KINDS)
