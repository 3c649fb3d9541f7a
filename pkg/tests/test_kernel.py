import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedheat.kernel import (
    compute_coeffs,
    fked,
    hkc_meandev,
    hkc_minmax,
    ked1,
    ked2,
    kernel_distance_matrix,
)


class TestMinMaxCoeffs:
    def test_constant_column_is_zero(self):
        view = np.array([[5.0], [5.0], [5.0]])
        out = hkc_minmax(view, eps=1e-9)
        assert np.array_equal(out, np.zeros((3, 1)))

    def test_endpoints(self):
        view = np.array([[0.0], [1.0]])
        out = hkc_minmax(view, eps=1e-15)
        np.testing.assert_allclose(out.ravel(), [0.0, 1.0], atol=1e-12)

    def test_direct_formula(self):
        view = np.array([[2.0], [4.0], [8.0]])
        out = hkc_minmax(view, eps=1e-15)
        np.testing.assert_allclose(out.ravel(), [0.0, 1.0 / 3.0, 1.0], rtol=1e-12)

    def test_columnwise(self):
        view = np.array([[0.0, 10.0], [1.0, 30.0]])
        out = hkc_minmax(view, eps=1e-15)
        np.testing.assert_allclose(out, [[0.0, 0.0], [1.0, 1.0]], atol=1e-12)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="non-finite"):
            hkc_minmax(np.array([[np.nan], [1.0]]))
        with pytest.raises(ValueError, match="non-finite"):
            hkc_minmax(np.array([[np.inf], [1.0]]))

    def test_rejects_bad_eps(self):
        with pytest.raises(ValueError, match="eps"):
            hkc_minmax(np.array([[1.0], [2.0]]), eps=0.0)


class TestMeanDevCoeffs:
    def test_symmetric_deviation(self):
        out = hkc_meandev(np.array([[1.0], [2.0], [3.0]]))
        np.testing.assert_allclose(out.ravel(), [1.0, 0.0, 1.0])

    def test_constant_column(self):
        out = hkc_meandev(np.full((4, 2), 7.0))
        assert np.array_equal(out, np.zeros((4, 2)))

    def test_two_point(self):
        out = hkc_meandev(np.array([[0.0], [10.0]]))
        np.testing.assert_allclose(out.ravel(), [5.0, 5.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="non-finite"):
            hkc_meandev(np.array([[np.nan], [1.0]]))


def test_compute_coeffs_dispatch():
    view = np.array([[1.0], [3.0]])
    assert np.array_equal(compute_coeffs(view, "meandev"), hkc_meandev(view))
    assert np.array_equal(compute_coeffs(view, "minmax"), hkc_minmax(view))
    with pytest.raises(ValueError, match="hkc_type"):
        compute_coeffs(view, "other")


class TestKernelDistances:
    def test_ked1_identical_point(self):
        x = np.array([1.5, -2.0])
        assert ked1(x, x, np.array([0.3, 0.7])) == 1.0

    def test_ked1_zero_coeffs(self):
        assert ked1(np.array([5.0, 5.0]), np.array([-5.0, 3.0]), np.zeros(2)) == 1.0

    def test_ked1_scalar_evaluation(self):
        value = ked1(np.zeros(2), np.ones(2), np.ones(2))
        np.testing.assert_allclose(value, np.exp(-2.0), rtol=1e-12)

    def test_ked2_complements(self):
        x, a, d = np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([1.0, 1.0])
        np.testing.assert_allclose(ked2(x, a, d), 1.0 - np.exp(-2.0), rtol=1e-12)
        assert ked2(x, x, d) == 0.0

    def test_ked2_limit(self):
        far = ked2(np.array([1e6]), np.array([0.0]), np.array([1.0]))
        assert far == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            ked1(np.zeros(2), np.zeros(3), np.zeros(2))

    def test_negative_coeffs_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            ked1(np.zeros(2), np.ones(2), np.array([-0.1, 0.2]))

    def test_fked_is_ked2(self):
        x, a, d = np.array([1.0, 0.0]), np.array([0.0, 0.0]), np.array([0.5, 0.5])
        np.testing.assert_allclose(fked(x, a, d), 1.0 - np.exp(-0.5), rtol=1e-12)
        assert fked(x, a, d) == ked2(x, a, d)
        assert fked(x, x, d) == 0.0


def test_distance_matrix_matches_scalar_calls():
    rng = np.random.default_rng(3)
    view = rng.normal(size=(2, 2))
    centers = rng.normal(size=(2, 2))
    coeffs = hkc_minmax(view)
    matrix = kernel_distance_matrix(view, centers, coeffs)
    for i in range(2):
        for k in range(2):
            np.testing.assert_allclose(
                matrix[i, k], ked2(view[i], centers[k], coeffs[i]), rtol=1e-14
            )


# float64 saturates the open bounds: 1 - exp(-phi) rounds to exactly 1.0 once
# exp(-phi) < 2^-54 (phi ~ 37), and exp(-phi) itself underflows to 0.0 past
# phi ~ 745. The strict ranges hold on the domain below that first boundary;
# saturation behavior is probed separately.
finite_floats = st.floats(min_value=-1, max_value=1, allow_nan=False)
coeff_floats = st.floats(min_value=0, max_value=1.2, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(min_value=1, max_value=6).flatmap(
        lambda d: st.tuples(
            st.lists(finite_floats, min_size=d, max_size=d),
            st.lists(finite_floats, min_size=d, max_size=d),
            st.lists(coeff_floats, min_size=d, max_size=d),
        )
    )
)
def test_kernel_distance_ranges(args):
    x, a, d = (np.array(v) for v in args)
    similarity = ked1(x, a, d)
    dissimilarity = ked2(x, a, d)
    assert 0.0 < similarity <= 1.0
    assert 0.0 <= dissimilarity < 1.0
    assert similarity + dissimilarity == 1.0


def test_kernel_distance_saturates_at_underflow():
    # complement rounds to 1.0 first, deep underflow zeroes the similarity
    x, a, d = np.array([0.0]), np.array([8.0]), np.array([1.0])
    assert 0.0 < ked1(x, a, d) < 1e-16
    assert ked2(x, a, d) == 1.0
    far = np.array([30.0])
    assert ked1(x, far, d) == 0.0
    assert ked2(x, far, d) == 1.0


@settings(max_examples=100, deadline=None)
@given(
    st.lists(finite_floats, min_size=3, max_size=3),
    st.lists(finite_floats, min_size=3, max_size=3),
    st.lists(coeff_floats, min_size=3, max_size=3),
    st.integers(min_value=0, max_value=2),
    st.floats(min_value=0.01, max_value=5.0),
)
def test_ked2_monotone_in_weighted_terms(x, a, d, j, bump):
    x, a, d = np.array(x), np.array(a), np.array(d)
    heavier = d.copy()
    heavier[j] += bump
    assert ked2(x, a, heavier) >= ked2(x, a, d)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=2, max_value=30), st.integers(min_value=1, max_value=4))
def test_minmax_range_property(n, d):
    rng = np.random.default_rng(n * 13 + d)
    view = rng.normal(scale=5.0, size=(n, d))
    out = hkc_minmax(view)
    assert np.all(out >= 0.0)
    assert np.all(out <= 1.0 + 1e-9)
