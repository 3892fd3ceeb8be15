import numpy as np
from django.test import SimpleTestCase

from core.exceptions import (
    DegenerateDataError,
    DimensionMismatchError,
    EmptySampleSetError,
    InsufficientSamplesError,
    NegativeEigenvalueError,
    NonFiniteValueError,
    NotSymmetricError,
)
from core.schemas import TruncationPolicy
from core.services import oracles
from core.services.linalg import (
    EigenSystem,
    center_columns,
    column_mean,
    components_for_variance,
    covariance_unbiased,
    eigh_symmetric,
    explained_variance_ratio,
    pca_gram_trick,
    whitening_matrix,
)


def columns(*cols):
    return np.array(cols, dtype=np.float64).T


class ColumnMeanTests(SimpleTestCase):
    def test_arithmetic_mean(self):
        np.testing.assert_array_equal(column_mean(columns((1, 0), (3, 2))), [2, 1])

    def test_single_column_is_identity(self):
        np.testing.assert_array_equal(column_mean(columns((5, 7, 9))), [5, 7, 9])

    def test_symmetric_columns_average_to_zero(self):
        np.testing.assert_array_equal(column_mean(columns((1, 1), (-1, -1))), [0, 0])

    def test_empty_matrix(self):
        with self.assertRaisesMessage(EmptySampleSetError, "empty sample set"):
            column_mean(np.empty((3, 0)))

    def test_rejects_non_finite(self):
        with self.assertRaises(NonFiniteValueError):
            column_mean(columns((1, np.nan)))


class CenterColumnsTests(SimpleTestCase):
    def test_subtracts_mean(self):
        centered = center_columns(columns((1, 0), (3, 2)), np.array([2.0, 1.0]))
        np.testing.assert_array_equal(centered, columns((-1, -1), (1, 1)))

    def test_zero_mean_leaves_matrix(self):
        x = columns((1, 2), (3, 4), (5, 6))
        np.testing.assert_array_equal(center_columns(x, np.zeros(2)), x)

    def test_one_dimensional(self):
        np.testing.assert_array_equal(center_columns(columns((4,), (6,)), np.array([5.0])), columns((-1,), (1,)))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            center_columns(columns((1, 2)), np.zeros(3))

    def test_centered_mean_is_zero(self):
        x = np.random.default_rng(7).standard_normal((20, 9)) * 100
        np.testing.assert_allclose(column_mean(center_columns(x, column_mean(x))), 0.0, atol=1e-12)


class CovarianceTests(SimpleTestCase):
    def test_one_dimensional(self):
        np.testing.assert_array_equal(covariance_unbiased(columns((-1,), (1,))), [[2.0]])

    def test_zero_columns(self):
        np.testing.assert_array_equal(covariance_unbiased(np.zeros((3, 4))), np.zeros((3, 3)))

    def test_two_dimensional(self):
        np.testing.assert_array_equal(covariance_unbiased(columns((-1, 0), (1, 0))), [[2, 0], [0, 0]])

    def test_needs_two_samples(self):
        with self.assertRaisesMessage(InsufficientSamplesError, "need at least two samples"):
            covariance_unbiased(columns((1, 2)))


class EighSymmetricTests(SimpleTestCase):
    def test_diagonal(self):
        es = eigh_symmetric(np.diag([1.0, 2.0]))
        np.testing.assert_allclose(es.values, [2, 1])
        np.testing.assert_allclose(np.abs(es.vectors), [[0, 1], [1, 0]])

    def test_rank_one(self):
        a = np.array([[1.0, -1.0], [-1.0, 1.0]])
        es = eigh_symmetric(a)
        np.testing.assert_allclose(es.values, [2, 0], atol=1e-12)
        first = es.vectors[:, 0] * np.sign(es.vectors[0, 0])
        np.testing.assert_allclose(first, np.array([1, -1]) / np.sqrt(2), atol=1e-12)
        self.assertLess(np.linalg.norm(a @ es.vectors[:, 0] - es.values[0] * es.vectors[:, 0]), 1e-12)

    def test_identity(self):
        np.testing.assert_allclose(eigh_symmetric(np.eye(3)).values, [1, 1, 1])

    def test_values_are_clamped_and_descending(self):
        x = np.random.default_rng(3).standard_normal((6, 3))
        es = eigh_symmetric(x @ x.T)
        self.assertTrue(np.all(np.diff(es.values) <= 0))
        self.assertTrue(np.all(es.values >= 0))

    def test_non_square(self):
        with self.assertRaises(NotSymmetricError):
            eigh_symmetric(np.zeros((2, 3)))

    def test_asymmetric(self):
        with self.assertRaises(NotSymmetricError):
            eigh_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_clearly_negative_eigenvalue(self):
        with self.assertRaises(NegativeEigenvalueError):
            eigh_symmetric(np.diag([1.0, -0.5]))


class GramTrickTests(SimpleTestCase):
    def test_two_point_example(self):
        es = pca_gram_trick(columns((1, 0), (-1, 0)))
        self.assertEqual(es.rank, 1)
        np.testing.assert_allclose(es.values, [2.0])
        np.testing.assert_allclose(np.abs(es.vectors[:, 0]), [1.0, 0.0], atol=1e-12)

    def test_zero_matrix_is_degenerate(self):
        with self.assertRaisesMessage(DegenerateDataError, "degenerate data (zero variance)"):
            pca_gram_trick(np.zeros((4, 3)))

    def test_needs_two_samples(self):
        with self.assertRaises(InsufficientSamplesError):
            pca_gram_trick(columns((1, 2, 3)))

    def test_matches_direct_decomposition(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((50, 8))
        x = center_columns(x, column_mean(x))
        es = pca_gram_trick(x)
        direct = eigh_symmetric(covariance_unbiased(x))
        np.testing.assert_allclose(es.values, direct.values[:es.rank], rtol=1e-8)
        signs = np.sign(np.sum(es.vectors * direct.vectors[:, :es.rank], axis=0))
        np.testing.assert_allclose(es.vectors * signs, direct.vectors[:, :es.rank], atol=1e-6)

    def test_random_instances_against_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            d = int(rng.integers(1, 65))
            c = int(rng.integers(2, 17))
            x = rng.standard_normal((d, c))
            x = center_columns(x, column_mean(x))
            es = pca_gram_trick(x)
            direct_values, _ = oracles.direct_spectrum(oracles.direct_covariance(x))
            self.assertEqual(es.rank, direct_values.shape[0])
            np.testing.assert_allclose(es.values, direct_values, rtol=1e-8)

    def test_eigenvectors_are_orthonormal_with_small_residual(self):
        rng = np.random.default_rng(21)
        x = rng.standard_normal((30, 10))
        x = center_columns(x, column_mean(x))
        es = pca_gram_trick(x)
        np.testing.assert_allclose(es.vectors.T @ es.vectors, np.eye(es.rank), atol=1e-8)
        sigma = covariance_unbiased(x)
        for value, vector in zip(es.values, es.vectors.T):
            self.assertLessEqual(np.linalg.norm(sigma @ vector - value * vector), 1e-8 * (1 + value))

    def test_rank_never_exceeds_samples_minus_one(self):
        rng = np.random.default_rng(2)
        for d, c in ((3, 10), (40, 5), (5, 6)):
            x = rng.standard_normal((d, c))
            es = pca_gram_trick(center_columns(x, column_mean(x)))
            self.assertLessEqual(es.rank, min(d, c - 1))

    def test_relative_tolerance_truncates(self):
        x = columns((10, 0.001), (-10, -0.001), (10, -0.001), (-10, 0.001))
        self.assertEqual(pca_gram_trick(x).rank, 2)
        self.assertEqual(pca_gram_trick(x, TruncationPolicy(rel_tol=1e-4)).rank, 1)


class WhiteningTests(SimpleTestCase):
    def test_scales_by_inverse_square_root(self):
        w = whitening_matrix(EigenSystem(values=np.array([4.0, 1.0]), vectors=np.eye(2)))
        np.testing.assert_allclose(w.w, [[0.5, 0.0], [0.0, 1.0]])
        self.assertEqual(w.retained_rank, 2)

    def test_unit_eigenvalue_keeps_vector(self):
        vector = np.array([[0.6], [0.8]])
        w = whitening_matrix(EigenSystem(values=np.array([1.0]), vectors=vector))
        np.testing.assert_allclose(w.w, vector)

    def test_everything_truncated(self):
        with self.assertRaisesMessage(DegenerateDataError, "no eigenvalue survives truncation"):
            whitening_matrix(EigenSystem(values=np.array([1e-30]), vectors=np.array([[1.0]])))

    def test_whitening_identity(self):
        rng = np.random.default_rng(8)
        for d, c in ((12, 5), (4, 30), (20, 21)):
            x = rng.standard_normal((d, c)) * rng.uniform(0.5, 3.0, size=(d, 1))
            x = center_columns(x, column_mean(x))
            w = whitening_matrix(pca_gram_trick(x)).w
            residual = w.T @ covariance_unbiased(x) @ w - np.eye(w.shape[1])
            self.assertLessEqual(np.max(np.abs(residual)), 1e-6)


class ExplainedVarianceTests(SimpleTestCase):
    def test_ratios_sum_to_one(self):
        es = EigenSystem(values=np.array([6.0, 3.0, 1.0]), vectors=np.eye(3))
        np.testing.assert_allclose(explained_variance_ratio(es), [0.6, 0.3, 0.1])

    def test_components_for_variance(self):
        es = EigenSystem(values=np.array([6.0, 3.0, 1.0]), vectors=np.eye(3))
        self.assertEqual(components_for_variance(es, 0.5), 1)
        self.assertEqual(components_for_variance(es, 0.9), 2)
        self.assertEqual(components_for_variance(es, 0.95), 3)
        self.assertEqual(components_for_variance(es, 1.0), 3)
