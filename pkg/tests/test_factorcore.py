import numpy as np
import pytest

from todalab import (
    FactorizationError,
    FlowFunction,
    LeadingMinorError,
    SpectralDomainError,
    cholesky_like_factor,
    lu_positive_factor,
    matrix_function,
    qr_factor,
    split_skew_upper,
    split_strictlower_upper,
    symmetric_eigen,
)
from todalab.factorcore import apply_spectral, qr_positive
from todalab.oracles import gram_schmidt_qr, jacobi_eigenvalues
from todalab.sampling import random_orthogonal, random_spd, random_symmetric, rng


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


class TestQRFactor:
    def test_identity(self):
        q, r = qr_factor(np.eye(3))
        np.testing.assert_allclose(q, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(r, np.eye(3), atol=1e-15)

    def test_rotation_input_forces_identity_r(self):
        rot = rotation(0.83)
        q, r = qr_factor(rot)
        np.testing.assert_allclose(q, rot, atol=1e-14)
        np.testing.assert_allclose(r, np.eye(2), atol=1e-14)

    def test_2x2_matches_gram_schmidt_oracle(self):
        m = np.array([[4.0, 2.0], [2.0, 3.0]])
        q, r = qr_factor(m)
        qo, ro = gram_schmidt_qr(m)
        assert np.all(np.diag(r) > 0)
        np.testing.assert_allclose(q, qo, atol=1e-13)
        np.testing.assert_allclose(r, ro, atol=1e-13)
        np.testing.assert_allclose(q @ r, m, atol=1e-14)

    def test_residual_and_orthogonality(self):
        gen = rng(1)
        for n in (2, 5, 8, 12):
            q0 = random_orthogonal(gen, n)
            if np.linalg.det(q0) < 0:
                q0[:, 0] = -q0[:, 0]
            m = q0 @ (
                np.triu(gen.normal(size=(n, n)), 1) + np.diag(gen.uniform(0.5, 2.0, n))
            )
            q, r = qr_factor(m)
            scale = np.linalg.norm(m)
            assert np.linalg.norm(q @ r - m) <= 1e-12 * scale
            assert np.linalg.norm(q.T @ q - np.eye(n)) <= 1e-12

    def test_uniqueness_recovers_random_pair(self):
        gen = rng(2)
        for n in (3, 6):
            q0 = random_orthogonal(gen, n)
            if np.linalg.det(q0) < 0:
                q0[:, 0] = -q0[:, 0]
            r0 = np.triu(gen.normal(size=(n, n)), 1) + np.diag(gen.uniform(0.5, 2.0, n))
            q, r = qr_factor(q0 @ r0)
            np.testing.assert_allclose(q, q0, atol=1e-10)
            np.testing.assert_allclose(r, r0, atol=1e-10)

    def test_negative_determinant_rejected(self):
        with pytest.raises(FactorizationError):
            qr_factor(np.diag([1.0, -1.0]))

    def test_singular_rejected(self):
        with pytest.raises(FactorizationError):
            qr_factor(np.array([[1.0, 2.0], [2.0, 4.0]]))


class TestLUPositive:
    def test_identity(self):
        low, up = lu_positive_factor(np.eye(4))
        np.testing.assert_array_equal(low, np.eye(4))
        np.testing.assert_array_equal(up, np.eye(4))

    def test_zero_leading_minor_reports_index_1(self):
        with pytest.raises(LeadingMinorError) as exc:
            lu_positive_factor(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert exc.value.minor_index == 1

    def test_second_minor_failure_reported(self):
        with pytest.raises(LeadingMinorError) as exc:
            lu_positive_factor(np.array([[1.0, 0.0], [0.0, -1.0]]))
        assert exc.value.minor_index == 2

    def test_2x2_hand_elimination(self):
        low, up = lu_positive_factor(np.array([[4.0, 2.0], [2.0, 3.0]]))
        np.testing.assert_allclose(low, [[1.0, 0.0], [0.5, 1.0]], atol=1e-15)
        np.testing.assert_allclose(up, [[4.0, 2.0], [0.0, 2.0]], atol=1e-15)

    def test_succeeds_iff_minors_positive(self):
        gen = rng(3)
        for _ in range(25):
            m = gen.normal(size=(5, 5))
            minors = [np.linalg.det(m[:k, :k]) for k in range(1, 6)]
            ok = all(d > 1e-12 * np.linalg.norm(m) for d in minors)
            if ok:
                low, up = lu_positive_factor(m)
                assert np.all(np.diag(low) == 1.0)
                assert np.all(np.diag(up) > 0)
                assert np.linalg.norm(low @ up - m) <= 1e-12 * np.linalg.norm(m)
            else:
                with pytest.raises(LeadingMinorError):
                    lu_positive_factor(m)


class TestCholeskyLike:
    def test_identity(self):
        m_low, m_up = cholesky_like_factor(np.eye(3))
        np.testing.assert_array_equal(m_low, np.eye(3))
        np.testing.assert_array_equal(m_up, np.eye(3))

    def test_diagonal_symmetric_split(self):
        m_low, m_up = cholesky_like_factor(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(m_low, np.diag([2.0, 3.0]))
        np.testing.assert_allclose(m_up, np.diag([2.0, 3.0]))

    def test_2x2_hand_rescaling(self):
        m = np.array([[4.0, 2.0], [2.0, 3.0]])
        m_low, m_up = cholesky_like_factor(m)
        r2 = np.sqrt(2.0)
        np.testing.assert_allclose(m_low, [[2.0, 0.0], [1.0, r2]], atol=1e-14)
        np.testing.assert_allclose(m_up, [[2.0, 1.0], [0.0, r2]], atol=1e-14)
        np.testing.assert_allclose(m_low @ m_up, m, atol=1e-14)

    def test_equal_positive_diagonals(self):
        gen = rng(4)
        m = random_spd(gen, 6)
        m_low, m_up = cholesky_like_factor(m)
        np.testing.assert_allclose(np.diag(m_low), np.diag(m_up), rtol=1e-14)
        assert np.all(np.diag(m_low) > 0)
        np.testing.assert_allclose(m_low @ m_up, m, atol=1e-13)


class TestSymmetricEigen:
    def test_permutation_case_with_sign_convention(self):
        values, vectors = symmetric_eigen(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(values, [1.0, 2.0, 3.0])
        expected = np.zeros((3, 3))
        expected[1, 0] = expected[2, 1] = expected[0, 2] = 1.0
        np.testing.assert_allclose(vectors, expected, atol=1e-15)

    def test_closed_form_2x2(self):
        values, vectors = symmetric_eigen(np.array([[1.0, 1.0], [1.0, 1.0]]))
        np.testing.assert_allclose(values, [0.0, 2.0], atol=1e-15)
        s = 1.0 / np.sqrt(2.0)
        np.testing.assert_allclose(vectors[:, 0], [s, -s], atol=1e-15)
        np.testing.assert_allclose(vectors[:, 1], [s, s], atol=1e-15)

    def test_reconstruction_random(self):
        gen = rng(5)
        s = random_symmetric(gen, 5)
        values, vectors = symmetric_eigen(s, tol=1e-10)
        np.testing.assert_allclose((vectors * values) @ vectors.T, s, atol=1e-10)
        np.testing.assert_allclose(vectors.T @ vectors, np.eye(5), atol=1e-12)
        assert np.all(np.diff(values) >= 0)

    def test_values_match_jacobi_rotation_oracle(self):
        gen = rng(6)
        for _ in range(10):
            s = random_symmetric(gen, 8)
            values, _ = symmetric_eigen(s)
            np.testing.assert_allclose(values, jacobi_eigenvalues(s), atol=1e-10)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            symmetric_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_min_gap_report(self):
        dec = symmetric_eigen(np.diag([0.0, 1e-9, 1.0]))
        assert dec.min_gap() < 1e-8


class TestMatrixFunction:
    def test_identity_function(self):
        gen = rng(7)
        s = random_symmetric(gen, 4)
        np.testing.assert_allclose(matrix_function(s, FlowFunction.identity()), s, atol=1e-13)

    def test_log_of_diagonal(self):
        out = matrix_function(np.diag([1.0, np.e]), FlowFunction.log())
        np.testing.assert_allclose(out, np.diag([0.0, 1.0]), atol=1e-14)

    def test_square_matches_direct_product(self):
        s = np.array([[1.0, 1.0], [1.0, 1.0]])
        out = matrix_function(s, FlowFunction.polynomial([0.0, 0.0, 1.0]))
        np.testing.assert_allclose(out, s @ s, atol=1e-13)

    def test_composition_on_same_eigenbasis(self):
        gen = rng(8)
        s = random_spd(gen, 5, lo=0.5, hi=3.0)
        g = FlowFunction.polynomial([1.0, 2.0])  # 1 + 2x, positive on the spectrum
        composed = apply_spectral(s, lambda x: np.log(g(x)))
        two_steps = matrix_function(matrix_function(s, g), FlowFunction.log())
        np.testing.assert_allclose(two_steps, composed, atol=1e-12)

    def test_log_domain_error(self):
        with pytest.raises(SpectralDomainError):
            matrix_function(np.diag([1.0, -1.0]), FlowFunction.log())

    def test_shifted_log_at_shift_error(self):
        with pytest.raises(SpectralDomainError):
            FlowFunction.shifted_log(2.0)(np.array([1.0, 2.0]))


class TestSplits:
    def test_symmetric_2x2(self):
        a, b, c = 1.0, 2.0, 3.0
        skew, upper = split_skew_upper(np.array([[a, b], [b, c]]))
        np.testing.assert_array_equal(skew, [[0.0, -b], [b, 0.0]])
        np.testing.assert_array_equal(upper, [[a, 2 * b], [0.0, c]])

    def test_upper_triangular_input(self):
        m = np.array([[1.0, 2.0], [0.0, 3.0]])
        skew, upper = split_skew_upper(m)
        np.testing.assert_array_equal(skew, np.zeros((2, 2)))
        np.testing.assert_array_equal(upper, m)

    def test_general_2x2_by_hand(self):
        skew, upper = split_skew_upper(np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_array_equal(skew, [[0.0, -3.0], [3.0, 0.0]])
        np.testing.assert_array_equal(upper, [[1.0, 5.0], [0.0, 4.0]])

    def test_strictlower_upper_examples(self):
        m = np.diag([1.0, 2.0, 3.0])
        low, up = split_strictlower_upper(m)
        np.testing.assert_array_equal(low, np.zeros((3, 3)))
        np.testing.assert_array_equal(up, m)
        low, up = split_strictlower_upper(np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_array_equal(low, [[0.0, 0.0], [3.0, 0.0]])
        np.testing.assert_array_equal(up, [[1.0, 2.0], [0.0, 4.0]])

    def test_shapes_exact_and_reassembly(self):
        gen = rng(9)
        m = gen.normal(size=(6, 6))
        skew, upper = split_skew_upper(m)
        np.testing.assert_array_equal(skew, -skew.T)
        np.testing.assert_array_equal(np.tril(upper, -1), np.zeros((6, 6)))
        np.testing.assert_array_equal(np.tril(skew, -1), np.tril(m, -1))
        np.testing.assert_allclose(skew + upper, m, rtol=0, atol=1e-15)
        low, up = split_strictlower_upper(m)
        np.testing.assert_array_equal(low + up, m)


class TestQRPositiveGeneral:
    def test_negative_determinant_still_factors(self):
        m = np.diag([1.0, -2.0])
        q, r = qr_positive(m)
        assert np.all(np.diag(r) >= 0)
        np.testing.assert_allclose(q @ r, m, atol=1e-15)
