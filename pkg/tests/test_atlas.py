import itertools

import numpy as np
import pytest

from todalab import (
    BidiagonalChart,
    ChartDomainError,
    FlowFunction,
    SymTridiagonal,
    chart_flow,
    chart_transition,
    from_chart,
    momentum_map,
    symes_solve,
    to_chart,
)
from todalab.sampling import random_jacobi_entries, random_spectrum, random_unit_positive, rng
from todalab.invspec import SpectralData, reconstruct

IDENTITY = FlowFunction.identity()


def random_jacobi(gen, n):
    a, b = random_jacobi_entries(gen, n)
    return SymTridiagonal(a, b)


def well_gapped_chart(gen, n, beta_range=3.0):
    lambdas = random_spectrum(gen, n, min_gap=0.3, max_gap=1.0)
    betas = gen.uniform(-beta_range, beta_range, n - 1)
    pi = tuple(int(p) for p in gen.permutation(n))
    return BidiagonalChart(pi, lambdas, betas)


class TestToChart:
    def test_diagonal_matrix_has_zero_betas(self):
        lam = np.array([-1.0, 0.5, 2.0])
        pi = (2, 0, 1)
        t = SymTridiagonal(lam[list(pi)], np.zeros(2))
        c = to_chart(t, pi)
        np.testing.assert_allclose(c.betas, np.zeros(2), atol=1e-12)
        np.testing.assert_allclose(c.lambdas, lam, atol=1e-15)

    def test_2x2_hand_value_and_sign(self):
        t = SymTridiagonal([1.0, 1.0], [1.0])
        c = to_chart(t, (1, 0))  # chart order (2, 0)
        np.testing.assert_allclose(c.lambdas_permuted, [2.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(c.betas, [2.0], atol=1e-13)
        assert np.sign(c.betas[0]) == np.sign(t.b[0])

    def test_roundtrip_matrix_first(self):
        gen = rng(60)
        for _ in range(10):
            j = random_jacobi(gen, 6)
            c = to_chart(j, tuple(range(6)))
            back = from_chart(c)
            assert np.abs(back.to_dense() - j.to_dense()).max() <= 1e-9

    def test_out_of_domain_reports_minor(self):
        # diag(0.7, -0.3) sits at the vertex of the descending chart; the
        # ascending chart's eigenvector matrix starts with a zero minor.
        t = SymTridiagonal([0.7, -0.3], np.zeros(1))
        with pytest.raises(ChartDomainError) as exc:
            to_chart(t, (0, 1))
        assert exc.value.minor_index == 1


class TestFromChart:
    def test_zero_betas_give_diagonal(self):
        c = BidiagonalChart((1, 0, 2), [0.0, 1.0, 3.0], np.zeros(2))
        t = from_chart(c)
        np.testing.assert_allclose(t.b, np.zeros(2), atol=1e-12)
        np.testing.assert_allclose(t.a, [1.0, 0.0, 3.0], atol=1e-12)

    def test_roundtrip_chart_first(self):
        gen = rng(61)
        for _ in range(10):
            c = well_gapped_chart(gen, 5)
            t = from_chart(c)
            back = to_chart(t, c.pi)
            np.testing.assert_allclose(back.betas, c.betas, atol=1e-10)
            np.testing.assert_allclose(back.lambdas, c.lambdas, atol=1e-10)

    def test_positive_betas_give_jacobi(self):
        gen = rng(62)
        for _ in range(5):
            c = well_gapped_chart(gen, 5)
            c = BidiagonalChart(c.pi, c.lambdas, np.abs(c.betas) + 0.05)
            assert from_chart(c).is_jacobi

    def test_spectrum_is_the_master_spectrum(self):
        gen = rng(63)
        c = well_gapped_chart(gen, 4)
        t = from_chart(c)
        np.testing.assert_allclose(
            np.linalg.eigvalsh(t.to_dense()), c.lambdas, atol=1e-9
        )


class TestChartFlow:
    def test_time_zero(self):
        gen = rng(64)
        c = well_gapped_chart(gen, 4)
        out = chart_flow(c, IDENTITY, 0.0)
        np.testing.assert_array_equal(out.betas, c.betas)

    def test_signs_preserved(self):
        gen = rng(65)
        c = well_gapped_chart(gen, 5)
        out = chart_flow(c, IDENTITY, 2.7)
        assert np.all(np.sign(out.betas) == np.sign(c.betas))

    def test_matches_symes_solution(self):
        gen = rng(66)
        cubic = FlowFunction.polynomial([0.0, 0.5, 0.0, 0.1])
        for f in (IDENTITY, cubic):
            for _ in range(5):
                j = random_jacobi(gen, 5)
                pi = tuple(range(5))
                c = to_chart(j, pi)
                t = 2.0
                flowed_chart = from_chart(chart_flow(c, f, t))
                direct = symes_solve(j.to_dense(), f, t)
                assert np.abs(flowed_chart.to_dense() - direct).max() <= 1e-6

    def test_log_flow_uses_signless_values(self):
        # spectrum with negative eigenvalues still flows in the chart
        c = BidiagonalChart((0, 1, 2), [-2.0, -0.5, 1.0], [0.4, -0.3])
        out = chart_flow(c, FlowFunction.log(), 1.0)
        factors = np.array([0.5 / 2.0, 1.0 / 0.5])
        np.testing.assert_allclose(out.betas, c.betas * factors, atol=1e-14)

    def test_domain_invariance_along_flow(self):
        gen = rng(67)
        for _ in range(5):
            j = random_jacobi(gen, 4)
            c = to_chart(j, tuple(range(4)))
            for t in (0.5, 1.0, 2.0, 4.0):
                moved = from_chart(chart_flow(c, IDENTITY, t))
                to_chart(moved, c.pi)  # must not raise


class TestChartTransition:
    def test_identity_transition(self):
        gen = rng(68)
        c = well_gapped_chart(gen, 4)
        out = chart_transition(c, c.pi)
        np.testing.assert_allclose(out.betas, c.betas, atol=1e-10)

    def test_transition_roundtrip(self):
        gen = rng(69)
        j = random_jacobi(gen, 4)
        pi0 = (0, 1, 2, 3)
        pi1 = (2, 0, 3, 1)
        c0 = to_chart(j, pi0)
        c1 = chart_transition(c0, pi1)
        back = chart_transition(c1, pi0)
        np.testing.assert_allclose(back.betas, c0.betas, atol=1e-9)

    def test_transition_commutes_with_flow(self):
        gen = rng(70)
        j = random_jacobi(gen, 4)
        pi0, pi1 = (0, 1, 2, 3), (1, 0, 2, 3)
        c0 = to_chart(j, pi0)
        t = 1.2
        one = chart_transition(chart_flow(c0, IDENTITY, t), pi1)
        two = chart_flow(chart_transition(c0, pi1), IDENTITY, t)
        np.testing.assert_allclose(one.betas, two.betas, atol=1e-8)


class TestBoundaryAndCoverage:
    def test_reduced_matrix_lies_in_charts(self):
        # one vanishing off-diagonal entry: norming constants degenerate,
        # charts do not.
        t = SymTridiagonal([0.0, 1.0, 3.0], [0.7, 0.0])
        found = []
        for pi in itertools.permutations(range(3)):
            try:
                c = to_chart(t, pi)
            except ChartDomainError:
                continue
            found.append(pi)
            back = from_chart(c)
            assert np.abs(back.to_dense() - t.to_dense()).max() <= 1e-9
        assert found

    def test_full_atlas_coverage_n3(self):
        gen = rng(71)
        lambdas = np.array([2.0, 4.0, 8.0])
        perms = list(itertools.permutations(range(3)))
        for _ in range(100):
            v = random_unit_positive(gen, 3)
            j = reconstruct(SpectralData(lambdas, v))
            signs = gen.choice([-1.0, 1.0], size=2)
            t = SymTridiagonal(j.a, j.b * signs)
            covered = 0
            for pi in perms:
                try:
                    to_chart(t, pi)
                    covered += 1
                except ChartDomainError:
                    continue
            assert covered >= 1


class TestSignCoupling:
    def test_sign_equality_on_random_jacobi(self):
        gen = rng(72)
        checked = 0
        while checked < 15:
            j = random_jacobi(gen, 5)
            pi = tuple(int(p) for p in gen.permutation(5))
            try:
                c = to_chart(j, pi)
            except ChartDomainError:
                continue
            assert np.all(np.sign(c.betas) == np.sign(j.b))
            checked += 1

    def test_ratio_tends_to_one_at_vertex(self):
        # a single off-diagonal entry scaled toward zero on an otherwise
        # diagonal matrix: the matrix approaches the chart's own vertex and
        # the quotient beta/T_{k+1,k} approaches 1.
        diag = np.array([0.9, 0.3, -0.5, -1.2])
        pi = (3, 2, 1, 0)
        for k in range(3):
            off = np.zeros(3)
            off[k] = 1e-6
            c = to_chart(SymTridiagonal(diag, off), pi)
            assert abs(c.betas[k] / 1e-6 - 1.0) <= 1e-3

    def test_ratio_constant_at_edge_limits(self):
        # at an edge limit (reduced matrix with a non-diagonal block) the
        # quotient tends to a positive constant that is not 1: here 1/sqrt(2).
        t = SymTridiagonal([2.0, 2.0, 2.0], [1e-7, 1.0])
        c = to_chart(t, (1, 0, 2))
        assert abs(c.betas[0] / 1e-7 - 1.0 / np.sqrt(2.0)) <= 1e-5


class TestMomentumMap:
    def test_diagonal_input(self):
        t = SymTridiagonal([3.0, 1.0, 2.0], np.zeros(2))
        out = momentum_map(t)
        assert sorted(out) == pytest.approx([1.0, 2.0, 3.0])
        assert out.sum() == pytest.approx(6.0)

    def test_2x2_hand_value(self):
        out = momentum_map(SymTridiagonal([1.0, 1.0], [1.0]))
        np.testing.assert_allclose(out, [1.0, 1.0], atol=1e-14)

    def test_majorization_into_permutohedron(self):
        gen = rng(73)
        for _ in range(200):
            j = random_jacobi(gen, 5)
            u = momentum_map(j)
            lam = np.linalg.eigvalsh(j.to_dense())
            assert abs(u.sum() - lam.sum()) <= 1e-9
            u_sorted = np.sort(u)[::-1]
            lam_sorted = np.sort(lam)[::-1]
            partial = np.cumsum(u_sorted) - np.cumsum(lam_sorted)
            assert np.all(partial <= 1e-9)


class TestChartSerialization:
    def test_json_roundtrip(self):
        c = BidiagonalChart((1, 0, 2), [0.0, 1.0, 2.5], [0.3, -0.7])
        back = BidiagonalChart.from_json(c.to_json())
        assert back.pi == c.pi
        np.testing.assert_array_equal(back.lambdas, c.lambdas)
        np.testing.assert_array_equal(back.betas, c.betas)
