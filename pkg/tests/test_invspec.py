import numpy as np
import pytest

from todalab import (
    DegeneracyError,
    DegenerateSpectrumError,
    FlowFunction,
    SpectralData,
    SymTridiagonal,
    integrate,
    moser_evolve,
    norming_constants,
    reconstruct,
    symes_solve,
)
from todalab.sampling import random_jacobi_entries, random_unit_positive, rng

IDENTITY = FlowFunction.identity()
ROOT2 = 1.0 / np.sqrt(2.0)


def random_jacobi(gen, n):
    a, b = random_jacobi_entries(gen, n)
    return SymTridiagonal(a, b)


class TestSpectralData:
    def test_invariants_enforced(self):
        with pytest.raises(DegenerateSpectrumError):
            SpectralData([0.0, 0.0], [ROOT2, ROOT2])
        with pytest.raises(DegeneracyError):
            SpectralData([0.0, 1.0], [-ROOT2, ROOT2])
        with pytest.raises(ValueError):
            SpectralData([0.0, 1.0], [1.0, 1.0])

    def test_json_roundtrip(self):
        sd = SpectralData([0.0, 2.0], [ROOT2, ROOT2])
        back = SpectralData.from_json(sd.to_json())
        np.testing.assert_array_equal(back.lambdas, sd.lambdas)
        np.testing.assert_array_equal(back.v, sd.v)


class TestNormingConstants:
    def test_closed_form_2x2(self):
        sd = norming_constants(SymTridiagonal([1.0, 1.0], [1.0]))
        np.testing.assert_allclose(sd.lambdas, [0.0, 2.0], atol=1e-14)
        np.testing.assert_allclose(sd.v, [ROOT2, ROOT2], atol=1e-14)

    def test_antidiagonal_family(self):
        for b in (0.3, 1.0, 2.5):
            sd = norming_constants(SymTridiagonal([0.0, 0.0], [b]))
            np.testing.assert_allclose(sd.lambdas, [-b, b], atol=1e-13)
            np.testing.assert_allclose(sd.v, [ROOT2, ROOT2], atol=1e-13)

    def test_spectral_gaps_on_random_jacobi(self):
        gen = rng(30)
        for _ in range(10):
            sd = norming_constants(random_jacobi(gen, 8))
            assert np.min(np.diff(sd.lambdas)) >= 1e-8
            assert np.all(sd.v > 0)
            assert abs(sd.v @ sd.v - 1.0) <= 1e-12

    def test_non_jacobi_rejected(self):
        with pytest.raises(ValueError):
            norming_constants(SymTridiagonal([0.0, 0.0], [-1.0]))


class TestReconstruct:
    def test_inverts_closed_form_example(self):
        j = reconstruct(SpectralData([0.0, 2.0], [ROOT2, ROOT2]))
        np.testing.assert_allclose(j.a, [1.0, 1.0], atol=1e-13)
        np.testing.assert_allclose(j.b, [1.0], atol=1e-13)

    def test_roundtrip_from_matrix(self):
        gen = rng(31)
        for n in (2, 4, 7, 10):
            j = random_jacobi(gen, n)
            back = reconstruct(norming_constants(j))
            np.testing.assert_allclose(back.a, j.a, atol=1e-10)
            np.testing.assert_allclose(back.b, j.b, atol=1e-10)

    def test_roundtrip_from_data(self):
        sd = SpectralData([1.0, 2.0, 3.0], np.ones(3) / np.sqrt(3.0))
        j = reconstruct(sd)
        assert j.is_jacobi
        back = norming_constants(j)
        np.testing.assert_allclose(back.lambdas, sd.lambdas, atol=1e-10)
        np.testing.assert_allclose(back.v, sd.v, atol=1e-10)


class TestMoserEvolve:
    def test_time_zero(self):
        sd = SpectralData([0.0, 2.0], [ROOT2, ROOT2])
        out = moser_evolve(sd, IDENTITY, 0.0)
        np.testing.assert_array_equal(out.v, sd.v)
        np.testing.assert_array_equal(out.lambdas, sd.lambdas)

    def test_group_law(self):
        gen = rng(32)
        sd = norming_constants(random_jacobi(gen, 5))
        one = moser_evolve(moser_evolve(sd, IDENTITY, 0.9), IDENTITY, 1.6)
        two = moser_evolve(sd, IDENTITY, 2.5)
        np.testing.assert_allclose(one.v, two.v, atol=1e-12)

    def test_matches_integrated_flow(self):
        gen = rng(33)
        j = random_jacobi(gen, 4)
        sd = norming_constants(j)
        for t in (1.0, 5.0):
            evolved = reconstruct(moser_evolve(sd, IDENTITY, t))
            direct = integrate(j.to_dense(), IDENTITY, t, tol=1e-10).states[-1]
            assert np.abs(evolved.to_dense() - direct).max() <= 1e-6

    def test_conjugation_consistency_vs_symes(self):
        gen = rng(34)
        cubic = FlowFunction.polynomial([0.5, -1.0, 0.0, 0.25])
        for f in (IDENTITY, cubic):
            for t in (0.5, 1.0, 3.0):
                j = random_jacobi(gen, 6)
                evolved = reconstruct(moser_evolve(norming_constants(j), f, t))
                direct = symes_solve(j.to_dense(), f, t)
                assert np.abs(evolved.to_dense() - direct).max() <= 1e-6

    def test_large_time_overflow_guarded(self):
        sd = SpectralData([0.0, 10.0], [ROOT2, ROOT2])
        out = moser_evolve(sd, IDENTITY, 50.0)
        assert np.isfinite(out.v).all()
        np.testing.assert_allclose(out.v[1], 1.0, atol=1e-12)
