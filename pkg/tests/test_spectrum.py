import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from dppsaddle import (NotPSDError, as_spectrum, dof_diagnostic, from_matrix,
                       gaussian_l_ensemble, load_matrix_csv, load_points_csv)
from dppsaddle.spectrum import Spectrum
from dppsaddle.validation import check_points, check_subset, check_symmetric


class TestSpectrum:
    def test_basic_properties(self):
        spec = as_spectrum([1.0, 1.0])
        assert spec.n == 2
        assert_allclose(spec.mu, 1.0)
        assert_allclose(spec.sigma2, 0.5)
        assert spec.n_positive == 2
        assert len(spec) == 2

    def test_preserves_caller_order(self):
        spec = as_spectrum([3.0, 1.0, 2.0])
        assert_allclose(spec.values, [3.0, 1.0, 2.0])

    def test_rank_ignores_round_off_tail(self):
        spec = as_spectrum([1.0, 0.5, 1e-14, 0.0])
        assert spec.n_positive == 3
        assert spec.rank() == 2

    def test_rejects_negative_values(self):
        with pytest.raises(ValueError):
            as_spectrum([1.0, -0.5])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            as_spectrum([1.0, np.inf])

    def test_rejects_matrix_input(self):
        with pytest.raises(ValueError):
            as_spectrum(np.eye(2))

    def test_values_are_write_protected(self):
        spec = as_spectrum([1.0, 2.0])
        with pytest.raises(ValueError):
            spec.values[0] = 5.0

    @given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=1,
                    max_size=30))
    @settings(max_examples=100, deadline=None)
    def test_sigma2_never_exceeds_mu(self, values):
        spec = as_spectrum(values)
        assert spec.sigma2 <= spec.mu + 1e-12


class TestGaussianEnsemble:
    def test_unit_diagonal_and_symmetry(self):
        rng = np.random.default_rng(0)
        ens = gaussian_l_ensemble(rng.standard_normal((7, 2)), tau=0.8)
        assert_allclose(np.diag(ens.matrix), np.ones(7))
        assert_allclose(ens.matrix, ens.matrix.T)

    def test_two_point_entry(self):
        pts = np.array([[0.0, 0.0], [3.0, 4.0]])  # distance 5
        ens = gaussian_l_ensemble(pts, tau=2.0)
        assert_allclose(ens.matrix[0, 1], np.exp(-25.0 / 8.0), rtol=1e-14)

    def test_one_dimensional_points_are_promoted(self):
        ens = gaussian_l_ensemble([0.0, 1.0, 2.0], tau=1.0)
        assert ens.n == 3
        assert_allclose(ens.matrix[0, 1], np.exp(-0.5))

    def test_spectrum_descending_and_trace(self):
        rng = np.random.default_rng(3)
        ens = gaussian_l_ensemble(rng.standard_normal((12, 2)), tau=1.0)
        lam = ens.spectrum.values
        assert (np.diff(lam) <= 1e-12).all()
        assert_allclose(lam.sum(), 12.0, rtol=1e-10)

    def test_rejects_bad_tau(self):
        with pytest.raises(ValueError):
            gaussian_l_ensemble(np.zeros((3, 2)), tau=0.0)


class TestFromMatrix:
    def test_reconstruction(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((6, 4))
        L = A @ A.T
        ens = from_matrix(L)
        rebuilt = (ens.eigenvectors * ens.spectrum.values) @ ens.eigenvectors.T
        assert_allclose(rebuilt, L, atol=1e-10)
        assert ens.rank() == 4

    def test_clips_round_off_negatives(self):
        U = np.linalg.qr(np.random.default_rng(1).standard_normal((4, 4)))[0]
        L = (U * np.array([2.0, 1.0, 1e-13, -1e-13])) @ U.T
        L = 0.5 * (L + L.T)
        ens = from_matrix(L)
        assert ens.spectrum.values.min() == 0.0

    def test_rejects_indefinite(self):
        with pytest.raises(NotPSDError):
            from_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            from_matrix(np.array([[1.0, 0.5], [0.1, 1.0]]))

    def test_diagonal_matrix_keeps_values(self):
        ens = from_matrix(np.diag([3.0, 1.0, 2.0]))
        assert_allclose(ens.spectrum.values, [3.0, 2.0, 1.0])

    @given(st.integers(min_value=1, max_value=6), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_random_gram_matrices_accepted(self, n, seed):
        A = np.random.default_rng(seed).standard_normal((n, n + 1))
        ens = from_matrix(A @ A.T)
        assert (ens.spectrum.values >= 0.0).all()
        assert_allclose(ens.spectrum.values.sum(), np.trace(A @ A.T),
                        rtol=1e-9)


def test_dof_diagnostic_flat_spectrum():
    # after rescaling by the top value a flat spectrum is all ones
    out = dof_diagnostic(as_spectrum([4.0] * 10))
    assert_allclose(out["mu"], 5.0)
    assert_allclose(out["sigma2"], 2.5)
    assert_allclose(out["trace_normalized"], 10.0)


def test_dof_diagnostic_zero_spectrum():
    out = dof_diagnostic(as_spectrum([0.0, 0.0]))
    assert out == {"mu": 0.0, "sigma2": 0.0, "trace_normalized": 0.0}


def test_csv_loaders_roundtrip(tmp_path):
    pts = np.array([[0.5, -1.0], [2.0, 0.25], [-3.0, 1.5]])
    p = tmp_path / "points.csv"
    np.savetxt(p, pts, delimiter=",")
    assert_allclose(load_points_csv(p), pts)
    m = tmp_path / "matrix.csv"
    np.savetxt(m, np.eye(3), delimiter=",")
    assert_allclose(load_matrix_csv(m), np.eye(3))


class TestValidationHelpers:
    def test_check_points_coerces_column(self):
        out = check_points([1.0, 2.0, 3.0])
        assert out.shape == (3, 1)

    def test_check_points_rejects_nan(self):
        with pytest.raises(ValueError):
            check_points([[np.nan, 0.0]])

    def test_check_subset_sorts_and_validates(self):
        out = check_subset((3, 1), 5)
        assert out.tolist() == [1, 3]
        with pytest.raises(ValueError):
            check_subset((1, 1), 5)
        with pytest.raises(ValueError):
            check_subset((5,), 5)

    def test_check_symmetric_tolerance(self):
        M = np.array([[1.0, 1.0], [1.0 + 1e-15, 1.0]])
        check_symmetric(M)
        with pytest.raises(ValueError):
            check_symmetric(np.array([[1.0, 1.0], [1.1, 1.0]]))
