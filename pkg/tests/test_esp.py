import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.optimize import brentq

from dppsaddle import (InfeasibleError, as_spectrum, esp_exact,
                       esp_leave_one_out, esp_recurrence, esp_saddlepoint,
                       esp_saddlepoint_all, first_overflow, psi_derivatives,
                       solve_saddlepoint)
from dppsaddle.esp import esp_suffix_table, log_esp_from_solution

positive_spectra = st.lists(
    st.floats(min_value=1e-3, max_value=1e3), min_size=2, max_size=25)


class TestExactTable:
    def test_one_two_three(self):
        table = esp_exact([1.0, 2.0, 3.0])
        assert_allclose(np.exp(table.values), [1.0, 6.0, 11.0, 6.0],
                        rtol=1e-13)

    def test_flat_spectrum_gives_binomials(self):
        table = esp_exact(np.ones(10))
        assert_allclose(np.exp(table.values),
                        [math.comb(10, k) for k in range(11)], rtol=1e-12)

    def test_strong_decay_stays_finite(self):
        # products like e^{-k(k+1)/2} underflow linear arithmetic long before
        # k = n; the log-domain recurrence never does
        table = esp_exact(np.exp(-np.arange(1.0, 121.0)))
        assert np.isfinite(table.values).all()
        assert_allclose(table[120], -np.sum(np.arange(1.0, 121.0)), rtol=1e-12)

    def test_zero_weights_truncate_support(self):
        table = esp_exact([2.0, 0.0, 1.0])
        assert_allclose(np.exp(table[1]), 3.0)
        assert_allclose(np.exp(table[2]), 2.0)
        assert table[3] == -np.inf

    @given(positive_spectra, st.floats(min_value=0.01, max_value=100.0))
    @settings(max_examples=80, deadline=None)
    def test_homogeneity(self, values, beta):
        lam = np.asarray(values)
        base = esp_exact(lam).values
        scaled = esp_exact(beta * lam).values
        shift = np.arange(lam.size + 1) * math.log(beta)
        assert_allclose(scaled, base + shift, rtol=1e-10, atol=1e-10)

    @given(positive_spectra)
    @settings(max_examples=80, deadline=None)
    def test_endpoint_identities(self, values):
        lam = np.asarray(values)
        table = esp_exact(lam)
        assert_allclose(table[1], math.log(lam.sum()), rtol=1e-12)
        assert_allclose(table[lam.size], np.log(lam).sum(), rtol=1e-12)


class TestLinearRecurrence:
    def test_overflow_for_growing_spectrum(self):
        raw = esp_recurrence(np.arange(1.0, 201.0), rescaled=False)
        k = first_overflow(raw)
        assert k == 131

    def test_rescaled_keeps_growing_spectrum_finite(self):
        log_table = esp_recurrence(np.arange(1.0, 201.0), rescaled=True)
        assert np.isfinite(log_table).all()
        assert_allclose(log_table, esp_exact(np.arange(1.0, 201.0)).values,
                        rtol=1e-10)

    def test_rescaled_still_underflows_for_decaying_spectrum(self):
        # rescaling guards the top of the range only
        log_table = esp_recurrence(np.exp(-np.arange(1.0, 151.0)),
                                   rescaled=True)
        assert np.isinf(log_table).any()

    def test_no_overflow_reported_when_finite(self):
        assert first_overflow(esp_recurrence([1.0, 2.0, 3.0])) is None


class TestSaddlepointSolver:
    def test_flat_spectrum_closed_form(self):
        # flat weights c: psi'(nu) = n * s with s = c e^nu/(1+c e^nu), so
        # nu* = log(k/(n-k)) - log c
        for c, n, k in [(2.0, 10, 3), (0.5, 8, 4), (7.0, 30, 29)]:
            sol = solve_saddlepoint([c] * n, k)
            assert_allclose(sol.nu_star, math.log(k / (n - k)) - math.log(c),
                            rtol=1e-9)

    def test_residual_meets_tolerance(self):
        spec = as_spectrum(np.arange(1.0, 201.0))
        for k in (1, 20, 100, 199):
            sol = solve_saddlepoint(spec, k)
            assert abs(sol.psi1 - k) <= 2e-8 * k

    def test_agrees_with_independent_root_finder(self):
        lam = np.exp(np.random.default_rng(11).uniform(-3, 3, size=40))
        spec = as_spectrum(lam)
        for k in (1, 5, 20, 39):
            sol = solve_saddlepoint(spec, k)
            ref = brentq(lambda nu: psi_derivatives(spec, nu).psi1 - k,
                         sol.nu_star - 5.0, sol.nu_star + 5.0, xtol=1e-12)
            assert_allclose(sol.nu_star, ref, atol=1e-8)

    def test_warm_start_converges_to_same_root(self):
        spec = as_spectrum(np.arange(1.0, 51.0))
        cold = solve_saddlepoint(spec, 25)
        warm = solve_saddlepoint(spec, 25, nu0=cold.nu_star + 0.3)
        assert_allclose(warm.nu_star, cold.nu_star, atol=1e-9)

    def test_infeasible_sizes_raise(self):
        with pytest.raises(InfeasibleError):
            solve_saddlepoint([1.0, 2.0, 3.0], 3)
        with pytest.raises(InfeasibleError):
            solve_saddlepoint([1.0, 0.0, 2.0], 2)

    def test_size_bounds_raise(self):
        with pytest.raises(ValueError):
            solve_saddlepoint([1.0, 2.0], 0)
        with pytest.raises(ValueError):
            solve_saddlepoint([1.0, 2.0], 3)


class TestPsiDerivatives:
    def test_finite_difference_agreement(self):
        spec = as_spectrum([0.3, 1.0, 4.0, 9.0])
        h = 1e-5
        for nu in (-1.0, 0.0, 0.7):
            at = psi_derivatives(spec, nu)
            up = psi_derivatives(spec, nu + h)
            dn = psi_derivatives(spec, nu - h)
            assert_allclose((up.psi - dn.psi) / (2 * h), at.psi1, rtol=1e-8)
            assert_allclose((up.psi1 - dn.psi1) / (2 * h), at.psi2, rtol=1e-8)
            assert_allclose((up.psi2 - dn.psi2) / (2 * h), at.psi3, rtol=1e-6,
                            atol=1e-9)

    def test_zero_tilt_values(self):
        lam = np.array([1.0, 3.0])
        at = psi_derivatives(as_spectrum(lam), 0.0)
        s = lam / (1.0 + lam)
        assert_allclose(at.psi, 0.0, atol=1e-15)
        assert_allclose(at.psi1, s.sum())
        assert_allclose(at.psi2, (s * (1 - s)).sum())
        assert_allclose(at.psi3, (s * (1 - s) * (1 - 2 * s)).sum())


class TestSaddlepointEsp:
    def test_small_example_ratio_frozen(self):
        log_e1, _ = esp_saddlepoint([1.0, 2.0, 3.0], 1)
        assert_allclose(math.exp(log_e1 - math.log(6.0)), 1.0903568390237326,
                        rtol=1e-12)

    def test_flat_ten_choose_five(self):
        log_e5, _ = esp_saddlepoint(np.ones(10), 5)
        ratio = math.exp(log_e5 - math.log(252.0))
        assert_allclose(ratio, 1.0253, atol=2e-4)

    def test_ratio_band_on_linear_spectrum(self):
        exact = esp_exact(np.arange(1.0, 6.0))
        saddle = esp_saddlepoint_all(np.arange(1.0, 6.0))
        ratios = np.exp(saddle.values[1:5] - exact.values[1:5])
        assert ratios.max() <= 1.09
        assert ratios.min() >= 1 / 1.09

    @given(positive_spectra, st.floats(min_value=0.05, max_value=20.0))
    @settings(max_examples=60, deadline=None)
    def test_homogeneity_of_saddlepoint(self, values, beta):
        lam = np.asarray(values)
        k = max(1, lam.size // 2)
        base, _ = esp_saddlepoint(lam, k)
        scaled, _ = esp_saddlepoint(beta * lam, k)
        assert_allclose(scaled, base + k * math.log(beta), rtol=1e-9,
                        atol=1e-9)

    def test_table_endpoints_and_failures(self):
        table = esp_saddlepoint_all([1.0, 2.0, 3.0, 0.0, 0.0])
        assert table[0] == 0.0
        assert table[5] == -np.inf  # zero weights kill the top coefficient
        assert math.isnan(table[3])  # no interior tilt reaches k = n_positive
        assert table.failures == (3,)
        assert table[4] == -np.inf

    def test_full_table_tracks_exact_within_band(self):
        lam = np.exp(-np.arange(1.0, 101.0))
        exact = esp_exact(lam).values[1:100]
        saddle = esp_saddlepoint_all(lam).values[1:100]
        ratios = np.exp(saddle - exact)
        assert np.isfinite(ratios).all()
        assert np.abs(np.log(ratios)).max() <= math.log(1.09)

    def test_solution_reuse_matches_direct_call(self):
        spec = as_spectrum([0.5, 1.5, 2.5, 3.5])
        sol = solve_saddlepoint(spec, 2)
        assert_allclose(log_esp_from_solution(spec, sol),
                        esp_saddlepoint(spec, 2)[0], rtol=1e-14)


class TestLeaveOneOut:
    @given(st.lists(st.floats(min_value=0.01, max_value=50.0), min_size=3,
                    max_size=12),
           st.integers(min_value=0, max_value=4))
    @settings(max_examples=80, deadline=None)
    def test_matches_deleted_recurrence(self, values, r):
        lam = np.asarray(values)
        if r > lam.size - 1:
            r = lam.size - 1
        out = esp_leave_one_out(lam, r)
        for i in range(lam.size):
            expected = esp_exact(np.delete(lam, i))[r]
            assert_allclose(out[i], expected, rtol=1e-10, atol=1e-10)

    def test_order_zero_is_log_one(self):
        assert_allclose(esp_leave_one_out([1.0, 2.0], 0), np.zeros(2))

    def test_rejects_out_of_range_order(self):
        with pytest.raises(ValueError):
            esp_leave_one_out([1.0, 2.0], 2)


def test_suffix_table_rows_match_suffix_spectra():
    lam = np.array([0.5, 2.0, 1.0, 3.0])
    suffix = esp_suffix_table(lam, 3)
    assert suffix.shape == (5, 4)
    assert_allclose(suffix[0, :], esp_exact(lam).values[:4], rtol=1e-12)
    # row t is the table of the suffix starting at t; orders beyond the
    # suffix length are -inf
    assert_allclose(suffix[2, :3], esp_exact(lam[2:]).values, rtol=1e-12)
    assert suffix[2, 3] == -np.inf
    assert_allclose(suffix[4, 0], 0.0)
    assert (suffix[4, 1:] == -np.inf).all()
