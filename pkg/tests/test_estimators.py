import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.distance import pdist
from sklearn.base import clone

from dppsaddle import KDPP, BandwidthMLE, gaussian_l_ensemble, sample_kdpp


def points(n=20, seed=0):
    return np.random.default_rng(seed).standard_normal((n, 2))


class TestKDPPEstimator:
    def test_params_survive_clone(self):
        est = KDPP(k=4, tau=0.5, kernel="rbf", conditionals="exact",
                   random_state=7)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
        assert cloned.get_params()["k"] == 4

    def test_set_params_chains(self):
        est = KDPP(k=2).set_params(tau=2.0, random_state=1)
        assert est.tau == 2.0 and est.random_state == 1

    def test_fit_builds_the_ensemble(self):
        est = KDPP(k=3, tau=0.8).fit(points())
        assert est.ensemble_.n == 20
        assert est.n_features_in_ == 2

    def test_sample_sizes_and_determinism(self):
        X = points()
        a = KDPP(k=5, random_state=11).fit(X).sample(4)
        b = KDPP(k=5, random_state=11).fit(X).sample(4)
        assert len(a) == 4
        for x, y in zip(a, b):
            assert x.size == 5
            assert x.tolist() == y.tolist()

    def test_sample_matches_functional_core(self):
        X = points(seed=3)
        est = KDPP(k=3, tau=1.0, random_state=21).fit(X)
        expected = sample_kdpp(gaussian_l_ensemble(X, 1.0), 3,
                               rng=np.random.default_rng(21), size=2)
        got = est.sample(2)
        for x, y in zip(got, expected):
            assert x.tolist() == y.tolist()

    def test_precomputed_kernel(self):
        L = gaussian_l_ensemble(points(seed=4), 0.7).matrix
        est = KDPP(k=2, kernel="precomputed", random_state=0).fit(np.array(L))
        draw = est.sample(1)[0]
        assert draw.size == 2

    def test_inclusion_probability_sums(self):
        est = KDPP(k=4, tau=0.9).fit(points(seed=5))
        basic = est.inclusion_probabilities(method="basic")
        assert_allclose(basic.sum(), 4, atol=1e-8)
        corrected = est.inclusion_probabilities()
        assert abs(corrected.sum() - 4) < 0.05

    def test_missing_k_rejected_at_fit(self):
        with pytest.raises(ValueError):
            KDPP().fit(points())

    def test_unknown_kernel_rejected(self):
        with pytest.raises(ValueError):
            KDPP(k=2, kernel="poly").fit(points())

    def test_unfitted_access_raises(self):
        est = KDPP(k=2)
        with pytest.raises(RuntimeError):
            est.sample()
        with pytest.raises(RuntimeError):
            est.inclusion_probabilities()


class TestBandwidthMLE:
    def test_fit_with_explicit_grid(self):
        est = BandwidthMLE(grid_lo=0.2, grid_hi=2.0, grid_points=12)
        est.fit(points(seed=6), [0, 4, 9, 15])
        assert est.curve_.tau.size == 12
        assert_allclose(est.curve_.tau[0], 0.2)
        assert_allclose(est.curve_.tau[-1], 2.0)
        assert est.best_tau_ in est.curve_.tau
        assert est.best_tau_dpp_ in est.curve_.tau

    def test_default_grid_spans_the_median_distance(self):
        X = points(seed=7)
        est = BandwidthMLE(grid_points=10).fit(X, [0, 3, 12])
        scale = float(np.median(pdist(X)))
        assert_allclose(est.curve_.tau[0], scale / 10, rtol=1e-12)
        assert_allclose(est.curve_.tau[-1], scale * 10, rtol=1e-12)

    def test_single_endpoint_is_rejected(self):
        with pytest.raises(ValueError):
            BandwidthMLE(grid_lo=0.5).fit(points(), [0, 1])

    def test_clone_keeps_grid_settings(self):
        est = BandwidthMLE(grid_lo=0.1, grid_hi=1.0, grid_points=7,
                           esp_method="exact")
        assert clone(est).get_params() == est.get_params()

    def test_curves_agree_with_each_other(self):
        # the two stored best bandwidths come from curves over one grid, so
        # they can differ by at most the grid span
        est = BandwidthMLE(grid_lo=0.3, grid_hi=3.0, grid_points=20)
        est.fit(points(30, seed=8), [0, 7, 14, 21, 28])
        i = list(est.curve_.tau).index(est.best_tau_)
        j = list(est.curve_.tau).index(est.best_tau_dpp_)
        assert abs(i - j) <= 2
