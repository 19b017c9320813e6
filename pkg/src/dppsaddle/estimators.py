"""Estimator-style wrappers around the functional core.

These follow the scikit-learn parameter conventions (constructor stores
hyperparameters verbatim, ``fit`` learns ``*_`` attributes, ``get_params`` /
``set_params`` work with ``sklearn.base.clone``) so the samplers and the
bandwidth fit drop into pipelines and grid searches.  They add no numerics
of their own.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .inference import fit_tau, tau_grid
from .kdpp import first_order_inclusion, sample_kdpp
from .spectrum import from_matrix, gaussian_l_ensemble
from .validation import as_rng, check_points, check_subset


class KDPP(BaseEstimator):
    """Fixed-size repulsive subset sampler over fitted data.

    Parameters
    ----------
    k : int
        Subset size to draw.
    tau : float, default 1.0
        Gaussian kernel bandwidth (ignored for precomputed kernels).
    kernel : {"rbf", "precomputed"}, default "rbf"
        With "rbf", ``fit`` receives points and builds the similarity
        matrix; with "precomputed", ``fit`` receives the matrix itself.
    conditionals : {"auto", "exact", "approx"}, default "auto"
        How the spectral stage of the sampler computes its conditionals.
    random_state : int, Generator or None
        Seeds the sampler stream created at ``fit`` time.
    """

    def __init__(self, k=None, tau=1.0, kernel="rbf", conditionals="auto",
                 random_state=None):
        self.k = k
        self.tau = tau
        self.kernel = kernel
        self.conditionals = conditionals
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.k is None:
            raise ValueError("k must be set before fitting")
        if self.kernel == "rbf":
            X = check_points(X)
            self.ensemble_ = gaussian_l_ensemble(X, self.tau)
            self.n_features_in_ = X.shape[1]
        elif self.kernel == "precomputed":
            self.ensemble_ = from_matrix(X)
        else:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        self.random_state_ = as_rng(self.random_state)
        return self

    def sample(self, n_draws=1):
        """Draw ``n_draws`` subsets; returns a list of index arrays."""
        self._check_fitted()
        return sample_kdpp(self.ensemble_, self.k, rng=self.random_state_,
                           conditionals=self.conditionals, size=n_draws)

    def inclusion_probabilities(self, method="corrected"):
        """Per-item membership probabilities under the fitted model."""
        self._check_fitted()
        return first_order_inclusion(self.ensemble_, self.k, method=method)

    def _check_fitted(self):
        if not hasattr(self, "ensemble_"):
            raise RuntimeError("this estimator is not fitted yet; call fit")


class BandwidthMLE(BaseEstimator):
    """Maximum-likelihood bandwidth selection from one observed subset.

    ``fit(X, y)`` takes the point cloud and the observed subset's indices,
    scans a log-spaced bandwidth grid, and stores the fixed-size and
    profiled varying-size likelihood curves.

    Parameters
    ----------
    grid_lo, grid_hi : float or None
        Grid endpoints.  When both are None the grid spans a factor of ten
        around the median pairwise distance of the fitted points.
    grid_points : int, default 40
        Number of grid points.
    esp_method : {"auto", "exact", "saddlepoint"}, default "auto"
        Normalizer used by the fixed-size curve.
    """

    def __init__(self, grid_lo=None, grid_hi=None, grid_points=40,
                 esp_method="auto"):
        self.grid_lo = grid_lo
        self.grid_hi = grid_hi
        self.grid_points = grid_points
        self.esp_method = esp_method

    def _grid(self, points):
        if self.grid_lo is None and self.grid_hi is None:
            diffs = points[:, None, :] - points[None, :, :]
            dist = np.sqrt(np.einsum("ijk,ijk->ij", diffs, diffs))
            scale = float(np.median(dist[dist > 0]))
            return tau_grid(scale, num=self.grid_points)
        if self.grid_lo is None or self.grid_hi is None:
            raise ValueError("set both grid endpoints or neither")
        return np.geomspace(self.grid_lo, self.grid_hi, self.grid_points)

    def fit(self, X, y):
        X = check_points(X)
        observed = check_subset(y, X.shape[0])
        self.curve_ = fit_tau(X, observed, self._grid(X),
                              esp_method=self.esp_method)
        self.best_tau_ = self.curve_.best_tau_kdpp
        self.best_tau_dpp_ = self.curve_.best_tau_dpp
        self.n_features_in_ = X.shape[1]
        return self
