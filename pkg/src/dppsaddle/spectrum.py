"""L-ensembles and their spectra.

An L-ensemble is a symmetric positive semi-definite matrix L defining a
determinantal distribution over subsets; everything downstream works on its
eigendecomposition.  This module builds ensembles from point clouds (via the
squared-exponential kernel) or raw matrices, and exposes spectral summaries
of the Bernoulli-sum representation: mu = sum lam_i/(1+lam_i) is the expected
sample size of the unit-tilt process and sigma2 = sum lam_i/(1+lam_i)^2 its
variance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotPSDError
from .validation import check_points, check_spectrum_values, check_symmetric

# Relative threshold below which an eigenvalue counts as a null direction.
RANK_RTOL = 1e-12
# Negative eigenvalues beyond this (relative) magnitude mean the input was
# genuinely not PSD rather than noisy.
PSD_RTOL = 1e-6


@dataclass(frozen=True)
class Spectrum:
    """A vector of nonnegative weights, in caller order.

    Item indices are meaningful (diagonal models address items by position),
    so construction never reorders the values.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", check_spectrum_values(self.values))
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def mu(self) -> float:
        """Expected size of the varying-size process, sum lam/(1+lam)."""
        lam = self.values
        return float(np.sum(lam / (1.0 + lam)))

    @property
    def sigma2(self) -> float:
        """Size variance of the varying-size process, sum lam/(1+lam)^2."""
        lam = self.values
        return float(np.sum(lam / (1.0 + lam) ** 2))

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.values > 0))

    def rank(self, rtol: float = RANK_RTOL) -> int:
        """Number of values above ``rtol`` times the largest value."""
        top = self.values.max()
        if top <= 0:
            return 0
        return int(np.count_nonzero(self.values > rtol * top))

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"Spectrum(n={self.n}, mu={self.mu:.4g}, sigma2={self.sigma2:.4g})"


def as_spectrum(spectrum) -> Spectrum:
    """Coerce an array-like or Spectrum to a Spectrum."""
    if isinstance(spectrum, Spectrum):
        return spectrum
    return Spectrum(np.asarray(spectrum, dtype=float))


@dataclass(frozen=True)
class LEnsemble:
    """A PSD matrix together with its cached eigendecomposition.

    ``spectrum`` holds the eigenvalues sorted descending, ``eigenvectors`` the
    matching orthonormal columns.  Immutable after construction; safe to share
    across threads.
    """

    matrix: np.ndarray = field(repr=False)
    spectrum: Spectrum
    eigenvectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def rank(self, rtol: float = RANK_RTOL) -> int:
        return self.spectrum.rank(rtol)


def _decompose(L: np.ndarray) -> LEnsemble:
    eigvals, eigvecs = np.linalg.eigh(L)
    # eigh returns ascending order; store descending.
    eigvals = eigvals[::-1].copy()
    eigvecs = eigvecs[:, ::-1].copy()
    top = max(float(eigvals[0]), 0.0)
    if eigvals[-1] < -PSD_RTOL * top:
        raise NotPSDError(
            f"matrix is not positive semi-definite: eigenvalue {eigvals[-1]:.3e} "
            f"below -{PSD_RTOL:g} * lambda_max"
        )
    np.clip(eigvals, 0.0, None, out=eigvals)
    return LEnsemble(matrix=L, spectrum=Spectrum(eigvals), eigenvectors=eigvecs)


def gaussian_l_ensemble(points, tau: float) -> LEnsemble:
    """Squared-exponential L-ensemble L_ij = exp(-||x_i - x_j||^2 / (2 tau^2)).

    Parameters
    ----------
    points : array-like, shape (n, d)
        Point coordinates; a 1-D array is treated as points on the line.
    tau : float
        Positive kernel bandwidth.
    """
    pts = check_points(points)
    if not (np.isfinite(tau) and tau > 0):
        raise ValueError(f"tau must be a positive real, got {tau!r}")
    diff = pts[:, None, :] - pts[None, :, :]
    sq_dist = np.einsum("ijk,ijk->ij", diff, diff)
    L = np.exp(-sq_dist / (2.0 * tau * tau))
    np.fill_diagonal(L, 1.0)
    return _decompose(L)


def from_matrix(matrix) -> LEnsemble:
    """Build an ensemble from a raw symmetric PSD matrix.

    Eigenvalues below ``-1e-6 * lambda_max`` raise :class:`NotPSDError`;
    negative round-off above that threshold is clamped to zero.
    """
    L = check_symmetric(matrix).copy()
    return _decompose(L)


def dof_diagnostic(spectrum) -> dict:
    """Degrees-of-freedom summary of the spectrum rescaled to lambda_max = 1.

    Returns ``mu``, ``sigma2`` and ``trace_normalized`` of lam/lam_max.  A
    slowly growing trace_normalized warns that the matched varying-size
    process concentrates too weakly for fixed-size/varying-size equivalence
    to be a good approximation.
    """
    spec = as_spectrum(spectrum)
    top = spec.values.max()
    if top <= 0:
        return {"mu": 0.0, "sigma2": 0.0, "trace_normalized": 0.0}
    scaled = Spectrum(spec.values / top)
    return {
        "mu": scaled.mu,
        "sigma2": scaled.sigma2,
        "trace_normalized": float(scaled.values.sum()),
    }


def load_points_csv(path) -> np.ndarray:
    """Read a point cloud from CSV: one row per point, d columns, no header."""
    pts = np.loadtxt(path, delimiter=",", ndmin=2)
    return check_points(pts)


def load_matrix_csv(path) -> np.ndarray:
    """Read a square matrix from CSV (n rows of n comma-separated values)."""
    return np.loadtxt(path, delimiter=",", ndmin=2)
