"""General fixed-size models through the spectral mixture.

A size-k sample from an L-ensemble can be drawn in two stages: pick k
eigenvalue indices from the diagonal model over the spectrum, then sample a
projection ensemble on the corresponding eigenvectors.  Every quantity here
rides on that decomposition:

* ``match_dpp`` builds the marginal kernel K of the varying-size process
  whose tilt makes the expected size exactly k (so trace K = k);
* first-order inclusion probabilities push diagonal estimates through the
  squared eigenvector coordinates;
* high-order estimates are minors det K_alpha, optionally rescaled by
  C(k, m) / e_m(eta) to undo the size-k conditioning bias;
* samplers realize both stages exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .diagonal import (
    _make_diagonal_sampler,
    inclusion_basic,
    inclusion_corrected_all,
)
from .esp import esp_exact, solve_saddlepoint
from .exceptions import DegenerateError, InfeasibleError
from .spectrum import LEnsemble, RANK_RTOL, Spectrum
from .validation import as_rng, check_size, check_subset

# Minors above this order are refused: the estimates' bias grows with m and
# the correction factor's ESP is all the theory covers at desk scale.
MAX_MINOR_ORDER = 8
# Orthonormality tolerance for projection bases.
ORTHO_ATOL = 1e-8


@dataclass(frozen=True)
class MarginalKernel:
    """Marginal kernel K = U diag(eta) U^T of a (possibly tilted) ensemble.

    ``eta`` holds the per-eigenvector selection probabilities; ``nu`` the
    tilt that produced them (+inf for a pure projection kernel).
    """

    matrix: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    nu: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def expected_size(self) -> float:
        return float(self.eta.sum())


def _assemble(ensemble: LEnsemble, eta: np.ndarray, nu: float) -> MarginalKernel:
    U = ensemble.eigenvectors
    K = (U * eta) @ U.T
    K = 0.5 * (K + K.T)
    return MarginalKernel(matrix=K, eta=eta, nu=nu)


def _projection_eta(spec: Spectrum) -> np.ndarray:
    """Indicator of the numerically retained eigenvalues (the nu -> inf limit)."""
    if spec.values.size == 0 or spec.values[0] <= 0:
        return np.zeros(spec.n)
    return (spec.values > RANK_RTOL * spec.values[0]).astype(float)


def marginal_kernel(ensemble: LEnsemble, nu: float = 0.0) -> MarginalKernel:
    """Marginal kernel of the varying-size process with tilt ``nu``.

    eta_i = lam_i e^nu / (1 + lam_i e^nu); p(alpha in X) = det K_alpha.
    """
    lam = ensemble.spectrum.values
    if math.isinf(nu) and nu > 0:
        eta = _projection_eta(ensemble.spectrum)
    else:
        eta = np.zeros(lam.size)
        pos = lam > 0
        eta[pos] = expit(nu + np.log(lam[pos]))
    return _assemble(ensemble, eta, float(nu))


def match_dpp(ensemble: LEnsemble, k: int) -> MarginalKernel:
    """Marginal kernel of the varying-size process matched to size k.

    Solves for the tilt with expected size k, so trace K = k up to solver
    tolerance.  When k equals the numerical rank the tilt diverges and K is
    the projection onto the retained eigenvectors (eta is a 0/1 vector).
    """
    k = check_size(k, ensemble.n)
    spec = ensemble.spectrum
    rank = spec.rank()
    if k == rank:
        return _assemble(ensemble, _projection_eta(spec), math.inf)
    if k > rank:
        # below-threshold eigenvalues are round-off, not usable rank
        raise InfeasibleError(
            f"cannot match expected size {k}: spectrum has numerical rank {rank}")
    solution = solve_saddlepoint(spec, k)
    eta = np.zeros(spec.n)
    pos = spec.values > 0
    eta[pos] = expit(solution.nu_star + np.log(spec.values[pos]))
    return _assemble(ensemble, eta, solution.nu_star)


def first_order_inclusion(ensemble: LEnsemble, k: int,
                          method: str = "basic") -> np.ndarray:
    """Per-item inclusion probability estimates for the size-k ensemble.

    The diagonal-model estimate over the eigenvalues (basic tilted
    probabilities or their corrected version) is transported to items by
    p_i = sum_j U_ij^2 pi_j.  At k equal to the numerical rank both methods
    return the exact projection diagonal.
    """
    k = check_size(k, ensemble.n)
    if method not in ("basic", "corrected"):
        raise ValueError(f"method must be basic|corrected, got {method!r}")
    spec = ensemble.spectrum
    U2 = ensemble.eigenvectors ** 2
    rank = spec.rank()
    if k > rank:
        raise InfeasibleError(
            f"cannot estimate size-{k} inclusions: spectrum has numerical rank {rank}")
    if k == rank:
        pi = _projection_eta(spec)
    elif method == "basic":
        pi = inclusion_basic(spec, k)
    else:
        pi = inclusion_corrected_all(spec, k)
    return np.clip(U2 @ pi, 0.0, 1.0)


def high_order_inclusion(ensemble: LEnsemble, k: int, alpha,
                         corrected: bool = True) -> float:
    """Inclusion probability estimate for a subset alpha, |alpha| <= 8.

    The base estimate is the matched-kernel minor det K_alpha.  The corrected
    variant multiplies by C(k, m) / e_m(eta), which restores the exact sum
    rule sum_{|alpha|=m} p(alpha) = C(k, m) of the size-k model; at m = 1 the
    factor is identically 1.
    """
    k = check_size(k, ensemble.n)
    alpha = check_subset(alpha, ensemble.n)
    m = alpha.size
    if m > MAX_MINOR_ORDER:
        raise ValueError(
            f"minor order {m} exceeds the supported maximum {MAX_MINOR_ORDER}")
    if m > k:
        return 0.0
    kernel = match_dpp(ensemble, k)
    minor = kernel.matrix[np.ix_(alpha, alpha)]
    det = float(np.linalg.det(minor))
    det = max(det, 0.0)  # round-off on PSD minors only ever dips to ~-1e-12
    if not corrected:
        return min(det, 1.0)
    log_em = esp_exact(Spectrum(kernel.eta))[m]
    if np.isinf(log_em):
        raise DegenerateError(f"e_{m}(eta) = 0: kernel rank below {m}")
    factor = math.exp(math.log(math.comb(k, m)) - log_em)
    return float(min(det * factor, 1.0))


def sample_projection_dpp(basis, rng=None) -> np.ndarray:
    """Exact draw from the projection ensemble of an orthonormal basis.

    ``basis`` is n x k with orthonormal columns; the sample law is
    p(X) = det(basis_X)^2 over size-k subsets.  At step t an item is chosen
    with probability (squared residual row norm) / (k - t + 1), then every
    row is orthogonalized against the chosen row's direction; residual norms
    are recomputed from scratch each step.
    """
    V = np.array(basis, dtype=float)
    rng = as_rng(rng)
    if V.ndim != 2:
        raise ValueError(f"basis must be 2-D, got shape {V.shape}")
    n, k = V.shape
    if k == 0:
        return np.asarray([], dtype=np.intp)
    if k > n:
        raise ValueError(f"basis has more columns ({k}) than rows ({n})")
    gram_err = np.abs(V.T @ V - np.eye(k)).max()
    if gram_err > ORTHO_ATOL:
        raise ValueError(
            f"basis columns are not orthonormal (max Gram deviation {gram_err:.2e})")

    chosen: list[int] = []
    for _ in range(k):
        norms = np.einsum("ij,ij->i", V, V)
        norms[chosen] = 0.0
        total = norms.sum()
        if not (total > 0):
            raise DegenerateError("projection sampler ran out of mass "
                                  "(numerically rank-deficient basis)")
        r = rng.random() * total
        i = int(np.searchsorted(np.cumsum(norms), r, side="right"))
        i = min(i, n - 1)
        while norms[i] == 0.0:  # guard against round-off at the boundary
            i -= 1
        direction = V[i] / math.sqrt(norms[i])
        V -= np.outer(V @ direction, direction)
        chosen.append(i)
    return np.sort(np.asarray(chosen, dtype=np.intp))


def sample_kdpp(ensemble: LEnsemble, k: int, rng=None,
                conditionals: str = "auto", projection_rng=None,
                size: int | None = None):
    """Exact size-k draw(s) from the ensemble.

    Stage one draws k eigenvalue indices from the diagonal model over the
    spectrum (``conditionals`` as in :func:`sample_diagonal_kdpp`); stage two
    samples the projection ensemble of the selected eigenvectors.  Separate
    generators may be supplied per stage so that extending one stream cannot
    shift the other.  ``size=None`` returns one index array, an integer a
    list of draws sharing stage-one tables.
    """
    k = check_size(k, ensemble.n)
    rng = as_rng(rng)
    proj_rng = rng if projection_rng is None else as_rng(projection_rng)
    draw_eigen = _make_diagonal_sampler(ensemble.spectrum, k, rng, conditionals)

    def draw() -> np.ndarray:
        eig_idx = draw_eigen()
        return sample_projection_dpp(ensemble.eigenvectors[:, eig_idx], proj_rng)

    if size is None:
        return draw()
    if size < 0:
        raise ValueError(f"size must be nonnegative, got {size}")
    return [draw() for _ in range(size)]


def sample_dpp(ensemble: LEnsemble, nu: float = 0.0, rng=None,
               projection_rng=None) -> np.ndarray:
    """Exact draw from the varying-size process with tilt ``nu``.

    Eigenvectors enter independently with probabilities eta_i; the projection
    stage then turns the selected directions into items.  The sample size is
    random with mean sum(eta) and variance sum(eta (1 - eta)).
    """
    rng = as_rng(rng)
    proj_rng = rng if projection_rng is None else as_rng(projection_rng)
    lam = ensemble.spectrum.values
    if math.isinf(nu) and nu > 0:
        eta = _projection_eta(ensemble.spectrum)
    else:
        eta = np.zeros(lam.size)
        pos = lam > 0
        eta[pos] = expit(nu + np.log(lam[pos]))
    keep = rng.random(lam.size) < eta
    if not keep.any():
        return np.asarray([], dtype=np.intp)
    basis = ensemble.eigenvectors[:, keep]
    return sample_projection_dpp(basis, proj_rng)
