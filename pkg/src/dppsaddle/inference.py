"""Bandwidth inference for Gaussian-kernel subset models.

Two likelihoods share one spectral decomposition per candidate bandwidth:

* the fixed-size log-likelihood  log det L_X - log e_k(lambda), and
* the varying-size log-likelihood profiled over the size-tilt parameter,
  sup_nu [log det L_X + nu k - sum_i log(1 + lambda_i e^nu)].

The profile supremum is attained at the same saddlepoint nu* used by the
approximate normalizer, so the two curves differ by exactly
-0.5 * log(2 pi psi''(nu*)) whenever the fixed-size curve uses the
saddlepoint normalizer.  ``gap_residual`` tracks how far float arithmetic
drifts from that identity (it should sit at round-off level).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .esp import esp_exact, log_esp_from_solution, solve_saddlepoint
from .exceptions import ConvergenceError, DegenerateError, InfeasibleError
from .spectrum import LEnsemble, gaussian_l_ensemble
from .validation import check_points, check_subset

# Below this ground-set size the fixed-size normalizer defaults to the exact
# summation recurrence instead of the saddlepoint approximation.
ESP_AUTO_MAX_N = 64


def _logdet_minor(matrix: np.ndarray, subset: np.ndarray) -> float:
    sign, logabs = np.linalg.slogdet(matrix[np.ix_(subset, subset)])
    return float(logabs) if sign > 0 else -math.inf


def _resolve_method(esp_method: str, n: int) -> str:
    if esp_method == "auto":
        return "exact" if n <= ESP_AUTO_MAX_N else "saddlepoint"
    if esp_method not in ("exact", "saddlepoint"):
        raise ValueError(f"unknown esp_method {esp_method!r}")
    return esp_method


@dataclass(frozen=True)
class LikelihoodCurve:
    """Per-bandwidth log-likelihoods on a grid.

    Rows with ``feasible`` False had no interior saddlepoint (the observed
    size reached the spectrum's support); their profile value and residual
    are NaN.
    """

    tau: np.ndarray = field(repr=False)
    loglik_kdpp: np.ndarray = field(repr=False)
    loglik_dpp_profile: np.ndarray = field(repr=False)
    gap_residual: np.ndarray = field(repr=False)
    feasible: np.ndarray = field(repr=False)
    k: int
    n: int
    esp_method: str

    def _argmax(self, values: np.ndarray) -> int:
        usable = self.feasible & np.isfinite(values)
        if not usable.any():
            raise DegenerateError("no feasible grid point with a finite "
                                  "log-likelihood")
        idx = np.flatnonzero(usable)
        return int(idx[np.argmax(values[idx])])

    @property
    def best_index_kdpp(self) -> int:
        return self._argmax(self.loglik_kdpp)

    @property
    def best_index_dpp(self) -> int:
        return self._argmax(self.loglik_dpp_profile)

    @property
    def best_tau_kdpp(self) -> float:
        return float(self.tau[self.best_index_kdpp])

    @property
    def best_tau_dpp(self) -> float:
        return float(self.tau[self.best_index_dpp])


def tau_grid(tau0: float, num: int = 40, span: float = 10.0) -> np.ndarray:
    """Log-spaced bandwidth grid [tau0/span, tau0*span]."""
    if tau0 <= 0 or span <= 1 or num < 2:
        raise ValueError("need tau0 > 0, span > 1 and num >= 2")
    return np.geomspace(tau0 / span, tau0 * span, num)


def _curve_point(ensemble: LEnsemble, observed: np.ndarray, method: str,
                 ) -> tuple[float, float, float, bool]:
    """One grid point: (loglik_kdpp, loglik_dpp_profile, gap_residual, feasible)."""
    k = observed.size
    spec = ensemble.spectrum
    logdet = _logdet_minor(ensemble.matrix, observed)

    feasible = True
    profile = math.nan
    residual = math.nan
    log_ek_saddle = math.nan
    try:
        sol = solve_saddlepoint(spec, k)
        log_ek_saddle = log_esp_from_solution(spec, sol)
    except (InfeasibleError, ConvergenceError, DegenerateError):
        feasible = False

    if feasible:
        lam = spec.values[spec.values > 0]
        softplus = float(np.logaddexp(0.0, sol.nu_star + np.log(lam)).sum())
        profile = logdet + k * sol.nu_star - softplus
        # The observed-subset determinant cancels from the curve gap, so the
        # residual only compares the two normalizer code paths.
        residual = (k * sol.nu_star - softplus + log_ek_saddle
                    + 0.5 * math.log(2.0 * math.pi * sol.psi2))

    if method == "exact":
        log_ek = esp_exact(spec)[k]
        loglik = logdet - log_ek if math.isfinite(log_ek) else -math.inf
    else:
        loglik = logdet - log_ek_saddle if feasible else -math.inf
    return loglik, profile, residual, feasible


def loglik_kdpp(points, observed, tau: float,
                esp_method: str = "auto") -> float:
    """Fixed-size log-likelihood of an observed subset at one bandwidth."""
    points = check_points(points)
    observed = check_subset(observed, points.shape[0])
    method = _resolve_method(esp_method, points.shape[0])
    ensemble = gaussian_l_ensemble(points, tau)
    loglik, _, _, _ = _curve_point(ensemble, observed, method)
    return loglik


def profile_loglik_dpp(points, observed, tau: float) -> float:
    """Varying-size log-likelihood at one bandwidth, profiled over the tilt."""
    points = check_points(points)
    observed = check_subset(observed, points.shape[0])
    ensemble = gaussian_l_ensemble(points, tau)
    _, profile, _, _ = _curve_point(ensemble, observed, "saddlepoint")
    return profile


def fit_tau(points, observed, taus, esp_method: str = "auto",
            ) -> LikelihoodCurve:
    """Evaluate both log-likelihoods across a bandwidth grid.

    Each grid point costs one eigendecomposition and one saddlepoint solve;
    the fixed-size and profiled curves reuse both.
    """
    points = check_points(points)
    n = points.shape[0]
    observed = check_subset(observed, n)
    if observed.size == 0:
        raise ValueError("observed subset must be nonempty")
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size == 0:
        raise ValueError("taus must be a nonempty 1-D grid")
    if (taus <= 0).any():
        raise ValueError("bandwidths must be positive")
    method = _resolve_method(esp_method, n)

    cols = np.empty((taus.size, 3))
    feasible = np.zeros(taus.size, dtype=bool)
    for j, tau in enumerate(taus):
        ensemble = gaussian_l_ensemble(points, float(tau))
        loglik, profile, residual, ok = _curve_point(ensemble, observed, method)
        cols[j] = (loglik, profile, residual)
        feasible[j] = ok
    return LikelihoodCurve(tau=taus.copy(), loglik_kdpp=cols[:, 0].copy(),
                           loglik_dpp_profile=cols[:, 1].copy(),
                           gap_residual=cols[:, 2].copy(), feasible=feasible,
                           k=int(observed.size), n=n, esp_method=method)


def curve_to_csv(curve: LikelihoodCurve, path_or_file,
                 include_gap: bool = True) -> None:
    """Serialize a likelihood curve with 17 significant digits, LF endings."""
    if hasattr(path_or_file, "write"):
        _write_curve(curve, path_or_file, include_gap)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write_curve(curve, fh, include_gap)


def _write_curve(curve: LikelihoodCurve, fh, include_gap: bool) -> None:
    header = "tau,loglik_kdpp,loglik_dpp_profile,feasible"
    if include_gap:
        header += ",gap_residual"
    fh.write(header + "\n")
    for j in range(curve.tau.size):
        row = (f"{curve.tau[j]:.17g},{curve.loglik_kdpp[j]:.17g},"
               f"{curve.loglik_dpp_profile[j]:.17g},"
               f"{int(curve.feasible[j])}")
        if include_gap:
            row += f",{curve.gap_residual[j]:.17g}"
        fh.write(row + "\n")
