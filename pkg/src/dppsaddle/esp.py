"""Elementary symmetric polynomials, exactly and by saddlepoint approximation.

The ESPs e_k(lam) normalize fixed-size determinantal models.  Two evaluation
routes are kept deliberately independent:

* ``esp_exact`` runs the classic summation recurrence
  ``E[k] <- E[k] + lam_i * E[k-1]`` in the log domain, which makes it immune
  to both the overflow (growing spectra) and the underflow (decaying spectra)
  that kill the linear-domain recurrence.
* ``esp_saddlepoint`` exploits the identity between e_k and the distribution
  of a sum of independent Bernoullis with success probabilities
  lam_i e^nu / (1 + lam_i e^nu): a one-dimensional tilt nu* is chosen so the
  expected Bernoulli sum equals k, and a Gaussian (saddlepoint) correction
  turns the tilted normalizer into an O(1/n)-accurate estimate of e_k whose
  worst case over k is about exp(1)/sqrt(2*pi) ~ 1.08 at k = 1 and k = n-1.

The linear-domain recurrence survives as ``esp_recurrence`` (raw or rescaled
by 1/lam_max) for the overflow demonstration in the CLI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .exceptions import ConvergenceError, DegenerateError, InfeasibleError
from .spectrum import Spectrum, as_spectrum
from .validation import check_size

NEWTON_MAX_ITER = 200
NEWTON_RTOL = 1e-9


class PsiDerivatives(NamedTuple):
    """Cumulant generating function of the tilted Bernoulli sum at nu."""

    psi: float
    psi1: float
    psi2: float
    psi3: float


@dataclass(frozen=True)
class SaddlepointSolution:
    """Root of the size-matching equation psi'(nu*) = k."""

    nu_star: float
    k: int
    psi: float
    psi1: float
    psi2: float
    psi3: float
    iterations: int


@dataclass(frozen=True)
class LogEspTable:
    """log e_k for k = 0..n, with log e_0 = 0 by convention.

    ``failures`` lists interior k whose saddlepoint solve did not admit a
    finite tilt (possible only for rank-deficient spectra); those entries are
    NaN.  Entries beyond the number of positive weights are -inf, which is
    the exact value.
    """

    values: np.ndarray
    method: str
    failures: tuple = ()

    @property
    def n(self) -> int:
        return self.values.size - 1

    def __getitem__(self, k: int) -> float:
        return float(self.values[k])


def _log_values(lam: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(lam)


def psi_derivatives(spectrum, nu: float) -> PsiDerivatives:
    """psi(nu) and its first three derivatives.

    psi(nu) = sum log(1 + lam_i e^nu) - sum log(1 + lam_i).  Each term is a
    Bernoulli cumulant generating function; with s_i the tilted success
    probability (a sigmoid in nu + log lam_i), the derivatives are
    sum s, sum s(1-s) and sum s(1-s)(1-2s).  Evaluation never forms
    lam_i * e^nu directly, so arbitrarily large tilts are safe.
    """
    spec = as_spectrum(spectrum)
    lam = spec.values[spec.values > 0]
    if lam.size == 0:
        return PsiDerivatives(0.0, 0.0, 0.0, 0.0)
    t = nu + np.log(lam)
    s = expit(t)
    v = s * (1.0 - s)
    psi = float(np.logaddexp(0.0, t).sum() - np.log1p(lam).sum())
    return PsiDerivatives(psi, float(s.sum()), float(v.sum()), float((v * (1.0 - 2.0 * s)).sum()))


def _initial_guesses(lam_pos: np.ndarray, k: int) -> tuple[float, float]:
    """Linearizations of the size-matching equation at the two extremes.

    For small k every tilted probability is roughly lam_i e^nu, giving
    nu ~ log k - log sum(lam); for large k the complements are roughly
    e^-nu / lam_i, giving nu ~ log sum(1/lam) - log(n - k).
    """
    n_pos = lam_pos.size
    low = math.log(k) - math.log(float(lam_pos.sum()))
    high = math.log(float(np.sum(1.0 / lam_pos))) - math.log(n_pos - k)
    return low, high


def solve_saddlepoint(spectrum, k: int, nu0: float | None = None,
                      rtol: float = NEWTON_RTOL,
                      max_iter: int = NEWTON_MAX_ITER) -> SaddlepointSolution:
    """Solve sum_i lam_i e^nu / (1 + lam_i e^nu) = k for the tilt nu.

    Damped Newton iteration with a bisection safeguard: the root is bracketed
    (psi' is strictly increasing), every iterate updates the bracket, and any
    Newton step that leaves it falls back to the midpoint.  ``nu0`` warm-starts
    the iteration, which speeds up sweeps over consecutive k.

    Raises
    ------
    InfeasibleError
        If fewer than k+1 weights are positive -- psi' approaches the number
        of positive weights from below, so no finite tilt reaches k.
    ConvergenceError
        If the residual is still above ``rtol * k`` after ``max_iter`` steps.
    """
    spec = as_spectrum(spectrum)
    k = check_size(k, spec.n, maximum=spec.n)
    lam_pos = spec.values[spec.values > 0]
    if k >= lam_pos.size:
        raise InfeasibleError(
            f"saddlepoint equation needs at least k+1 = {k + 1} positive weights, "
            f"have {lam_pos.size}"
        )
    tol = rtol * k
    guess_low, guess_high = _initial_guesses(lam_pos, k)
    lo = min(guess_low, guess_high) - 2.0
    hi = max(guess_low, guess_high) + 2.0
    step = 1.0
    while psi_derivatives(spec, lo).psi1 >= k:
        lo -= step
        step *= 2.0
    step = 1.0
    while psi_derivatives(spec, hi).psi1 <= k:
        hi += step
        step *= 2.0

    if nu0 is not None and np.isfinite(nu0):
        nu = float(np.clip(nu0, lo, hi))
    else:
        nu = float(np.clip(guess_low if 2 * k <= lam_pos.size else guess_high, lo, hi))

    for iteration in range(1, max_iter + 1):
        d = psi_derivatives(spec, nu)
        residual = d.psi1 - k
        if abs(residual) <= tol:
            return SaddlepointSolution(nu, k, d.psi, d.psi1, d.psi2, d.psi3, iteration)
        if residual < 0:
            lo = nu
        else:
            hi = nu
        if d.psi2 > 0:
            candidate = nu - residual / d.psi2
        else:
            candidate = math.nan
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi)
        nu = candidate
    raise ConvergenceError(
        f"saddlepoint solve for k={k} stalled after {max_iter} iterations "
        f"(last residual {residual:.3e}, tolerance {tol:.3e})"
    )


def esp_exact(spectrum) -> LogEspTable:
    """All log e_k by the summation recurrence, evaluated in the log domain.

    Exact up to accumulation round-off for any weight range; entries beyond
    the number of positive weights are -inf.
    """
    spec = as_spectrum(spectrum)
    n = spec.n
    ll = _log_values(spec.values)
    values = np.full(n + 1, -np.inf)
    values[0] = 0.0
    for i in range(n):
        values[1:] = np.logaddexp(values[1:], ll[i] + values[:-1])
    return LogEspTable(values=values, method="exact")


def esp_recurrence(spectrum, rescaled: bool = False) -> np.ndarray:
    """The linear-domain summation recurrence.

    With ``rescaled=False`` this is the naive algorithm: it returns the raw
    values e_0..e_n, which overflow to inf for growing spectra (around
    k ~ 130 for lam_i = i at n = 200).  With ``rescaled=True`` the weights
    are divided by lam_max first and the result is reported as
    log e_k = log e_k(lam/lam_max) + k log lam_max, using the homogeneity
    e_k(b*lam) = b^k e_k(lam); this keeps growing spectra inside double
    range but still underflows to -inf for strongly decaying ones.
    """
    spec = as_spectrum(spectrum)
    lam = spec.values
    n = lam.size
    if rescaled:
        top = lam.max()
        if top <= 0:
            out = np.full(n + 1, -np.inf)
            out[0] = 0.0
            return out
        lam = lam / top
    table = np.zeros(n + 1)
    table[0] = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for x in lam:
            table[1:] += x * table[:-1]
    if not rescaled:
        return table
    with np.errstate(divide="ignore"):
        return np.log(table) + np.arange(n + 1) * math.log(top)


def first_overflow(table: np.ndarray) -> int | None:
    """Index of the first non-finite entry of a raw recurrence table."""
    bad = np.flatnonzero(~np.isfinite(table))
    return int(bad[0]) if bad.size else None


def log_esp_from_solution(spectrum, solution: SaddlepointSolution) -> float:
    """Saddlepoint estimate of log e_k given a solved tilt."""
    spec = as_spectrum(spectrum)
    lam = spec.values[spec.values > 0]
    if solution.psi2 <= 0:
        raise DegenerateError(
            f"saddlepoint curvature vanished (psi''={solution.psi2!r}) for k={solution.k}"
        )
    t = solution.nu_star + np.log(lam)
    log_numer = float(np.logaddexp(0.0, t).sum())
    return (-0.5 * math.log(2.0 * math.pi * solution.psi2)
            + log_numer - solution.k * solution.nu_star)


def esp_saddlepoint(spectrum, k: int,
                    nu0: float | None = None) -> tuple[float, SaddlepointSolution]:
    """Saddlepoint estimate of log e_k, with the solved tilt."""
    spec = as_spectrum(spectrum)
    solution = solve_saddlepoint(spec, k, nu0=nu0)
    return log_esp_from_solution(spec, solution), solution


def esp_saddlepoint_all(spectrum) -> LogEspTable:
    """Saddlepoint table of log e_k for all k, warm-starting each solve.

    Endpoints are filled with their exact values (log e_0 = 0 and
    log e_n = sum log lam_i).  Interior k beyond the number of positive
    weights are -inf exactly; k equal to that number has no finite tilt and
    is recorded in ``failures`` as NaN.
    """
    spec = as_spectrum(spectrum)
    n = spec.n
    n_pos = spec.n_positive
    values = np.full(n + 1, np.nan)
    values[0] = 0.0
    values[n] = float(_log_values(spec.values).sum()) if n_pos == n else -np.inf
    failures = []
    nu_prev = None
    for k in range(1, n):
        if k > n_pos:
            values[k] = -np.inf
        elif k == n_pos:
            values[k] = np.nan
            failures.append(k)
        else:
            log_ek, sol = esp_saddlepoint(spec, k, nu0=nu_prev)
            values[k] = log_ek
            nu_prev = sol.nu_star
    return LogEspTable(values=values, method="saddlepoint", failures=tuple(failures))


def esp_leave_one_out(spectrum, r: int) -> np.ndarray:
    """log e_r of the spectrum with item i removed, for every i.

    Combines prefix and suffix log-ESP tables, so the whole vector costs
    O(n r) instead of n separate recurrences.  Needed by exact first-order
    inclusion probabilities at experiment scale.
    """
    spec = as_spectrum(spectrum)
    n = spec.n
    if r < 0 or r > n - 1:
        raise ValueError(f"order r must be in [0, n-1], got {r}")
    if r == 0:
        return np.zeros(n)
    ll = _log_values(spec.values)
    prefix = np.full((n + 1, r + 1), -np.inf)
    prefix[:, 0] = 0.0
    for i in range(n):
        prefix[i + 1, 1:] = np.logaddexp(prefix[i, 1:], ll[i] + prefix[i, :-1])
    suffix = np.full((n + 1, r + 1), -np.inf)
    suffix[:, 0] = 0.0
    for i in range(n - 1, -1, -1):
        suffix[i, 1:] = np.logaddexp(suffix[i + 1, 1:], ll[i] + suffix[i + 1, :-1])
    out = np.empty(n)
    for i in range(n):
        out[i] = np.logaddexp.reduce(prefix[i, : r + 1] + suffix[i + 1, r::-1])
    return out


def esp_suffix_table(spectrum, k: int) -> np.ndarray:
    """log e_r(lam_t, ..., lam_{n-1}) for r = 0..k and every suffix start t.

    Row t holds the table of the suffix starting at item t; the final row is
    the empty suffix.  Backbone of the exact sequential sampler.
    """
    spec = as_spectrum(spectrum)
    n = spec.n
    ll = _log_values(spec.values)
    table = np.full((n + 1, k + 1), -np.inf)
    table[:, 0] = 0.0
    for t in range(n - 1, -1, -1):
        table[t, 1:] = np.logaddexp(table[t + 1, 1:], ll[t] + table[t + 1, :-1])
    return table
