"""Inclusion probabilities and sampling for diagonal fixed-size models.

When L is diagonal with entries lam_i, a size-k sample charges each k-subset
proportionally to the product of its weights.  Inclusion probabilities then
reduce to ESP ratios,

    p(alpha) = (prod_{i in alpha} lam_i) * e_{k-m}(lam without alpha) / e_k(lam),

which this module evaluates exactly (log-domain ESP tables) and approximately:
the basic estimate is the tilted success probability s_i at the matched tilt
nu*, and the corrected estimate multiplies the product of the s_i by a
(1 + g/n) factor obtained from a second-order expansion of the perturbed
tilt, pushing the relative error from O(1/n) to O(1/n^2).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .esp import (
    SaddlepointSolution,
    esp_exact,
    esp_leave_one_out,
    esp_suffix_table,
    solve_saddlepoint,
)
from .exceptions import DegenerateError
from .spectrum import Spectrum, as_spectrum
from .validation import as_rng, check_size, check_subset

# Above this many items the sequential sampler switches its per-step
# conditionals from exact ESP ratios to the corrected approximation.
EXACT_CONDITIONALS_MAX_N = 64


@dataclass(frozen=True)
class CorrectionTerms:
    """Ingredients of the (1 + g/n) correction for one target subset.

    ``nu1`` is the first-order response of the tilt to removing the subset
    from the spectrum: it solves psibar2 * nu1 + m * (1 - psibar_alpha1) = 0.
    All barred quantities are averages (over n for the full spectrum, over m
    for the subset) of per-item psi derivatives at the unperturbed tilt.
    """

    nu1: float
    g: float
    psibar2: float
    psibar3: float
    psibar_alpha1: float
    psibar_alpha2: float


def _clamp_probability(p: float) -> float:
    return float(min(max(p, 0.0), 1.0))


def inclusion_exact(spectrum, k: int, alpha) -> float:
    """Exact inclusion probability of ``alpha`` in a size-k diagonal model."""
    spec = as_spectrum(spectrum)
    k = check_size(k, spec.n)
    alpha = check_subset(alpha, spec.n)
    m = alpha.size
    if m > k:
        return 0.0
    lam_alpha = spec.values[alpha]
    if np.any(lam_alpha == 0):
        return 0.0
    log_ek = esp_exact(spec)[k]
    if np.isinf(log_ek):
        raise DegenerateError(f"e_{k} = 0: fewer than {k} positive weights")
    rest_values = np.delete(spec.values, alpha)
    # alpha may cover the whole ground set, leaving e_0 of nothing, which is 1
    log_rest = (0.0 if rest_values.size == 0
                else esp_exact(Spectrum(rest_values))[k - m])
    log_p = np.log(lam_alpha).sum() + log_rest - log_ek
    return _clamp_probability(np.exp(log_p))


def inclusion_exact_all(spectrum, k: int) -> np.ndarray:
    """Exact first-order inclusion probabilities of every item.

    Uses leave-one-out ESP tables, so the full vector is O(n k) rather than
    n separate O(n^2) recurrences.
    """
    spec = as_spectrum(spectrum)
    k = check_size(k, spec.n)
    log_ek = esp_exact(spec)[k]
    if np.isinf(log_ek):
        raise DegenerateError(f"e_{k} = 0: fewer than {k} positive weights")
    loo = esp_leave_one_out(spec, k - 1)
    with np.errstate(divide="ignore"):
        log_p = np.log(spec.values) + loo - log_ek
    return np.clip(np.exp(log_p), 0.0, 1.0)


def _tilted_probabilities(spec: Spectrum, nu: float) -> np.ndarray:
    s = np.zeros(spec.n)
    pos = spec.values > 0
    s[pos] = expit(nu + np.log(spec.values[pos]))
    return s


def inclusion_basic(spectrum, k: int,
                    solution: SaddlepointSolution | None = None) -> np.ndarray:
    """First-order inclusion estimates: tilted success probabilities at nu*.

    The vector sums to k up to solver tolerance, because nu* is chosen to
    make it so.
    """
    spec = as_spectrum(spectrum)
    k = check_size(k, spec.n)
    if solution is None:
        solution = solve_saddlepoint(spec, k)
    return _tilted_probabilities(spec, solution.nu_star)


def _correction_g(solution: SaddlepointSolution, n: int, m: int,
                  psibar_alpha1: float, psibar_alpha2: float) -> CorrectionTerms:
    psibar2 = solution.psi2 / n
    psibar3 = solution.psi3 / n
    if psibar2 <= 0:
        raise DegenerateError("corrected inclusion needs psi''(nu*) > 0")
    nu1 = -m * (1.0 - psibar_alpha1) / psibar2
    g = (-0.5 * nu1 * nu1 * psibar2
         - (psibar3 * nu1 - m * psibar_alpha2) / (2.0 * psibar2))
    return CorrectionTerms(nu1=nu1, g=g, psibar2=psibar2, psibar3=psibar3,
                           psibar_alpha1=psibar_alpha1, psibar_alpha2=psibar_alpha2)


def inclusion_corrected(spectrum, k: int, alpha,
                        solution: SaddlepointSolution | None = None,
                        ) -> tuple[float, CorrectionTerms]:
    """Corrected inclusion estimate for one subset, with its expansion terms."""
    spec = as_spectrum(spectrum)
    k = check_size(k, spec.n)
    alpha = check_subset(alpha, spec.n)
    m = alpha.size
    if m > k:
        raise ValueError(f"subset size {m} exceeds sample size {k}")
    if solution is None:
        solution = solve_saddlepoint(spec, k)
    s = _tilted_probabilities(spec, solution.nu_star)
    s_alpha = s[alpha]
    terms = _correction_g(solution, spec.n, m,
                          float(s_alpha.mean()),
                          float((s_alpha * (1.0 - s_alpha)).mean()))
    p = float(np.prod(s_alpha)) * (1.0 + terms.g / spec.n)
    return _clamp_probability(p), terms


def inclusion_corrected_all(spectrum, k: int,
                            solution: SaddlepointSolution | None = None) -> np.ndarray:
    """Corrected first-order inclusion estimates for every item, vectorized."""
    spec = as_spectrum(spectrum)
    k = check_size(k, spec.n)
    if solution is None:
        solution = solve_saddlepoint(spec, k)
    n = spec.n
    s = _tilted_probabilities(spec, solution.nu_star)
    psibar2 = solution.psi2 / n
    psibar3 = solution.psi3 / n
    if psibar2 <= 0:
        raise DegenerateError("corrected inclusion needs psi''(nu*) > 0")
    nu1 = -(1.0 - s) / psibar2
    g = (-0.5 * nu1 * nu1 * psibar2
         - (psibar3 * nu1 - s * (1.0 - s)) / (2.0 * psibar2))
    return np.clip(s * (1.0 + g / n), 0.0, 1.0)


def _conditional_table(spec: Spectrum, k: int) -> np.ndarray:
    """P(take item t | s already taken) for the exact sequential sampler.

    Entry [t, s] is the first-order inclusion probability of item t in a
    size-(k-s) model over the suffix starting at t, an ESP ratio read off a
    backward suffix table.
    """
    n = spec.n
    suffix = esp_suffix_table(spec, k)
    ll = np.full(n, -np.inf)
    pos = spec.values > 0
    ll[pos] = np.log(spec.values[pos])
    table = np.zeros((n, k))
    for s in range(k):
        need = k - s
        with np.errstate(invalid="ignore"):
            log_p = ll + suffix[1:, need - 1] - suffix[:-1, need]
        table[:, s] = np.where(np.isfinite(log_p), np.exp(log_p), 0.0)
    return np.clip(table, 0.0, 1.0)


def _make_diagonal_sampler(spectrum, k: int, rng, conditionals: str):
    """Validate arguments and return a zero-argument draw closure.

    The closure captures the conditional table (exact mode), so repeated
    calls amortize its construction; each call advances ``rng``.
    """
    spec = as_spectrum(spectrum)
    k = check_size(k, spec.n)
    rng = as_rng(rng)
    if conditionals not in ("auto", "exact", "approx"):
        raise ValueError(f"conditionals must be auto|exact|approx, got {conditionals!r}")
    if conditionals == "auto":
        conditionals = "exact" if spec.n <= EXACT_CONDITIONALS_MAX_N else "approx"
    if spec.n_positive < k:
        raise DegenerateError(
            f"cannot draw {k} items from {spec.n_positive} positive weights")

    n = spec.n
    table = _conditional_table(spec, k) if conditionals == "exact" else None

    def draw() -> np.ndarray:
        taken: list[int] = []
        if table is not None:
            for t in range(n):
                need = k - len(taken)
                if need == 0:
                    break
                if n - t == need:
                    # Every remaining item is forced.
                    taken.extend(range(t, n))
                    break
                if rng.random() < table[t, len(taken)]:
                    taken.append(t)
        else:
            nu_prev = None
            for t in range(n):
                need = k - len(taken)
                if need == 0:
                    break
                if n - t == need:
                    taken.extend(range(t, n))
                    break
                rest = Spectrum(spec.values[t:])
                if rest.n_positive == need:
                    # Forced to take every remaining positive weight.
                    if spec.values[t] > 0:
                        taken.append(t)
                    continue
                if spec.values[t] == 0:
                    continue
                sol = solve_saddlepoint(rest, need, nu0=nu_prev)
                nu_prev = sol.nu_star
                p, _ = inclusion_corrected(rest, need, [0], solution=sol)
                if rng.random() < p:
                    taken.append(t)
        result = np.asarray(taken, dtype=np.intp)
        if result.size != k:
            raise DegenerateError(
                f"sampler terminated with {result.size} items instead of {k}")
        return result

    return draw


def sample_diagonal_kdpp(spectrum, k: int, rng=None,
                         conditionals: str = "auto", size: int | None = None):
    """Draw size-k subsets with probability proportional to the weight product.

    Sequential thinning: item t is taken with its first-order inclusion
    probability in the size-(k - taken) model over the remaining suffix.
    ``conditionals`` picks how that probability is computed: "exact" (ESP
    ratios from a suffix table -- the draw then follows the target law
    exactly), "approx" (corrected saddlepoint estimate, warm-started), or
    "auto" (exact up to n = 64, approx beyond).

    With ``size=None`` one index array is returned; with an integer, a list
    of that many draws from the same generator, identical to repeated single
    calls but several times cheaper because the conditional table is shared.
    """
    draw = _make_diagonal_sampler(spectrum, k, rng, conditionals)
    if size is None:
        return draw()
    if size < 0:
        raise ValueError(f"size must be nonnegative, got {size}")
    return [draw() for _ in range(size)]
