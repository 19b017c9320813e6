"""Brute-force oracles: full pmf enumeration, exact inclusion measures,
Monte Carlo estimates, and total-variation distances.

Everything here is deliberately independent of the approximation machinery
so it can referee it.  Enumeration iterates subsets in colexicographic order
(sorted by largest element, then recursively), which fixes serialized output
byte-for-byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy.special import logsumexp

from .spectrum import LEnsemble
from .validation import as_rng, check_size, check_subset

# Refuse enumerations beyond this many subsets.
SUBSET_BUDGET = 2_000_000

from .exceptions import BudgetError


def colex_subsets(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All size-k subsets of range(n) in colexicographic order."""
    if k == 0:
        yield ()
        return
    for top in range(k - 1, n):
        for rest in colex_subsets(top, k - 1):
            yield rest + (top,)


def _logdet_minor(L: np.ndarray, subset: tuple[int, ...]) -> float:
    """log det of a principal minor; nonpositive determinants map to -inf.

    Minors of PSD matrices are nonnegative in exact arithmetic, so a
    negative determinant here is round-off on a singular minor.
    """
    if not subset:
        return 0.0
    idx = np.asarray(subset, dtype=np.intp)
    sign, logabs = np.linalg.slogdet(L[np.ix_(idx, idx)])
    return float(logabs) if sign > 0 else -math.inf


@dataclass(frozen=True)
class EnumeratedPmf:
    """Exhaustive pmf of a subset distribution.

    ``support`` lists subsets (0-based tuples) in enumeration order, with
    matching ``log_weights`` (unnormalized) and ``probabilities``.  ``k`` is
    None for varying-size models.
    """

    n: int
    k: int | None
    support: tuple = field(repr=False)
    log_weights: np.ndarray = field(repr=False)
    log_z: float

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_z)


def enumerate_kdpp(ensemble: LEnsemble, k: int,
                   budget: int = SUBSET_BUDGET) -> EnumeratedPmf:
    """Exact size-k pmf by evaluating every principal minor of L."""
    k = check_size(k, ensemble.n)
    count = math.comb(ensemble.n, k)
    if count > budget:
        raise BudgetError(
            f"enumerating C({ensemble.n}, {k}) = {count} subsets exceeds "
            f"the budget of {budget}")
    support = tuple(colex_subsets(ensemble.n, k))
    L = ensemble.matrix
    log_w = np.fromiter((_logdet_minor(L, s) for s in support),
                        dtype=float, count=count)
    log_z = float(logsumexp(log_w))
    if math.isinf(log_z):
        raise ZeroDivisionError(
            f"all size-{k} minors vanish: the ensemble has rank below {k}")
    return EnumeratedPmf(n=ensemble.n, k=k, support=support,
                         log_weights=log_w, log_z=log_z)


def enumerate_dpp(ensemble: LEnsemble, nu: float = 0.0,
                  budget: int = SUBSET_BUDGET) -> EnumeratedPmf:
    """Exact varying-size pmf of the tilted ensemble e^nu L over all subsets."""
    n = ensemble.n
    if 2 ** n > budget:
        raise BudgetError(
            f"enumerating 2^{n} subsets exceeds the budget of {budget}")
    support = tuple(s for size in range(n + 1) for s in colex_subsets(n, size))
    L = ensemble.matrix
    log_w = np.fromiter(
        (_logdet_minor(L, s) + nu * len(s) for s in support),
        dtype=float, count=len(support))
    log_z = float(logsumexp(log_w))
    return EnumeratedPmf(n=n, k=None, support=support,
                         log_weights=log_w, log_z=log_z)


@dataclass(frozen=True)
class InclusionMeasure:
    """Order-m inclusion probabilities: alpha -> p(alpha subset of X)."""

    order: int
    n: int
    values: dict = field(repr=False)
    label: str = ""

    def __getitem__(self, alpha) -> float:
        return self.values[tuple(int(i) for i in sorted(alpha))]

    def total(self) -> float:
        return float(sum(self.values.values()))

    def vector(self) -> np.ndarray:
        """Order-1 values as a dense vector indexed by item."""
        if self.order != 1:
            raise ValueError(f"vector() requires order 1, have order {self.order}")
        out = np.zeros(self.n)
        for (i,), p in self.values.items():
            out[i] = p
        return out

    @classmethod
    def from_vector(cls, values, label: str = "") -> "InclusionMeasure":
        v = np.asarray(values, dtype=float)
        return cls(order=1, n=v.size, label=label,
                   values={(i,): float(v[i]) for i in range(v.size)})


def exact_inclusion(pmf: EnumeratedPmf, m: int) -> InclusionMeasure:
    """Order-m inclusion probabilities by summing the enumerated pmf.

    For a size-k pmf the values sum to C(k, m); for a varying-size pmf they
    sum to E[C(|X|, m)].
    """
    if m < 1 or m > pmf.n:
        raise ValueError(f"order m must be in [1, {pmf.n}], got {m}")
    from itertools import combinations

    probs = pmf.probabilities
    acc: dict[tuple[int, ...], float] = {
        alpha: 0.0 for alpha in colex_subsets(pmf.n, m)}
    for subset, p in zip(pmf.support, probs):
        if len(subset) < m or p == 0.0:
            continue
        for alpha in combinations(subset, m):
            acc[alpha] += p
    return InclusionMeasure(order=m, n=pmf.n, values=acc, label="exact")


def tv_distance(p: InclusionMeasure, q: InclusionMeasure, k: int) -> float:
    """Normalized total variation between two order-m inclusion measures.

    D_m = C(k, m)^{-1} * sum_alpha |p(alpha) - q(alpha)|.
    """
    if p.order != q.order:
        raise ValueError(f"order mismatch: {p.order} vs {q.order}")
    if p.n != q.n:
        raise ValueError(f"ground set mismatch: {p.n} vs {q.n}")
    keys = set(p.values) | set(q.values)
    total = sum(abs(p.values.get(a, 0.0) - q.values.get(a, 0.0)) for a in keys)
    return total / math.comb(k, p.order)


def mc_inclusion(sampler: Callable, alpha, draws: int, rng=None,
                 ) -> tuple[float, float]:
    """Monte Carlo inclusion probability of one subset.

    ``sampler(rng, size)`` returns a sequence of index arrays.  Returns the
    indicator mean and its binomial standard error sqrt(p(1-p)/draws).
    """
    est, err = mc_inclusion_many(sampler, [alpha], draws, rng)
    return float(est[0]), float(err[0])


def mc_inclusion_many(sampler: Callable, alphas, draws: int, rng=None,
                      chunk: int = 20_000) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo inclusion probabilities of several subsets on shared draws.

    ``sampler(rng, size)`` must return a sequence of ``size`` index arrays;
    batching lets samplers amortize per-model tables.  Draws are consumed in
    chunks and every subset is scored on the same draws, so estimates for
    overlapping subsets are correlated exactly as their indicators are.
    """
    rng = as_rng(rng)
    if draws < 1:
        raise ValueError(f"draws must be positive, got {draws}")
    if chunk < 1:
        raise ValueError(f"chunk must be positive, got {chunk}")
    alpha_list = [np.asarray(a, dtype=np.intp) for a in alphas]
    width = 1 + max((int(a.max()) for a in alpha_list if a.size), default=0)
    hits = np.zeros(len(alpha_list), dtype=np.int64)
    done = 0
    while done < draws:
        batch = min(chunk, draws - done)
        member = np.zeros((batch, width), dtype=bool)
        for j, x in enumerate(sampler(rng, batch)):
            x = np.asarray(x, dtype=np.intp)
            member[j, x[x < width]] = True
        for i, a in enumerate(alpha_list):
            hits[i] += batch if a.size == 0 else int(member[:, a].all(axis=1).sum())
        done += batch
    p_hat = hits / draws
    std = np.sqrt(p_hat * (1.0 - p_hat) / draws)
    return p_hat, std


def pmf_to_csv(pmf: EnumeratedPmf, path_or_file) -> None:
    """Serialize an enumerated pmf: columns ``subset`` (hyphen-joined 1-based
    indices) and ``probability`` (17 significant digits), LF line endings."""
    if hasattr(path_or_file, "write"):
        _write_pmf(pmf, path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write_pmf(pmf, fh)


def _write_pmf(pmf: EnumeratedPmf, fh) -> None:
    probs = pmf.probabilities
    fh.write("subset,probability\n")
    for subset, p in zip(pmf.support, probs):
        label = "-".join(str(i + 1) for i in subset)
        fh.write(f"{label},{p:.17g}\n")
