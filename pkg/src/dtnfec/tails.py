"""Binomial and Poisson tail probabilities that stay accurate in the far tails.

Both tails are summed directly (never as ``1 - other``), so tiny failure
probabilities keep their relative precision.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln, logsumexp


def binom_logpmf(n: int, p: float, ks: np.ndarray) -> np.ndarray:
    ks = np.asarray(ks, dtype=float)
    if p <= 0.0:
        return np.where(ks == 0, 0.0, -np.inf)
    if p >= 1.0:
        return np.where(ks == n, 0.0, -np.inf)
    log_c = gammaln(n + 1) - gammaln(ks + 1) - gammaln(n - ks + 1)
    return log_c + ks * math.log(p) + (n - ks) * math.log1p(-p)


def binom_tail_sum(n: int, p: float, lo: int, hi: int) -> float:
    """P(lo <= S <= hi) for S ~ Binomial(n, p), summed in log space."""
    lo = max(lo, 0)
    hi = min(hi, n)
    if lo > hi:
        return 0.0
    terms = binom_logpmf(n, p, np.arange(lo, hi + 1))
    return float(min(1.0, math.exp(logsumexp(terms))))


def binom_pmf_cdf(n: int, p: float, m: int) -> tuple[float, float, float]:
    """(P(S = m), P(S >= m), P(S <= m)) for S ~ Binomial(n, p)."""
    if not 0 <= m <= n:
        raise ValueError(f"m must lie in [0, n], got m={m}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    pmf = float(math.exp(binom_logpmf(n, p, np.array([m]))[0]))
    return pmf, binom_tail_sum(n, p, m, n), binom_tail_sum(n, p, 0, m)


def poisson_lower_tail(mean: float, count_below: int) -> float:
    """P(Poisson(mean) <= count_below - 1), i.e. fewer than ``count_below`` arrivals."""
    if mean < 0:
        raise ValueError("mean must be >= 0")
    if count_below <= 0:
        return 0.0
    if mean == 0:
        return 1.0
    return float(gammaincc(count_below, mean))


def poisson_upper_tail(mean: float, count: int) -> float:
    """P(Poisson(mean) >= count)."""
    if mean < 0:
        raise ValueError("mean must be >= 0")
    if count <= 0:
        return 1.0
    if mean == 0:
        return 0.0
    return float(gammainc(count, mean))


def poisson_binomial_upper(probs, k: int) -> float:
    """P(at least k successes) for independent Bernoulli(probs[i])."""
    dist = np.zeros(len(probs) + 1)
    dist[0] = 1.0
    for i, pr in enumerate(probs, start=1):
        dist[1 : i + 1] = dist[1 : i + 1] * (1.0 - pr) + dist[0:i] * pr
        dist[0] *= 1.0 - pr
    return float(min(1.0, math.fsum(dist[k:])))
