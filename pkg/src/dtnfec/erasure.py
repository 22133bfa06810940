"""Erasure-coded messages: K data frames plus H redundant ones, any K decode."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .model import (
    FeasibilityCase,
    L_factor,
    effective_rates,
    NetworkParams,
    clamp_probability,
    optimal_static_p,
)
from .tails import (
    binom_pmf_cdf,
    binom_tail_sum,
    poisson_binomial_upper,
    poisson_upper_tail,
)

__all__ = [
    "ErasureCode",
    "PhaseInputs",
    "PhaseLimit",
    "BoundCheck",
    "binom_pmf_cdf",
    "success_prob_erasure",
    "failure_prob_erasure",
    "success_prob_allocation",
    "optimal_success_erasure",
    "asymptotic_limit_H",
    "binomial_tail_bound",
    "check_binomial_bound",
    "phase_threshold",
    "phase_threshold_finite",
    "phase_classify",
]


@dataclass(frozen=True)
class ErasureCode:
    k_data: int
    h_redundant: int = 0

    def __post_init__(self):
        if self.k_data < 1:
            raise ValueError("k_data must be >= 1")
        if self.h_redundant < 0:
            raise ValueError("h_redundant must be >= 0")

    @property
    def n_frames(self) -> int:
        return self.k_data + self.h_redundant


def success_prob_erasure(code: ErasureCode, frame_prob: float) -> float:
    """P(at least K of the K+H frames arrive), frames i.i.d. with ``frame_prob``."""
    if not 0.0 <= frame_prob <= 1.0:
        raise ValueError(f"frame_prob must lie in [0, 1], got {frame_prob}")
    n, k = code.n_frames, code.k_data
    if code.h_redundant == 0:
        return frame_prob**k
    return binom_tail_sum(n, frame_prob, k, n)


def failure_prob_erasure(code: ErasureCode, frame_prob: float) -> float:
    """P(fewer than K frames arrive); kept separate for precision near 1."""
    return binom_tail_sum(code.n_frames, frame_prob, 0, code.k_data - 1)


def success_prob_allocation(k_required: int, frame_probs) -> float:
    """Decoding probability when frame ``i`` arrives with ``frame_probs[i]``."""
    return poisson_binomial_upper(list(frame_probs), k_required)


def optimal_success_erasure(
    code: ErasureCode, tau: float, params: NetworkParams, u_min: float = 0.0
) -> FeasibilityCase:
    """Optimal static policy with redundancy: uniform p_i = p*/(K+H).

    ``frame_prob`` of the result is the per-frame delivery probability
    p_hat = 1 - exp(L(tau, p*) p*/(K+H)).
    """
    base = optimal_static_p(tau, params, k_frames=code.n_frames, u_min=u_min)
    if not base.feasible:
        return base
    if code.h_redundant == 0:
        return base
    success = success_prob_erasure(code, base.frame_prob)
    return FeasibilityCase(base.kind, base.p_star, base.sigma, success, base.frame_prob)


def asymptotic_limit_H(k_data: int, v: float) -> float:
    """Limit of the optimal success probability as H grows without bound.

    Equals P(Poisson(-v) >= K) where v = L(tau, p) p <= 0.
    """
    if v > 0:
        raise ValueError("v must be <= 0")
    return poisson_upper_tail(-v, k_data)


def _kl_bernoulli(a: float, p: float) -> float:
    out = 0.0
    if a > 0:
        out += a * math.log(a / p)
    if a < 1:
        out += (1 - a) * math.log((1 - a) / (1 - p))
    return out


def _chernoff_upper(n: int, p: float, m: int) -> float:
    if m == n:
        return math.exp(n * math.log(p)) if p > 0 else 0.0
    a = m / n
    return math.exp(-n * _kl_bernoulli(a, p))


def _local_limit_bound(n: int, p: float, m: int) -> float:
    u = m / (p * n)
    return (
        math.sqrt(n) / math.sqrt(2 * math.pi * m * (n - m))
        * u ** (1 - u * p * n) / (1 - u)
        * ((1 - p) / (1 - u * p)) ** ((1 - u * p) * n)
    )


def binomial_tail_bound(n: int, p: float, m: int, literal: bool = False) -> float:
    """Upper bound on P(S_{n,p} >= m) for m above the mean.

    By default the Chernoff bound exp(-n KL(m/n || p)).  ``literal``
    evaluates the literal local-limit expression instead; as written its
    ``1/(1-u)`` factor is negative for u > 1, so it is not a usable bound.
    """
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, n], got m={m}, n={n}")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if m <= p * n:
        raise ValueError(f"m={m} does not exceed the mean {p * n}; bound needs u > 1")
    if literal:
        if m >= n:
            raise ValueError("literal bound needs m <= n - 1")
        return _local_limit_bound(n, p, m)
    return _chernoff_upper(n, p, m)


@dataclass(frozen=True)
class BoundCheck:
    literal: float | None
    chernoff: float
    exact: float
    literal_dominates: bool | None
    chernoff_dominates: bool


def check_binomial_bound(n: int, p: float, m: int) -> BoundCheck:
    """Compare both bounds with the exact upper tail at one point."""
    exact = binom_pmf_cdf(n, p, m)[1]
    chern = binomial_tail_bound(n, p, m)
    literal = binomial_tail_bound(n, p, m, literal=True) if m < n else None
    return BoundCheck(
        literal=literal,
        chernoff=chern,
        exact=exact,
        literal_dominates=None if literal is None else literal >= exact,
        chernoff_dominates=chern >= exact * (1 - 1e-12),
    )


def _threshold_shape(xf: float) -> float:
    """1 + xf / log(1 - xf), with its small-xf series."""
    if xf < 1e-4:
        return xf / 2 + xf * xf / 12 + xf**3 / 24
    return 1.0 + xf / math.log1p(-xf)


def phase_threshold(lam: float, tau: float, x_hat: float) -> float:
    """Gamma_0 = lam tau (1 + x_hat / log(1 - x_hat))."""
    if not 0.0 < x_hat < 1.0:
        raise ValueError(f"x_hat must lie in (0, 1), got {x_hat}")
    return lam * tau * _threshold_shape(x_hat)


def phase_threshold_finite(params: NetworkParams, tau: float | None = None) -> float:
    """Gamma_0^(N): the threshold with x/(N-z) in place of its limit.

    Satisfies -L(tau, p*) p* = N Gamma_0^(N) when the budget binds.
    """
    params.require_feasible_budget()
    tau = params.tau if tau is None else tau
    lf, ld = effective_rates(params)
    return (ld / lf) * phase_threshold(lf, tau, params.budget_fraction)


@dataclass(frozen=True)
class PhaseInputs:
    k_hat: float
    h_hat: float
    x_hat: float
    lam: float
    tau: float

    def __post_init__(self):
        if not 0.0 < self.x_hat < 1.0:
            raise ValueError("x_hat must lie in (0, 1)")
        if self.k_hat < 0 or self.h_hat < 0:
            raise ValueError("k_hat and h_hat must be >= 0")


class PhaseLimit(enum.Enum):
    ZERO = 0
    ONE = 1


def phase_classify(inputs: PhaseInputs) -> PhaseLimit:
    """Large-N limit of the optimal success probability.

    One only when the data frames stay below the threshold while data plus
    redundancy exceeds it.  K_hat equal to the threshold counts as ZERO.
    """
    g0 = phase_threshold(inputs.lam, inputs.tau, inputs.x_hat)
    if inputs.k_hat + inputs.h_hat > g0 and inputs.k_hat < g0:
        return PhaseLimit.ONE
    return PhaseLimit.ZERO


def success_at_optimum(code: ErasureCode, v: float) -> float:
    """Success of the uniform split when the total exponent is v = L p*."""
    frame = -math.expm1(v / code.n_frames)
    return clamp_probability(success_prob_erasure(code, frame))


def unconstrained_exponent(tau: float, params: NetworkParams) -> float:
    """L(tau, 1), the exponent of full-rate forwarding."""
    return L_factor(tau, 1.0, params)
