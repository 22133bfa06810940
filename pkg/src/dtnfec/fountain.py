"""Rateless (fountain) coding: decode once M coded packets have arrived."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .erasure import phase_threshold
from .errors import InfeasibleError
from .model import NetworkParams, clamp_probability, optimum_exponent, sigma
from .tails import poisson_lower_tail

# K_hat within this relative distance of Gamma_0 is left undecided
BOUNDARY_RTOL = 1e-12


def required_packets(k_data: int, delta: float) -> int:
    """M = ceil(K ln(K / delta)), the packet count for decoding w.p. 1 - delta."""
    if k_data < 1:
        raise ValueError("k_data must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return max(1, math.ceil(k_data * math.log(k_data / delta)))


def packet_overhead(k_data: int, delta: float) -> float:
    """alpha = ln(K/delta)^2 / sqrt(K), the large-K overhead with M = K(1 + alpha).

    Reporting only.  For small K the two expressions for M disagree and the
    packet count always comes from ``required_packets``.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.log(k_data / delta) ** 2 / math.sqrt(k_data)


@dataclass(frozen=True)
class FountainCode:
    k_data: int
    delta: float

    def __post_init__(self):
        required_packets(self.k_data, self.delta)

    @property
    def m_required(self) -> int:
        return required_packets(self.k_data, self.delta)

    @property
    def alpha(self) -> float:
        return packet_overhead(self.k_data, self.delta)


@dataclass(frozen=True)
class FountainBounds:
    lower: float
    upper: float
    poisson_mean: float
    p_m: float
    p_star: float = 1.0


def bounds_from_mean(code: FountainCode, mean: float, p_star: float = 1.0) -> FountainBounds:
    """(1 - delta - P_M, 1 - P_M) with P_M = P(Poisson(mean) < M)."""
    p_m = poisson_lower_tail(mean, code.m_required)
    upper = clamp_probability(1.0 - p_m)
    lower = min(upper, max(0.0, 1.0 - code.delta - p_m))
    return FountainBounds(lower, upper, mean, p_m, p_star)


def fountain_success_bounds(
    code: FountainCode, tau: float, params: NetworkParams, u_min: float = 0.0
) -> FountainBounds:
    """Bounds on the optimal static-policy success with fountain coding.

    Arrivals at the destination are Poisson with mean -L(tau, p*) p*.
    """
    v = optimum_exponent(tau, params, u_min)
    s = sigma(params)
    p_star = 1.0 if tau <= s else s / tau
    return bounds_from_mean(code, -v, p_star)


class FountainPhase(enum.Enum):
    AT_LEAST_1_MINUS_DELTA = "at_least_1_minus_delta"
    ZERO = "zero"
    UNDETERMINED = "undetermined"


def fountain_phase_limit(
    k_hat: float, x_hat: float, lam: float, tau: float, delta: float
) -> FountainPhase:
    """Large-N limit class of the fountain success probability.

    ``k_hat`` equal to the threshold (to 1e-12 relative) is undetermined.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    g0 = phase_threshold(lam, tau, x_hat)
    if math.isclose(k_hat, g0, rel_tol=BOUNDARY_RTOL, abs_tol=0.0):
        return FountainPhase.UNDETERMINED
    return FountainPhase.AT_LEAST_1_MINUS_DELTA if k_hat < g0 else FountainPhase.ZERO


__all__ = [
    "FountainBounds",
    "FountainCode",
    "FountainPhase",
    "InfeasibleError",
    "bounds_from_mean",
    "fountain_phase_limit",
    "fountain_success_bounds",
    "packet_overhead",
    "poisson_lower_tail",
    "required_packets",
]
