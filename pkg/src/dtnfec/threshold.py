"""Spray-then-stop policies: forward at every opportunity until sigma(z).

With cutoff r = sigma(z) the expected number of copies hits the budget
exactly, after which the copy count stays flat until the deadline.  All
formulas here require the budget to bind (tau >= sigma(z)); below that the
static-policy results apply unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .erasure import ErasureCode, success_prob_erasure
from .errors import ConstraintInactiveError
from .fountain import FountainBounds, FountainCode, bounds_from_mean, fountain_success_bounds
from .model import NetworkParams, clamp_probability, effective_rates, sigma


@dataclass(frozen=True)
class ThresholdPolicy:
    """Forward with probability one until ``cutoff``, then never.

    Frames are handed out evenly over ``n_frames``; ``random_frames`` picks
    them uniformly at random instead of round-robin (simulation only).
    """

    cutoff: float
    n_frames: int = 1
    random_frames: bool = False

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")

    @classmethod
    def for_budget(cls, params: NetworkParams, n_frames: int = 1) -> "ThresholdPolicy":
        return cls(min(sigma(params), params.tau), n_frames)


def beta_term(params: NetworkParams) -> float:
    """beta(z) = -N x/(N-z) - N (1 - x/(N-z)) log(1 - x/(N-z)).

    The value is nonpositive for every budget in (0, N - z).
    """
    params.require_feasible_budget()
    n = params.n_nodes
    xf = params.budget_fraction
    if xf == 0:
        return 0.0
    return -n * xf - n * (1.0 - xf) * math.log1p(-xf)


def _require_active(tau: float, params: NetworkParams) -> float:
    s = sigma(params)
    if tau < s:
        raise ConstraintInactiveError(
            f"tau = {tau} < sigma = {s}: budget not binding, use the static-policy results"
        )
    return s


def delivery_mass(tau: float, params: NetworkParams) -> float:
    """Lambda = (N x/(N-z)) lam tau + beta(z) = -L~(tau) >= 0."""
    _require_active(tau, params)
    lf, ld = effective_rates(params)
    n = params.n_nodes
    xf = params.budget_fraction
    return (ld / lf) * (n * xf * lf * tau + beta_term(params))


def L_tilde(tau: float, params: NetworkParams) -> float:
    """L~(tau), with p_i L~(tau) = -lam int_0^tau X_i(v) dv for the threshold trajectory."""
    return -delivery_mass(tau, params)


def success_prob_threshold(k_data: int, tau: float, params: NetworkParams) -> float:
    """[1 - exp(L~/K)]^K, the uniform-split threshold policy without redundancy."""
    if k_data < 1:
        raise ValueError("k_data must be >= 1")
    frame = -math.expm1(L_tilde(tau, params) / k_data)
    return clamp_probability(frame**k_data)


def threshold_frame_prob(code: ErasureCode, tau: float, params: NetworkParams) -> float:
    return -math.expm1(L_tilde(tau, params) / code.n_frames)


def success_prob_threshold_erasure(code: ErasureCode, tau: float, params: NetworkParams) -> float:
    """Binomial upper tail at K with per-frame probability Z~(1/(K+H))."""
    return success_prob_erasure(code, threshold_frame_prob(code, tau, params))


def frame_prefactor_expansion(code: ErasureCode, tau: float, params: NetworkParams) -> float:
    """Binomial expansion with prefactor exp(-Lambda/(H+K)) in place of exp(-Lambda).

    The correct expansion has exp(-Lambda); this variant overshoots by
    exp(Lambda (1 - 1/(K+H))) and can exceed one.  Kept for regression only.
    """
    lam_mass = delivery_mass(tau, params)
    n, k = code.n_frames, code.k_data
    base = math.expm1(lam_mass / n)
    total = math.fsum(math.comb(n, s) * base**s for s in range(k, n + 1))
    return math.exp(-lam_mass / n) * total


def fountain_threshold_bounds(
    code: FountainCode, tau: float, params: NetworkParams
) -> FountainBounds:
    """Fountain bounds with Poisson mean Lambda under the threshold policy.

    When the budget does not bind, the static-policy bounds are returned.
    """
    if tau < sigma(params):
        return fountain_success_bounds(code, tau, params)
    return bounds_from_mean(code, delivery_mass(tau, params))
