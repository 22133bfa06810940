"""Success probabilities and forwarding policies for coded two-hop DTN relaying."""

from .erasure import (
    ErasureCode,
    PhaseInputs,
    PhaseLimit,
    asymptotic_limit_H,
    binom_pmf_cdf,
    binomial_tail_bound,
    check_binomial_bound,
    optimal_success_erasure,
    phase_classify,
    phase_threshold,
    phase_threshold_finite,
    success_prob_erasure,
)
from .errors import ConfigError, ConstraintInactiveError, InfeasibleError, TraceFormatError
from .fountain import (
    FountainCode,
    FountainPhase,
    fountain_phase_limit,
    fountain_success_bounds,
    poisson_lower_tail,
    required_packets,
)
from .model import (
    FeasibilityCase,
    FluidTrajectory,
    NetworkParams,
    PiecewiseControl,
    StaticPolicy,
    L_factor,
    copies_uncontrolled,
    effective_rates,
    energy_spent,
    fluid_trajectory,
    frame_copies_static,
    frame_delivery_prob,
    optimal_static_p,
    sigma,
    success_prob_static,
)
from .threshold import (
    L_tilde,
    ThresholdPolicy,
    beta_term,
    fountain_threshold_bounds,
    success_prob_threshold,
    success_prob_threshold_erasure,
)

__version__ = "0.1.0"
