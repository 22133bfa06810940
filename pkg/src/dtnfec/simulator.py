"""Monte Carlo replay of two-hop relaying over contact traces.

Semantics of one replication:

* The source holds every frame.  When it meets a node that holds nothing,
  a static policy hands over frame ``i`` with probability ``p_i`` (nothing
  with probability ``1 - p``); a threshold policy hands over the next frame
  round-robin while ``t <= cutoff``.  Under fountain coding every handover
  is a fresh coded packet.  Each handover is lost with probability ``q``;
  a relay that lost its frame stays empty and eligible.
* A relay meeting the destination delivers its frame with probability
  ``(1 - q)(1 - q')`` and keeps its copy for later meetings.  Relays never
  exchange frames among themselves.
* Contacts after the deadline ``tau`` are ignored.  Source-destination
  contacts are ignored unless ``direct_delivery`` is set, matching the
  fluid model which only counts relayed copies.

Every replication draws from its own stream
``SeedSequence(master_seed, spawn_key=(index,))`` so results do not depend on
execution order or the number of worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .erasure import ErasureCode
from .fountain import FountainCode
from .model import NetworkParams, StaticPolicy, effective_rates
from .threshold import ThresholdPolicy
from .traces import ContactTrace, gen_contacts_exponential

JOBS_ENV = "DTNFEC_JOBS"
CI_LEVEL = 0.99


@dataclass(frozen=True)
class ReplicationOutcome:
    success: bool
    success_bernoulli: bool | None
    delivery_time: float | None
    frames_delivered: frozenset
    n_rx: int
    delivery_contacts: int
    copies: int
    attempts: int
    energy: float


def _frame_count(coding) -> int | None:
    if coding is None:
        return 1
    if isinstance(coding, ErasureCode):
        return coding.n_frames
    if isinstance(coding, FountainCode):
        return None
    raise TypeError(f"unsupported coding {coding!r}")


def simulate_message(
    trace: ContactTrace,
    source: int,
    dest: int,
    coding,
    policy,
    params: NetworkParams,
    seed=None,
    *,
    direct_delivery: bool = False,
    max_copies: int | None = None,
) -> ReplicationOutcome:
    """Replay one message from ``source`` to ``dest`` over ``trace``.

    ``coding`` is an ErasureCode, a FountainCode or None (a single frame).
    ``max_copies`` optionally caps the relays that receive a copy.
    """
    n = trace.node_count
    if not (0 <= source < n and 0 <= dest < n):
        raise ValueError(f"source/dest must lie in [0, {n})")
    if source == dest:
        raise ValueError("source and dest must differ")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    n_frames = _frame_count(coding)
    fountain = n_frames is None
    need = coding.m_required if fountain else (coding.k_data if coding is not None else 1)

    if isinstance(policy, StaticPolicy):
        static = True
        if not fountain and policy.n_frames != n_frames:
            raise ValueError(f"policy covers {policy.n_frames} frames, code has {n_frames}")
        cum = np.cumsum(policy.per_frame).tolist()
        p_total = policy.total
        cutoff = params.tau
    elif isinstance(policy, ThresholdPolicy):
        static = False
        cutoff = policy.cutoff
    else:
        raise TypeError(f"unsupported policy {policy!r}")

    times, na, nb = trace.times, trace.node_a, trace.node_b
    touch = (na == source) | (nb == source) | (na == dest) | (nb == dest)
    touch &= times <= params.tau
    idx = np.flatnonzero(touch)
    # a relay can only deliver after it has met the source, so skip the
    # destination contacts that precede any source contact of that relay
    sa, sb = na[idx], nb[idx]
    from_src = (sa == source) | (sb == source)
    other = np.where((sa == source) | (sa == dest), sb, sa)
    first_src = np.full(n, np.inf)
    np.minimum.at(first_src, other[from_src], times[idx][from_src])
    idx = idx[from_src | (first_src[other] <= times[idx])]
    ev_t = times[idx].tolist()
    ev_a = na[idx].tolist()
    ev_b = nb[idx].tolist()
    draws = rng.random(2 * len(idx) + 1).tolist()

    keep_hop = 1.0 - params.q
    keep_deliver = (1.0 - params.q) * (1.0 - params.q_prime)
    holding = [-1] * n
    delivered: set = set()
    copies = attempts = delivery_contacts = 0
    next_frame = 0
    next_packet = 0
    delivery_time = None
    d = 0

    for t, a, b in zip(ev_t, ev_a, ev_b):
        if a == source or b == source:
            other = b if a == source else a
            if other == dest:
                if direct_delivery:
                    u = draws[d]
                    d += 1
                    if u < keep_deliver:
                        delivery_time = t
                        break
                continue
            if holding[other] >= 0 or t > cutoff:
                continue
            if max_copies is not None and copies >= max_copies:
                continue
            u = draws[d]
            d += 1
            if static:
                if u >= p_total:
                    continue
                if fountain:
                    frame = -1
                else:
                    frame = 0
                    while frame < n_frames - 1 and u >= cum[frame]:
                        frame += 1
            else:
                frame = -1
                if not fountain:
                    if policy.random_frames:
                        frame = min(int(u * n_frames), n_frames - 1)
                    else:
                        frame = next_frame % n_frames
            attempts += 1
            u2 = draws[d]
            d += 1
            if u2 >= keep_hop:
                continue
            if fountain:
                frame = next_packet
                next_packet += 1
            elif not static and not policy.random_frames:
                next_frame += 1
            holding[other] = frame
            copies += 1
        else:
            other = b if a == dest else a
            frame = holding[other]
            if frame < 0:
                continue
            u = draws[d]
            d += 1
            if u >= keep_deliver:
                continue
            delivery_contacts += 1
            if frame not in delivered:
                delivered.add(frame)
                if delivery_time is None and len(delivered) >= need:
                    delivery_time = t

    if direct_delivery and delivery_time is not None and len(delivered) < need:
        # the whole message came straight from the source
        success = True
    else:
        success = len(delivered) >= need
    bern = None
    if fountain:
        bern = bool(success and rng.random() < 1.0 - coding.delta)
    return ReplicationOutcome(
        success=success,
        success_bernoulli=bern,
        delivery_time=delivery_time if success else None,
        frames_delivered=frozenset(delivered) if not fountain else frozenset(),
        n_rx=len(delivered),
        delivery_contacts=delivery_contacts,
        copies=copies,
        attempts=attempts,
        energy=params.epsilon * copies,
    )


@dataclass(frozen=True)
class SimScenario:
    """A Monte Carlo experiment.

    Without ``trace`` each replication draws fresh exponential contacts at
    rate ``params.lam`` among ``node_count`` nodes (default N + 1: the N
    non-destination nodes plus the destination), generated only for pairs
    touching the source or the destination.
    """

    params: NetworkParams
    coding: object
    policy: object
    replications: int
    master_seed: int = 0
    trace: ContactTrace | None = None
    node_count: int | None = None
    pair_rule: str = "random"
    source: int = 0
    dest: int = 1
    direct_delivery: bool = False
    max_copies: int | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.pair_rule not in ("random", "fixed"):
            raise ValueError("pair_rule must be 'random' or 'fixed'")
        if self.node_count is not None and self.node_count < 3:
            raise ValueError("node_count must be >= 3")

    @property
    def nodes(self) -> int:
        if self.trace is not None:
            return self.trace.node_count
        if self.node_count is not None:
            return self.node_count
        return int(round(self.params.n_nodes)) + 1


@dataclass(frozen=True)
class SimResult:
    success_rate: float
    successes: int
    replications: int
    wilson_ci: tuple[float, float]
    mean_copies: float
    mean_energy: float
    mean_attempts: float
    delivery_time_quantiles: dict
    packet_stats: dict
    frame_delivery_rates: tuple = ()
    success_bernoulli_rate: float | None = None
    mean_delivery_contacts: float = 0.0
    outcomes: tuple = field(default=(), repr=False, compare=False)

    @property
    def ci_halfwidth(self) -> float:
        return (self.wilson_ci[1] - self.wilson_ci[0]) / 2


def wilson_interval(successes: int, trials: int, level: float = CI_LEVEL) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def replication_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def run_replication(scenario: SimScenario, index: int) -> ReplicationOutcome:
    rng = replication_rng(scenario.master_seed, index)
    n = scenario.nodes
    if scenario.pair_rule == "random":
        src, dst = (int(v) for v in rng.choice(n, size=2, replace=False))
    else:
        src, dst = scenario.source, scenario.dest
    trace = scenario.trace
    if trace is None:
        trace = gen_contacts_exponential(n, scenario.params.lam, scenario.params.tau, rng, involving=(src, dst))
    return simulate_message(
        trace,
        src,
        dst,
        scenario.coding,
        scenario.policy,
        scenario.params,
        rng,
        direct_delivery=scenario.direct_delivery,
        max_copies=scenario.max_copies,
    )


def _run_chunk(scenario: SimScenario, lo: int, hi: int):
    return [run_replication(scenario, i) for i in range(lo, hi)]


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def monte_carlo(scenario: SimScenario, jobs: int | None = None, keep_outcomes: bool = False) -> SimResult:
    """Run all replications and aggregate them."""
    jobs = default_jobs() if jobs is None else max(1, jobs)
    n = scenario.replications
    if jobs == 1 or n < 2 * jobs:
        outcomes = _run_chunk(scenario, 0, n)
    else:
        bounds = np.linspace(0, n, jobs * 4 + 1).astype(int)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_run_chunk, [scenario] * (len(bounds) - 1), bounds[:-1], bounds[1:])
            outcomes = [o for part in parts for o in part]
    return aggregate(scenario, outcomes, keep_outcomes)


def aggregate(scenario: SimScenario, outcomes, keep_outcomes: bool = False) -> SimResult:
    n = len(outcomes)
    succ = sum(o.success for o in outcomes)
    lo, hi = wilson_interval(succ, n)
    copies = np.array([o.copies for o in outcomes], dtype=float)
    n_rx = np.array([o.n_rx for o in outcomes], dtype=float)
    dtimes = np.array([o.delivery_time for o in outcomes if o.delivery_time is not None])
    quant = {}
    if len(dtimes):
        quant = {q: float(np.quantile(dtimes, q)) for q in (0.1, 0.5, 0.9)}
    frames = ()
    n_frames = _frame_count(scenario.coding)
    if n_frames is not None:
        hits = np.zeros(n_frames)
        for o in outcomes:
            for f in o.frames_delivered:
                hits[f] += 1
        frames = tuple((hits / n).tolist())
    bern = None
    if isinstance(scenario.coding, FountainCode):
        bern = sum(bool(o.success_bernoulli) for o in outcomes) / n
    return SimResult(
        success_rate=succ / n,
        successes=succ,
        replications=n,
        wilson_ci=(lo, hi),
        mean_copies=float(copies.mean()),
        mean_energy=float(scenario.params.epsilon * copies.mean()),
        mean_attempts=float(np.mean([o.attempts for o in outcomes])),
        delivery_time_quantiles=quant,
        packet_stats={
            "mean": float(n_rx.mean()),
            "var": float(n_rx.var(ddof=1)) if n > 1 else 0.0,
            "min": int(n_rx.min()),
            "max": int(n_rx.max()),
        },
        frame_delivery_rates=frames,
        success_bernoulli_rate=bern,
        mean_delivery_contacts=float(np.mean([o.delivery_contacts for o in outcomes])),
        outcomes=tuple(outcomes) if keep_outcomes else (),
    )


def copy_hitting_times(params: NetworkParams, target: int, replications: int, seed=0) -> np.ndarray:
    """Times for the stochastic copy count under u = 1 to go from z to z + target.

    The count jumps k -> k+1 at rate lam (N - k), the Markov chain whose mean
    field is dX/dt = lam (N - X).
    """
    lf, _ = effective_rates(params)
    z = int(round(params.z))
    n = params.n_nodes
    if z + target > n:
        raise ValueError("target exceeds the population")
    rng = np.random.default_rng(seed)
    rates = lf * (n - np.arange(z, z + target))
    return (rng.exponential(size=(replications, target)) / rates).sum(axis=1)


def finite_population_frame_prob(
    share: float, p_total: float, tau: float, params: NetworkParams, relays: int, cutoff: float | None = None
) -> float:
    """Exact per-frame delivery probability of the replay with independent relays.

    Each of ``relays`` relays picks up a frame at its first successful
    source meeting (rate lam (1-q) p_total, only before ``cutoff``), the frame
    is this one with probability ``share``, and it reaches the destination
    if the relay meets it afterwards (rate lam (1-q)(1-q')) before ``tau``.
    Unlike the fluid model, one relay delivers at most once.
    """
    lf, ld = effective_rates(params)
    a = lf * p_total
    r = tau if cutoff is None else min(cutoff, tau)
    if a <= 0 or r <= 0:
        return 0.0
    # int_0^r a e^{-a t} (1 - e^{-ld (tau - t)}) dt
    picked = -math.expm1(-a * r)
    if abs(ld - a) < 1e-15 * max(a, ld):
        overlap = a * r * math.exp(-a * tau)
    else:
        overlap = a * math.exp(-ld * tau) * math.expm1((ld - a) * r) / (ld - a)
    per_relay = share * (picked - overlap)
    return -math.expm1(relays * math.log1p(-per_relay))
