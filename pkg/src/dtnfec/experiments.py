"""Sweep evaluation: closed-form rows, Monte Carlo rows and CSV output.

Column order is fixed.  Analytic columns come first and are computed by
one function for every command, so ``analyze`` and ``simulate`` agree on
them byte for byte.
"""

from __future__ import annotations

import csv
import io
import math
import sys

from .config import ScenarioConfig, SweepPoint
from .erasure import ErasureCode, success_at_optimum
from .errors import InfeasibleError
from .fountain import FountainCode, bounds_from_mean
from .model import L_factor, StaticPolicy, _optimum, sigma
from .simulator import SimScenario, monte_carlo
from .threshold import ThresholdPolicy, delivery_mass
from .traces import estimate_lambda, gen_contacts_rwp, read_trace, rwp_meeting_rate

ANALYTIC_COLUMNS = (
    "n_nodes",
    "lam",
    "tau",
    "x",
    "z",
    "q",
    "q_prime",
    "epsilon",
    "k",
    "h",
    "coding",
    "delta",
    "m_required",
    "policy",
    "case",
    "p_star",
    "cutoff",
    "poisson_mean",
    "analytic_ps",
    "analytic_lower",
    "analytic_upper",
)
MC_COLUMNS = (
    "mc_ps",
    "mc_ci_lo",
    "mc_ci_hi",
    "mc_ps_bernoulli",
    "mean_energy",
    "mean_copies",
    "mean_n_rx",
    "replications",
    "seed",
)


def make_code(point: SweepPoint, delta: float):
    if point.coding == "fountain":
        return FountainCode(point.k, delta)
    return ErasureCode(point.k, point.h if point.coding == "erasure" else 0)


def _plan(point: SweepPoint, u_min: float):
    """Case label, p*, cutoff and Poisson delivery mass for one point."""
    params = point.params
    tau = params.tau
    if not point.constrained:
        return "unconstrained", 1.0, tau, -L_factor(tau, 1.0, params)
    params.require_feasible_budget()
    if point.policy == "threshold":
        s = sigma(params)
        if tau >= s:
            return "threshold", 1.0, s, delivery_mass(tau, params)
        return "unconstrained", 1.0, tau, -L_factor(tau, 1.0, params)
    kind, p_star, _, v = _optimum(tau, params, u_min)
    if kind == "infeasible":
        raise InfeasibleError(
            f"u_min * tau = {u_min * tau} exceeds sigma = {sigma(params)} at {point}"
        )
    return kind, p_star, tau, -v


def analytic_row(point: SweepPoint, delta: float, u_min: float = 0.0) -> dict:
    params = point.params
    case, p_star, cutoff, mass = _plan(point, u_min)
    code = make_code(point, delta)
    row = {
        "n_nodes": params.n_nodes,
        "lam": params.lam,
        "tau": params.tau,
        "x": params.x if point.constrained else None,
        "z": params.z,
        "q": params.q,
        "q_prime": params.q_prime,
        "epsilon": params.epsilon,
        "k": point.k,
        "h": point.h,
        "coding": point.coding,
        "delta": None,
        "m_required": None,
        "policy": point.policy,
        "case": case,
        "p_star": p_star,
        "cutoff": cutoff,
        "poisson_mean": mass,
        "analytic_lower": None,
        "analytic_upper": None,
    }
    if isinstance(code, FountainCode):
        bounds = bounds_from_mean(code, mass, p_star)
        row.update(
            delta=delta,
            m_required=code.m_required,
            analytic_ps=bounds.upper,
            analytic_lower=bounds.lower,
            analytic_upper=bounds.upper,
        )
    else:
        row["analytic_ps"] = success_at_optimum(code, -mass)
    return row


def scenario_for(point: SweepPoint, row: dict, cfg: ScenarioConfig, trace=None) -> SimScenario:
    sc = cfg.scalars
    code = make_code(point, sc["delta"])
    if point.policy == "threshold":
        n_frames = 1 if isinstance(code, FountainCode) else code.n_frames
        policy = ThresholdPolicy(row["cutoff"], n_frames)
    elif isinstance(code, FountainCode):
        policy = StaticPolicy((row["p_star"],))
    else:
        policy = StaticPolicy.uniform(code.n_frames, row["p_star"])
    return SimScenario(
        params=point.params,
        coding=code,
        policy=policy,
        replications=cfg.replications,
        master_seed=cfg.seed,
        trace=trace,
        pair_rule=sc["pair_rule"],
        source=sc["source"],
        dest=sc["dest"],
        direct_delivery=sc["direct_delivery"],
        max_copies=sc["max_copies"],
    )


def mc_columns(result, cfg: ScenarioConfig) -> dict:
    return {
        "mc_ps": result.success_rate,
        "mc_ci_lo": result.wilson_ci[0],
        "mc_ci_hi": result.wilson_ci[1],
        "mc_ps_bernoulli": result.success_bernoulli_rate,
        "mean_energy": result.mean_energy,
        "mean_copies": result.mean_copies,
        "mean_n_rx": result.packet_stats["mean"],
        "replications": result.replications,
        "seed": cfg.seed,
    }


class TraceSource:
    """Supplies the contact trace, and model defaults derived from it."""

    def __init__(self, cfg: ScenarioConfig):
        self.trace_doc = cfg.trace
        self.seed = cfg.seed
        self._file = None
        self._rwp_cache = {}
        if self.trace_doc["kind"] == "file":
            self._file = read_trace(self.trace_doc["path"])

    def defaults(self) -> tuple[float | None, float | None]:
        """(n_nodes, lam) to use when the document leaves them out."""
        if self._file is not None:
            return self._file.node_count - 1, estimate_lambda(self._file)
        if self.trace_doc["kind"] == "rwp":
            return None, rwp_meeting_rate(self.trace_doc["side"], self.trace_doc["range"], self.trace_doc["speed"])
        return None, None

    def trace_for(self, point: SweepPoint):
        kind = self.trace_doc["kind"]
        if kind == "file":
            return self._file
        if kind == "rwp":
            n = int(round(point.params.n_nodes)) + 1
            key = (n, point.params.tau)
            if key not in self._rwp_cache:
                self._rwp_cache[key] = gen_contacts_rwp(
                    self.trace_doc["side"],
                    self.trace_doc["range"],
                    self.trace_doc["speed"],
                    n,
                    point.params.tau,
                    self.trace_doc["step"],
                    seed=self.seed,
                )
            return self._rwp_cache[key]
        return None


def evaluate(cfg: ScenarioConfig, simulate: bool, jobs=None, progress=None) -> tuple[tuple, list[dict]]:
    """All sweep rows for ``cfg``; returns (columns, rows)."""
    source = TraceSource(cfg)
    n_default, lam_default = source.defaults()
    points = cfg.points(n_default, lam_default)
    rows = []
    for i, point in enumerate(points, start=1):
        row = analytic_row(point, cfg.scalars["delta"], cfg.scalars["u_min"])
        if simulate:
            scenario = scenario_for(point, row, cfg, source.trace_for(point))
            row.update(mc_columns(monte_carlo(scenario, jobs=jobs), cfg))
        rows.append(row)
        if progress is not None:
            progress(f"[{i}/{len(points)}] K={point.k} H={point.h} {point.policy}/{point.coding} done")
    columns = ANALYTIC_COLUMNS + (MC_COLUMNS if simulate else ())
    return columns, rows


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return "%.10g" % value
    return str(value)


def write_csv(columns, rows, out=None):
    """Write rows as CSV to the path ``out`` or to stdout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
