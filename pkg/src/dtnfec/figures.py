"""Recipes for the named sweep families fig1a ... fig3c.

Each recipe is a list of configuration documents that the sweep machinery
evaluates; their rows are concatenated into one CSV.

The fig1a/fig1b families have no fixed deadline.  Unless ``tau`` is given
it is calibrated so that K = 25, H = 0, N = 300, p = 1 at the fastest rate
LAMBDA_1 gives success probability 0.12.  The fig2 rate is chosen so that
the budget x = 70 of N = 300 is exhausted at sigma = 1000 s.  The fig3 rate
is the analytic random-waypoint meeting rate for a 5 km square, 15 m range
and 5 m/s speed, used with exponential contacts.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .erasure import ErasureCode, success_at_optimum
from .model import L_factor, NetworkParams
from .traces import rwp_meeting_rate

LAMBDA_1 = 0.22e-3
LAMBDA_2 = 0.091e-3
LAMBDA_3 = 0.065e-3
CALIBRATION_TARGET = 0.12

FIG2_N, FIG2_X, FIG2_SIGMA = 300, 70, 1000.0
FIG3_N, FIG3_TAU, FIG3_X = 200, 80000.0, 70
FIGURES = ("fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig3a", "fig3b", "fig3c")


def calibrate_tau(
    n_nodes: int = 300, k_data: int = 25, lam: float = LAMBDA_1, target: float = CALIBRATION_TARGET
) -> float:
    """Deadline at which K uncoded frames, p = 1, succeed with ``target``."""
    code = ErasureCode(k_data)

    def gap(tau):
        params = NetworkParams(n_nodes, lam, tau)
        return success_at_optimum(code, L_factor(tau, 1.0, params)) - target

    hi = 1.0 / lam
    while gap(hi) < 0:
        hi *= 2
    return brentq(gap, 0.0, hi, xtol=1e-12, rtol=1e-14)


def fig2_lambda() -> float:
    """Rate for which sigma = 1000 s with N = 300, x = 70, z = 0."""
    return -math.log1p(-FIG2_X / FIG2_N) / FIG2_SIGMA


def fig3_lambda() -> float:
    return rwp_meeting_rate(5000.0, 15.0, 5.0)


def fig1c_k_grid(n_nodes: int, max_fraction: float = 0.2, points: int = 200) -> list[int]:
    ks = np.unique(np.round(np.linspace(0, max_fraction * n_nodes, points + 1)[1:]).astype(int))
    return [int(k) for k in ks if k >= 1]


def recipe(figure: str, tau: float | None = None, replications: int | None = None, seed: int = 0) -> tuple[list[dict], bool]:
    """Configuration documents for ``figure`` and whether they need simulation."""
    if figure not in FIGURES:
        raise KeyError(f"unknown figure {figure!r}; expected one of {', '.join(FIGURES)}")
    if figure in ("fig1a", "fig1b", "fig1c"):
        tau = calibrate_tau() if tau is None else tau
    sim = {"seed": seed}
    if replications is not None:
        sim["replications"] = replications
    if figure == "fig1a":
        docs = [{"n_nodes": 300, "lam": [LAMBDA_1, LAMBDA_2, LAMBDA_3], "tau": tau, "k": 25, "h": list(range(0, 101))}]
        return docs, False
    if figure == "fig1b":
        docs = [{"n_nodes": 300, "lam": LAMBDA_1, "tau": tau, "k": [10, 25, 60], "h": list(range(0, 101))}]
        return docs, False
    if figure == "fig1c":
        docs = [
            {"n_nodes": n, "lam": LAMBDA_1, "tau": tau, "k": fig1c_k_grid(n), "coding": "fountain", "delta": 0.02}
            for n in (50, 125, 300, 500, 5000)
        ]
        return docs, False
    if figure in ("fig2a", "fig2b"):
        fig2_tau = [3000.0, 7000.0] if tau is None else [tau]
        base = {"n_nodes": FIG2_N, "lam": fig2_lambda(), "x": FIG2_X, "tau": fig2_tau, "policy": ["static", "threshold"]}
        if figure == "fig2a":
            return [dict(base, k=[15, 30], h=list(range(0, 51)))], False
        return [dict(base, k=list(range(1, 61)), coding="fountain", delta=0.05)], False
    base = {"n_nodes": FIG3_N, "lam": fig3_lambda(), "x": FIG3_X, "tau": FIG3_TAU if tau is None else tau}
    base.update(sim)
    ks = list(range(2, 41, 2))
    if figure == "fig3a":
        return [dict(base, k=ks, h=[10, 20], policy="static")], True
    if figure == "fig3b":
        return [dict(base, k=ks, h=[10, 20], policy="threshold")], True
    return [dict(base, k=ks, coding="fountain", delta=0.02, policy="static")], True
