from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from dtnfec import (
    ConstraintInactiveError,
    ErasureCode,
    FountainCode,
    NetworkParams,
    PiecewiseControl,
    L_tilde,
    ThresholdPolicy,
    beta_term,
    fluid_trajectory,
    fountain_success_bounds,
    fountain_threshold_bounds,
    optimal_static_p,
    optimal_success_erasure,
    sigma,
    success_prob_threshold,
    success_prob_threshold_erasure,
)
from dtnfec.erasure import success_at_optimum
from dtnfec.figures import fig2_lambda
from dtnfec.model import L_factor, effective_rates
from dtnfec.threshold import delivery_mass, frame_prefactor_expansion, threshold_frame_prob

FIG2 = NetworkParams(300, fig2_lambda(), 3000.0, x=70)


def test_beta_values():
    assert beta_term(NetworkParams(300, 1e-3, 1.0)) == 0.0
    xh = 70 / 300
    assert beta_term(FIG2) == pytest.approx(-300 * (xh + (1 - xh) * math.log(1 - xh)), rel=1e-14)
    assert beta_term(NetworkParams(1, 1.0, 1.0, x=0.5)) == pytest.approx(-0.5 - 0.5 * math.log(0.5), rel=1e-14)
    assert beta_term(NetworkParams(1, 1.0, 1.0, x=0.5)) == pytest.approx(-0.1534264097, abs=1e-10)


def test_beta_matches_trajectory_integral():
    # lam * int_0^tau X = (N x/(N-z)) lam tau + beta for the spray-then-stop trajectory
    s = sigma(FIG2)
    traj = fluid_trajectory(PiecewiseControl.threshold(s), FIG2)
    integral, _ = quad(traj.copies, 0.0, 3000.0, points=[s], epsabs=0, epsrel=1e-13)
    lam = FIG2.lam
    assert lam * integral == pytest.approx(70 * lam * 3000.0 + beta_term(FIG2), rel=1e-8)
    assert -L_tilde(3000.0, FIG2) == pytest.approx(lam * integral, rel=1e-8)


def test_mass_at_cutoff():
    s = sigma(FIG2)
    xh = 70 / 300
    assert delivery_mass(s, FIG2) == pytest.approx(-300 * math.log1p(-xh) - 300 * xh, rel=1e-12)
    assert L_tilde(10.0, NetworkParams(300, 1e-3, 10.0, x=1e-12)) == pytest.approx(0.0, abs=1e-9)


def test_inactive_constraint_is_signalled():
    with pytest.raises(ConstraintInactiveError):
        L_tilde(sigma(FIG2) / 2, FIG2)


@settings(max_examples=300, deadline=None)
@given(n=st.integers(1, 5000), xf=st.floats(1e-6, 0.999), extra=st.floats(1.0, 20.0))
def test_mass_nonnegative_beyond_cutoff(n, xf, extra):
    params = NetworkParams(n, 1e-3, 1.0, x=xf * n)
    tau = sigma(params) * extra
    assert delivery_mass(tau, params) > 0


def test_per_frame_quadrature():
    s = sigma(FIG2)
    k = 5
    traj = fluid_trajectory(PiecewiseControl.threshold(s), FIG2, split=(1 / k,) * k)
    integral, _ = quad(lambda t: traj.frame_copies(t)[0], 0.0, 3000.0, points=[s], epsabs=0, epsrel=1e-13)
    assert L_tilde(3000.0, FIG2) / k == pytest.approx(-FIG2.lam * integral, rel=1e-8)


def test_success_reductions():
    L = L_tilde(3000.0, FIG2)
    assert success_prob_threshold(1, 3000.0, FIG2) == pytest.approx(-math.expm1(L), rel=1e-14)
    for k in (1, 7, 15):
        assert success_prob_threshold_erasure(ErasureCode(k), 3000.0, FIG2) == pytest.approx(
            success_prob_threshold(k, 3000.0, FIG2), rel=1e-12
        )
    no_budget = NetworkParams(300, 1e-3, 10.0)
    assert success_prob_threshold(3, 10.0, no_budget) == 0.0


@pytest.mark.parametrize("k,h", [(k, h) for k in range(1, 5) for h in range(0, 4)])
def test_threshold_erasure_equals_enumeration(k, h):
    code = ErasureCode(k, h)
    f = threshold_frame_prob(code, 3000.0, FIG2)
    n = k + h
    exact = 0.0
    for outcome in itertools.product((0, 1), repeat=n):
        if sum(outcome) >= k:
            exact += math.prod(f if o else 1 - f for o in outcome)
    assert success_prob_threshold_erasure(code, 3000.0, FIG2) == pytest.approx(exact, abs=1e-12)


def test_frame_prefactor_expansion_overshoots():
    code = ErasureCode(15, 10)
    canonical = success_prob_threshold_erasure(code, 7000.0, FIG2.replace(tau=7000.0))
    variant = frame_prefactor_expansion(code, 7000.0, FIG2.replace(tau=7000.0))
    mass = delivery_mass(7000.0, FIG2)
    n = code.n_frames
    # the variant is off by exactly exp(-mass (1 - 1/n))
    assert variant * math.exp(-mass * (1 - 1 / n)) == pytest.approx(canonical, rel=1e-9)
    assert variant > 1.0


def test_continuity_with_static_at_cutoff():
    s = sigma(FIG2)
    static_v = L_factor(s, 1.0, FIG2)
    assert -delivery_mass(s, FIG2) == pytest.approx(static_v, rel=1e-10)
    for k, h in ((1, 0), (15, 0), (15, 10), (30, 50)):
        code = ErasureCode(k, h)
        thr = success_prob_threshold_erasure(code, s, FIG2)
        stat = optimal_success_erasure(code, s, FIG2).success
        assert thr == pytest.approx(stat, rel=1e-10, abs=1e-300)
    fcode = FountainCode(10, 0.05)
    a = fountain_threshold_bounds(fcode, s, FIG2)
    b = fountain_success_bounds(fcode, s, FIG2)
    assert a.upper == pytest.approx(b.upper, abs=1e-12)
    assert a.lower == pytest.approx(b.lower, abs=1e-12)


def test_fountain_threshold_falls_back_below_cutoff():
    s = sigma(FIG2)
    fcode = FountainCode(4, 0.05)
    assert fountain_threshold_bounds(fcode, s / 2, FIG2) == fountain_success_bounds(fcode, s / 2, FIG2)


@pytest.mark.parametrize("tau", [3000.0, 7000.0])
def test_threshold_dominates_static_on_fig2_grid(tau):
    params = FIG2.replace(tau=tau)
    for k in (15, 30):
        for h in range(0, 51):
            code = ErasureCode(k, h)
            thr = success_prob_threshold_erasure(code, tau, params)
            stat = optimal_success_erasure(code, tau, params).success
            assert thr >= stat
        assert success_prob_threshold(k, tau, params) >= optimal_static_p(tau, params, k_frames=k).success


def test_threshold_gain_in_fountain_grows_with_deadline():
    gaps = []
    for tau in (3000.0, 7000.0):
        params = FIG2.replace(tau=tau)
        gap = 0.0
        for k in range(1, 61):
            code = FountainCode(k, 0.05)
            thr = fountain_threshold_bounds(code, tau, params).upper
            stat = fountain_success_bounds(code, tau, params).upper
            assert thr >= stat
            gap += thr - stat
        gaps.append(gap)
    assert gaps[1] > gaps[0]


def test_policy_for_budget():
    pol = ThresholdPolicy.for_budget(FIG2, n_frames=3)
    assert pol.cutoff == pytest.approx(1000.0)
    assert ThresholdPolicy.for_budget(FIG2.replace(tau=500.0)).cutoff == 500.0
    with pytest.raises(ValueError):
        ThresholdPolicy(-1.0)


def test_effective_rates_enter_mass():
    lossy = FIG2.replace(q=0.2, q_prime=0.1)
    lf, ld = effective_rates(lossy)
    s = sigma(lossy)
    traj = fluid_trajectory(PiecewiseControl.threshold(s), lossy)
    integral, _ = quad(traj.copies, 0.0, 3000.0, points=[s], epsabs=0, epsrel=1e-13)
    assert delivery_mass(3000.0, lossy) == pytest.approx(ld * integral, rel=1e-8)
    assert np.isfinite(success_at_optimum(ErasureCode(3), L_tilde(3000.0, lossy)))
