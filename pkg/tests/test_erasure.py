from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtnfec import (
    ErasureCode,
    NetworkParams,
    PhaseInputs,
    PhaseLimit,
    L_factor,
    asymptotic_limit_H,
    binomial_tail_bound,
    check_binomial_bound,
    optimal_static_p,
    optimal_success_erasure,
    phase_classify,
    phase_threshold,
    phase_threshold_finite,
    success_prob_erasure,
)
from dtnfec.erasure import failure_prob_erasure, success_at_optimum, success_prob_allocation
from dtnfec.figures import LAMBDA_1, LAMBDA_3, calibrate_tau
from dtnfec.model import optimum_exponent
from dtnfec.tails import binom_pmf_cdf


def enumerate_success(k, n, probs):
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=n):
        if sum(outcome) >= k:
            total += math.prod(p if o else 1 - p for p, o in zip(probs, outcome))
    return total


@pytest.fixture(scope="module")
def fig1a_tau():
    return calibrate_tau()


def test_code_validation():
    with pytest.raises(ValueError):
        ErasureCode(0)
    with pytest.raises(ValueError):
        ErasureCode(2, -1)
    assert ErasureCode(3, 2).n_frames == 5


def test_reductions():
    assert success_prob_erasure(ErasureCode(4), 0.8) == 0.8**4
    assert success_prob_erasure(ErasureCode(4, 3), 1.0) == 1.0
    assert success_prob_erasure(ErasureCode(4, 3), 0.0) == 0.0
    f = 0.37
    code = ErasureCode(3, 4)
    assert success_prob_erasure(code, f) + failure_prob_erasure(code, f) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("k,h", [(k, h) for k in range(1, 5) for h in range(0, 4)])
def test_small_codes_equal_enumeration(k, h):
    for f in (0.013, 0.25, 0.5, 0.91):
        exact = enumerate_success(k, k + h, [f] * (k + h))
        assert success_prob_erasure(ErasureCode(k, h), f) == pytest.approx(exact, abs=1e-12)


def test_optimal_with_no_redundancy_matches_model_core():
    params = NetworkParams(300, 2.2e-4, 5000.0, x=70)
    for k in (1, 5, 25):
        a = optimal_success_erasure(ErasureCode(k), 5000.0, params)
        b = optimal_static_p(5000.0, params, k_frames=k)
        assert a.success == pytest.approx(b.success, rel=1e-12, abs=1e-300)


def test_optimal_increasing_in_redundancy():
    params = NetworkParams(300, 2.2e-4, 5000.0, x=70)
    values = [optimal_success_erasure(ErasureCode(10, h), 5000.0, params).success for h in range(0, 51)]
    assert all(b > a for a, b in zip(values, values[1:]) if b < 1.0)


def test_uniform_split_is_best_for_two_plus_one():
    params = NetworkParams(300, 2.2e-4, 5000.0, x=70)
    case = optimal_success_erasure(ErasureCode(2, 1), 5000.0, params)
    L = L_factor(5000.0, case.p_star, params)
    grid = np.linspace(0.0, 1.0, 201)
    best, arg = -1.0, None
    for a in grid:
        for b in grid:
            if a + b > 1.0 + 1e-12:
                continue
            shares = np.array([a, b, max(0.0, 1.0 - a - b)]) * case.p_star
            probs = -np.expm1(L * shares)
            val = success_prob_allocation(2, probs)
            if val > best:
                best, arg = val, shares
    assert np.allclose(arg, case.p_star / 3, atol=case.p_star * 0.005 + 1e-12)
    assert best == pytest.approx(case.success, abs=1e-12)


def test_twelve_redundant_frames_reach_one(fig1a_tau):
    params = NetworkParams(300, LAMBDA_1, fig1a_tau)
    v = L_factor(fig1a_tau, 1.0, params)
    assert success_at_optimum(ErasureCode(25, 0), v) == pytest.approx(0.12, abs=1e-12)
    assert success_at_optimum(ErasureCode(25, 12), v) > 0.98


def test_asymptotic_limit_basics():
    assert asymptotic_limit_H(1, -0.7) == pytest.approx(-math.expm1(-0.7), rel=1e-14)
    assert asymptotic_limit_H(3, 0.0) == 0.0
    with pytest.raises(ValueError):
        asymptotic_limit_H(3, 0.1)


def test_asymptotic_limit_approached_from_below(fig1a_tau):
    params = NetworkParams(300, LAMBDA_1, fig1a_tau)
    v = L_factor(fig1a_tau, 1.0, params)
    limit = asymptotic_limit_H(25, v)
    large = success_at_optimum(ErasureCode(25, 200 * 25), v)
    assert large <= limit
    assert limit - large < 1e-3
    for h in (0, 5, 50, 500):
        assert success_at_optimum(ErasureCode(25, h), v) <= limit


def test_local_limit_bound_validation_mode():
    check = check_binomial_bound(100, 0.3, 50)
    assert check.exact == pytest.approx(binom_pmf_cdf(100, 0.3, 50)[1])
    assert check.chernoff_dominates
    # the literal form is negative here, so it cannot dominate
    assert check.literal < 0
    assert check.literal_dominates is False


def test_chernoff_at_full_count():
    value = binomial_tail_bound(20, 0.4, 20)
    assert 0 < value and value >= binom_pmf_cdf(20, 0.4, 20)[1] * (1 - 1e-12)


def test_bound_domain_errors():
    with pytest.raises(ValueError):
        binomial_tail_bound(100, 0.3, 30)
    with pytest.raises(ValueError):
        binomial_tail_bound(100, 0.3, 100, literal=True)


@settings(max_examples=300, deadline=None)
@given(n=st.integers(2, 400), p=st.floats(0.001, 0.95), frac=st.floats(0.0, 1.0))
def test_chernoff_dominates_exact_tail(n, p, frac):
    lo = math.floor(p * n) + 1
    if lo > n:
        return
    m = lo + int(frac * (n - lo))
    assert binomial_tail_bound(n, p, m) >= binom_pmf_cdf(n, p, m)[1] * (1 - 1e-9)


def test_chernoff_along_fig1a_sweep(fig1a_tau):
    params = NetworkParams(300, LAMBDA_3, fig1a_tau)
    v = L_factor(fig1a_tau, 1.0, params)
    for h in range(0, 40):
        n = 25 + h
        frame = -math.expm1(v / n)
        if 25 > frame * n:
            exact = success_prob_erasure(ErasureCode(25, h), frame)
            assert binomial_tail_bound(n, frame, 25) >= exact * (1 - 1e-12)


def test_phase_threshold_special_points():
    assert phase_threshold(2e-4, 5000.0, 1 - 1 / math.e) == pytest.approx(1.0 / math.e, rel=1e-14)
    small = 1e-7
    assert phase_threshold(1.0, 1.0, small) == pytest.approx(small / 2, rel=1e-6)
    for xh in (1e-5, 0.1, 0.5, 0.99):
        g = phase_threshold(1.0, 3.0, xh)
        assert 0 < g < 3.0
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            phase_threshold(1.0, 1.0, bad)


def test_phase_threshold_series_switch_is_continuous():
    below = phase_threshold(1.0, 1.0, 1e-4 * (1 - 1e-12))
    above = phase_threshold(1.0, 1.0, 1e-4 * (1 + 1e-12))
    assert abs(below - above) / above < 1e-9


def test_finite_threshold_identity():
    params = NetworkParams(200, 2.2e-4, 5000.0, x=70)
    v = optimum_exponent(5000.0, params)
    assert -v == pytest.approx(200 * phase_threshold_finite(params), rel=1e-10)


def test_phase_classify_rows():
    lam, tau, xh = 1.0, 2.0, 0.35
    g0 = phase_threshold(lam, tau, xh)
    assert phase_classify(PhaseInputs(0.3 * g0, 0.5 * g0, xh, lam, tau)) is PhaseLimit.ZERO
    assert phase_classify(PhaseInputs(0.5 * g0, g0, xh, lam, tau)) is PhaseLimit.ONE
    assert phase_classify(PhaseInputs(1.2 * g0, 50 * g0, xh, lam, tau)) is PhaseLimit.ZERO
    assert phase_classify(PhaseInputs(g0, 50 * g0, xh, lam, tau)) is PhaseLimit.ZERO
    with pytest.raises(ValueError):
        PhaseInputs(0.1, 0.1, 1.0, lam, tau)


def _finite_outcome(n, k_hat, h_hat, lam_tau=2.0, x_hat=0.35):
    """(success, failure) of the finite-N optimum, each summed directly."""
    params = NetworkParams(n, lam_tau, 1.0, x=x_hat * n)
    v = optimum_exponent(1.0, params)
    code = ErasureCode(max(1, round(k_hat * n)), round(h_hat * n))
    frame = -math.expm1(v / code.n_frames)
    return success_prob_erasure(code, frame), failure_prob_erasure(code, frame)


def test_finite_formula_sharpens_toward_phase_limit():
    g0 = phase_threshold(2.0, 1.0, 0.35)
    one = (0.5 * g0, 1.0 * g0)
    zero = (1.2 * g0, 1.0 * g0)
    assert phase_classify(PhaseInputs(*one, 0.35, 2.0, 1.0)) is PhaseLimit.ONE
    assert phase_classify(PhaseInputs(*zero, 0.35, 2.0, 1.0)) is PhaseLimit.ZERO
    ns = (50, 200, 1000, 5000)
    fails = [_finite_outcome(n, *one)[1] for n in ns]
    wins = [_finite_outcome(n, *zero)[0] for n in ns]
    assert all(b < a for a, b in zip(fails, fails[1:])) and fails[-1] < 1e-3
    assert all(b < a for a, b in zip(wins, wins[1:])) and wins[-1] < 1e-3


def test_transition_width_shrinks_with_population():
    g0 = phase_threshold(2.0, 1.0, 0.35)
    widths = []
    for n in (50, 200, 1000, 5000):
        params = NetworkParams(n, 2.0, 1.0, x=0.35 * n)
        v = optimum_exponent(1.0, params)
        h = round(g0 * n)
        ks = np.arange(1, round(2 * g0 * n))
        ps = np.array([success_at_optimum(ErasureCode(int(k), h), v) for k in ks])
        k90 = ks[np.argmax(ps < 0.9)]
        k10 = ks[np.argmax(ps < 0.1)]
        widths.append((k10 - k90) / n)
    assert all(b < a for a, b in zip(widths, widths[1:]))
