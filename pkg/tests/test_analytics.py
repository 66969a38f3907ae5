import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from expert_oracle.analytics import (
    AfterPrediction,
    FirstPrediction,
    SpeakGapInputs,
    asymptotic_ratio,
    conditional_gap_moments,
    cumulative_expectation_gamma,
    cumulative_expectation_sum,
    first_case_gap_moment,
    log_gamma,
    log_gamma_shift,
    speak_gap,
    speak_gap_coefficients,
)
from expert_oracle.errors import DegenerateBeliefError, DomainError, ParameterError
from oracles import (
    oracle_gap_moments,
    oracle_log_gamma_shift,
    oracle_signal_gap_moment,
    oracle_xi,
    speak_gap_by_composition,
)

quality = st.floats(0.01, 0.99)


@pytest.mark.parametrize("x", [0.5, 3.0, 19.9, 20.0, 21.5, 1e3, 1e6 + 0.5])
@pytest.mark.parametrize("d", [0.1, 0.5, 0.999, 1.0])
def test_log_gamma_shift(x, d):
    assert log_gamma_shift(x, d) == pytest.approx(oracle_log_gamma_shift(x, d), rel=1e-13)


def test_log_gamma_domain():
    assert log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-15)
    with pytest.raises(DomainError):
        log_gamma(0.0)
    with pytest.raises(DomainError):
        log_gamma_shift(1.0, -2.0)


@pytest.mark.parametrize("T", [1, 2, 10, 1000, 10**6])
@pytest.mark.parametrize("q", [1e-9, 0.05, 0.0999, 0.1, 0.5, 0.95])
def test_cumulative_reward_against_high_precision(T, q):
    target = oracle_xi(T, q)
    assert cumulative_expectation_gamma(T, q).xi == pytest.approx(target, rel=1e-12)
    if T <= 1000:
        assert cumulative_expectation_sum(T, q).xi == pytest.approx(target, rel=1e-12)


@given(st.integers(1, 3000), st.floats(0.0, 0.999))
def test_sum_and_gamma_forms_agree(T, q):
    a = cumulative_expectation_sum(T, q).xi
    b = cumulative_expectation_gamma(T, q).xi
    assert a == pytest.approx(b, rel=1e-10, abs=1e-300)


def test_cumulative_reward_special_values():
    for q in (0.1, 0.5, 0.9):
        assert cumulative_expectation_gamma(1, q).xi == pytest.approx(-0.5 * math.log(1 - q), rel=1e-13)
    assert cumulative_expectation_gamma(100, 0.0).xi == 0.0
    r = cumulative_expectation_gamma(10, 0.9995)
    assert r.near_boundary and float(r) == r.xi
    assert not cumulative_expectation_gamma(10, 0.5).near_boundary
    with pytest.raises(DomainError):
        cumulative_expectation_gamma(10, 1.0)
    with pytest.raises(ParameterError):
        cumulative_expectation_sum(0, 0.5)


def test_cumulative_reward_increasing():
    xs = [cumulative_expectation_gamma(T, 0.5).xi for T in (1, 2, 5, 50, 500)]
    assert all(a < b for a, b in zip(xs, xs[1:]))
    ys = [cumulative_expectation_gamma(20, q).xi for q in (0.1, 0.3, 0.6, 0.9)]
    assert all(a < b for a, b in zip(ys, ys[1:]))


def test_asymptotic_ratio():
    assert abs(asymptotic_ratio(10**6, 0.5) - 0.5) < 1e-4
    assert abs(asymptotic_ratio(10**6, 0.5) - 0.5) < abs(asymptotic_ratio(10**3, 0.5) - 0.5)
    with pytest.raises(DomainError):
        asymptotic_ratio(10, 0.0)


@given(st.integers(3, 80), st.data(), quality)
def test_conditional_gap_moments_match_increment_oracle(T, data, q):
    t = data.draw(st.integers(2, T - 1))
    tau = data.draw(st.integers(1, t - 1))
    coeff, var = conditional_gap_moments(tau, t, T, q)
    o_coeff, o_var = oracle_gap_moments(tau, t, T, q)
    assert coeff == pytest.approx(o_coeff, rel=1e-9)
    assert var == pytest.approx(o_var, rel=1e-8)
    assert 0 < coeff < 1 and var > 0


def test_conditional_gap_moments_limit():
    assert conditional_gap_moments(5, 5, 10, 0.5) == (1.0, 0.0)
    near = conditional_gap_moments(4, 5, 10, 0.5)
    far = conditional_gap_moments(1, 5, 10, 0.5)
    assert near[1] < far[1]
    with pytest.raises(ParameterError):
        conditional_gap_moments(6, 5, 10, 0.5)
    with pytest.raises(ParameterError):
        conditional_gap_moments(2, 10, 10, 0.5)


@given(st.integers(2, 60), st.data(), quality, st.floats(-20, 20))
def test_first_case_gap_moment(T, data, q, gap):
    t = data.draw(st.integers(1, T))
    got = first_case_gap_moment(t, T, q, gap, 0.0)
    assert got == pytest.approx(oracle_signal_gap_moment(t, T, q, gap), rel=1e-9, abs=1e-9)


def test_first_case_gap_moment_vectorized():
    g = np.array([0.0, 1.0, -2.0])
    out = first_case_gap_moment(4, 10, 0.5, g, 0.0)
    assert out.shape == (3,)
    assert out[0] == pytest.approx(0.5 * 4 * 6 / 10)


@given(st.integers(3, 200), st.data(), quality, st.floats(-30, 30))
def test_speak_gap_matches_composition(T, data, q, gap):
    t1 = data.draw(st.integers(2, T - 1))
    t2 = data.draw(st.integers(1, t1 - 1))
    after = speak_gap(SpeakGapInputs(t1, t2, q, AfterPrediction(T, gap, 0.0)))
    first = speak_gap(SpeakGapInputs(t1, t2, q, FirstPrediction(gap, 0.0)))
    assert after == pytest.approx(speak_gap_by_composition(t1, t2, q, gap, T), rel=1e-8, abs=1e-12)
    assert first == pytest.approx(speak_gap_by_composition(t1, t2, q, gap), rel=1e-8, abs=1e-12)


@given(st.integers(3, 10**6), st.data(), st.floats(0.0, 0.999999), st.floats(-1e3, 1e3))
def test_speak_gap_nonnegative(T, data, q, gap):
    t1 = data.draw(st.integers(2, T - 1))
    t2 = data.draw(st.integers(1, t1 - 1))
    assert speak_gap(SpeakGapInputs(t1, t2, q, AfterPrediction(T, gap, 0.0))) >= 0.0
    assert speak_gap(SpeakGapInputs(t1, t2, q, FirstPrediction(gap, 0.0))) >= 0.0


def test_speak_gap_depends_only_on_the_gap():
    a = speak_gap(SpeakGapInputs(8, 3, 0.4, AfterPrediction(12, 1.5, 0.25)))
    b = speak_gap(SpeakGapInputs(8, 3, 0.4, AfterPrediction(12, 1.25, 0.0)))
    assert a == pytest.approx(b, rel=1e-14)
    coef, const = speak_gap_coefficients(8, 3, 0.4, 12)
    assert a == pytest.approx(coef * 1.25**2 + const, rel=1e-14)


@pytest.mark.parametrize(
    "args",
    [
        (5, 5, 0.5, FirstPrediction(0, 0)),
        (4, 5, 0.5, FirstPrediction(0, 0)),
        (5, 2, 0.5, AfterPrediction(5, 0, 0)),
        (5, 2, 0.5, "regime"),
        (5, 0, 0.5, FirstPrediction(0, 0)),
    ],
)
def test_speak_gap_inputs_validated(args):
    with pytest.raises(ParameterError):
        SpeakGapInputs(*args)


def test_speak_gap_rejects_q_one():
    with pytest.raises(DegenerateBeliefError):
        SpeakGapInputs(5, 2, 1.0, FirstPrediction(0, 0))
