"""Closed forms for cumulative rewards and the speak-now-or-wait comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import digamma, zeta

from .beliefs import after_prediction_variance
from .errors import DomainError, ParameterError
from .model import check_period, check_quality
from .scoring import excess_log

NEAR_BOUNDARY_Q = 0.999

# B_{2k} / (2k (2k - 1)) for the Stirling series of log Gamma
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_STIRLING_MIN = 20.0
# Below this q the log-gamma difference cancels; expand it in powers of q.
_SMALL_Q = 0.1
_EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class CumulativeReward:
    """Ex-ante expected total reward of an expert who predicts truthfully every period."""

    xi: float
    T: int
    q: float

    @property
    def near_boundary(self) -> bool:
        """True when ``q`` is so close to 1 that accuracy degrades to ~1e-8."""
        return self.q > NEAR_BOUNDARY_Q

    def __float__(self) -> float:
        return self.xi


def _check_xi_args(T, q) -> tuple[int, float]:
    T = check_period(T, name="T")
    q = check_quality(q)
    if q >= 1.0:
        raise DomainError("the cumulative reward diverges at q = 1")
    return T, q


def log_gamma(x: float) -> float:
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def log_gamma_shift(x: float, d: float) -> float:
    """``log Gamma(x + d) - log Gamma(x)`` without cancelling two huge numbers."""
    x, d = float(x), float(d)
    if not (x > 0.0 and x + d > 0.0):
        raise DomainError(f"log_gamma_shift needs x > 0 and x + d > 0, got x={x}, d={d}")
    if min(x, x + d) < _STIRLING_MIN:
        return math.lgamma(x + d) - math.lgamma(x)
    xd = x + d
    # (xd - 1/2) log xd - (x - 1/2) log x - d, regrouped around log x
    head = (xd - 0.5) * math.log1p(d / x) + d * math.log(x) - d
    tail = 0.0
    for k, coef in enumerate(_STIRLING, start=1):
        p = 2 * k - 1
        tail += coef * (xd**-p - x**-p)
    return head + tail


def cumulative_expectation_sum(T: int, q: float) -> CumulativeReward:
    T, q = _check_xi_args(T, q)
    terms = -np.log1p(-q / np.arange(1, T + 1, dtype=np.float64))
    # positive terms: pairwise summation keeps relative error near 1e-15
    return CumulativeReward(0.5 * float(np.sum(terms[::-1])), T, q)


def _xi_small_q(T: int, q: float) -> float:
    # log G(1-q) + log G(T+1) - log G(T+1-q) = sum_k q^k/k * H_T^(k),
    # with H_T^(k) = sum_{t<=T} t^-k = zeta(k) - zeta(k, T+1); every term is positive.
    total = q * (float(digamma(T + 1.0)) + _EULER_GAMMA)
    power = q
    for k in range(2, 40):
        power *= q
        term = power / k * float(zeta(k, 1.0) - zeta(k, T + 1.0))
        total += term
        if term < 1e-17 * total:
            break
    return 0.5 * total


def cumulative_expectation_gamma(T: int, q: float) -> CumulativeReward:
    T, q = _check_xi_args(T, q)
    if q == 0.0:
        return CumulativeReward(0.0, T, q)
    if q < _SMALL_Q:
        return CumulativeReward(_xi_small_q(T, q), T, q)
    xi = 0.5 * (log_gamma(1.0 - q) + log_gamma_shift(T + 1.0 - q, q))
    return CumulativeReward(xi, T, q)


def asymptotic_ratio(T: int, q: float) -> float:
    """Cumulative reward divided by ``q log T + log Gamma(1 - q)``; tends to 1/2."""
    T, q = _check_xi_args(T, q)
    if q <= 0.0:
        raise DomainError("asymptotic_ratio is 0/0 at q = 0")
    denom = q * math.log(T) + log_gamma(1.0 - q)
    if not denom > 0.0:
        raise DomainError(f"q log T + log Gamma(1 - q) = {denom} is not positive")
    return cumulative_expectation_gamma(T, q).xi / denom


def conditional_gap_moments(tau: int, t: int, T: int, q: float) -> tuple[float, float]:
    """Moments of the future belief gap ``x*_tau - y_tau`` given the signals at ``t``.

    The last prediction was at ``T``.  Returns ``(mean_coeff, variance)``: the
    conditional mean is ``mean_coeff * (x*_t - y_t)``.  ``tau == t`` gives
    ``(1, 0)``.
    """
    tau = check_period(tau, name="tau")
    t = check_period(t)
    T = check_period(T, name="T")
    if not tau <= t < T:
        raise ParameterError(f"need tau <= t < T, got tau={tau}, t={t}, T={T}")
    q = check_quality(q, scoring=True)
    if tau == t:
        return 1.0, 0.0
    var_tau = after_prediction_variance(tau, T, q)
    var_t = after_prediction_variance(t, T, q)
    spread = q * (t - tau) * (1.0 / (t * tau) + q / ((1.0 - q) * T * T))
    return var_tau / var_t, spread * var_tau**2


def first_case_gap_moment(t: int, T: int, q: float, x_T: float, y_T: float) -> float:
    """Expected squared signal gap ``(x_t - y_t)^2`` at ``t``, seen from ``T``."""
    t = check_period(t)
    T = check_period(T, name="T")
    if t > T:
        raise ParameterError(f"need t <= T, got t={t}, T={T}")
    q = check_quality(q)
    return (t / T) ** 2 * (x_T - y_T) ** 2 + q * t * (T - t) / T


@dataclass(frozen=True)
class FirstPrediction:
    x_t1: float
    y_t1: float


@dataclass(frozen=True)
class AfterPrediction:
    """The expert last predicted at ``T``; ``x_star_t1`` is the market mean at ``t1`` before acting."""

    T: int
    x_star_t1: float
    y_t1: float


@dataclass(frozen=True)
class SpeakGapInputs:
    t1: int
    t2: int
    q: float
    regime: Union[FirstPrediction, AfterPrediction]

    def __post_init__(self):
        t1 = check_period(self.t1, name="t1")
        t2 = check_period(self.t2, name="t2")
        if not t1 > t2:
            raise ParameterError(f"need t1 > t2, got t1={t1}, t2={t2}")
        if isinstance(self.regime, AfterPrediction):
            if not t1 < check_period(self.regime.T, name="T"):
                raise ParameterError(f"need t1 < T, got t1={t1}, T={self.regime.T}")
        elif not isinstance(self.regime, FirstPrediction):
            raise ParameterError(f"unknown regime {self.regime!r}")
        check_quality(self.q, scoring=True)


def speak_gap_coefficients(t1: int, t2: int, q: float, T: int | None = None) -> tuple[float, float]:
    """``(coef, const)`` with ``speak_gap = coef * gap**2 + const``.

    ``gap`` is ``x_t1 - y_t1`` before any prediction (``T=None``) or
    ``x*_t1 - y_t1`` after a prediction at ``T``.  Arguments are not validated;
    use :func:`speak_gap` for checked scalar input.
    """
    if T is None:
        return 0.5 * (t1 - t2) / t1**2, 0.5 * excess_log(q * (t1 - t2) / t1)
    var1 = after_prediction_variance(t1, T, q)
    var2 = after_prediction_variance(t2, T, q)
    # The signal-free part reduces to excess_log(s); s written without cancellation.
    s = q * (1.0 - q) * (t1 - t2) * (T - t1) / (t1 * (T - q * (T - t2)))
    return 0.5 * (1.0 - var2 / var1) / var1, 0.5 * excess_log(s)


def speak_gap(inputs: SpeakGapInputs) -> float:
    """Expected gain, seen at ``t1``, from predicting at ``t1`` instead of waiting for ``t2``.

    Both branches predict truthfully at every allowed period after ``t2``; the
    rewards of those predictions are the same either way and are left out.
    """
    r = inputs.regime
    if isinstance(r, FirstPrediction):
        coef, const = speak_gap_coefficients(inputs.t1, inputs.t2, float(inputs.q))
        return coef * (r.x_t1 - r.y_t1) ** 2 + const
    coef, const = speak_gap_coefficients(inputs.t1, inputs.t2, float(inputs.q), r.T)
    return coef * (r.x_star_t1 - r.y_t1) ** 2 + const
