"""Logarithmic-score rewards, in nats.

A prediction moves the market from a prior density ``f-`` to a posterior
``f+``; once ``x0`` is known the expert is paid ``log f+(x0) - log f-(x0)``.
"""

from __future__ import annotations

import math

import numpy as np

from .beliefs import GaussianBelief, after_prediction_variance
from .errors import DegenerateBeliefError, ParameterError
from .model import check_period, check_quality

UNIT = "nats"


def excess_log(x: float) -> float:
    """``-x - log(1 - x)``, which is >= 0 for every ``x < 1``.

    Summed as a series near zero, where the direct form cancels.
    """
    if x >= 1.0:
        raise ParameterError(f"excess_log needs x < 1, got {x}")
    if abs(x) < 1e-2:
        # sum_{k>=2} x^k / k; 14 terms leave < 1e-28 for |x| < 0.01
        total, power = 0.0, x
        for k in range(2, 16):
            power *= x
            total += power / k
        return total
    return -x - math.log1p(-x)


def _require_positive(*beliefs: GaussianBelief) -> None:
    for b in beliefs:
        if not b.variance > 0.0:
            raise DegenerateBeliefError(f"belief {b} has zero variance")


def log_score_moments(prior_mean, prior_var, post_mean, post_var, x0):
    """Vectorized realized reward from the four belief moments."""
    return (
        0.5 * np.log(prior_var / post_var)
        + (x0 - prior_mean) ** 2 / (2.0 * prior_var)
        - (x0 - post_mean) ** 2 / (2.0 * post_var)
    )


def log_score(prior: GaussianBelief, posterior: GaussianBelief, x0: float) -> float:
    _require_positive(prior, posterior)
    return float(log_score_moments(prior.mean, prior.variance, posterior.mean, posterior.variance, float(x0)))


def expected_truthful_reward(prior: GaussianBelief, posterior: GaussianBelief) -> float:
    """KL divergence of the posterior from the prior.

    This is what a truthful expert, whose own belief is the posterior,
    expects to earn.
    """
    _require_positive(prior, posterior)
    ratio = posterior.variance / prior.variance
    return (posterior.mean - prior.mean) ** 2 / (2.0 * prior.variance) + 0.5 * excess_log(1.0 - ratio)


def first_prediction_expectation(t: int, q: float, x_t: float, y_t: float) -> float:
    t = check_period(t)
    q = check_quality(q, scoring=True)
    return (x_t - y_t) ** 2 / (2.0 * t) + 0.5 * excess_log(q)


def consecutive_expectation(T: int, t: int, q: float) -> float:
    """Expected reward of a prediction at ``t`` made right after one at ``T``.

    Depends on no signal, so it is also the value seen from any earlier time.
    """
    T = check_period(T, name="T")
    t = check_period(t)
    if t > T:
        raise ParameterError(f"need t <= T, got t={t}, T={T}")
    q = check_quality(q, scoring=True)
    return -0.5 * math.log1p(-q * (T - t) / T)


def induced_distortion(T: int, t: int, q: float, c_T: float) -> float:
    """Shift of the market's mean at ``t`` caused by misreporting ``y_T`` by ``c_T``."""
    return after_prediction_variance(t, T, q) / ((1.0 - q) * T) * c_T


def distortion_delta(T: int, t: int, q: float, c_T: float) -> float:
    """Expected change in total reward from misreporting by ``c_T`` at ``T``
    when the next prediction is at ``t``.  Never positive.
    """
    T = check_period(T, name="T")
    t = check_period(t)
    if not t < T:
        raise ParameterError(f"need t < T, got t={t}, T={T}")
    q = check_quality(q, scoring=True)
    c_T = float(c_T)
    if not math.isfinite(c_T):
        raise ParameterError(f"distortion must be finite, got {c_T}")
    var_T = (1.0 - q) * T
    var_t = after_prediction_variance(t, T, q)
    return c_T**2 / (2.0 * var_T**2) * (var_t - var_T)
