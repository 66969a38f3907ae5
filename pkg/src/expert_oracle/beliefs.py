"""Market and expert beliefs about the outcome.

The market has two information regimes.  Before the expert has spoken it
knows only its own signal and believes ``N(x_t, t)``.  Once the expert has
predicted at some period ``T``, the market (taking the prediction at face
value) believes ``N(y_T, (1 - q) T)`` at ``T`` and, at later periods
``t < T``, combines ``x_t``, ``x_T`` and the reported ``y_T``.  Only the most
recent prediction matters, so the state stores just that one.

The ``*_moments`` helpers accept numpy arrays and are what the vectorized
simulator calls; the scalar functions wrap them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateBeliefError, ParameterError, StateError
from .model import check_period, check_quality

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianBelief:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance >= 0.0:
            raise ParameterError(f"variance must be >= 0, got {self.variance}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def logpdf(self, x: float) -> float:
        if self.variance <= 0.0:
            raise DegenerateBeliefError("log density of a zero-variance belief")
        return -0.5 * (x - self.mean) ** 2 / self.variance - 0.5 * math.log(self.variance) - _LOG_SQRT_2PI


@dataclass(frozen=True)
class Uninformed:
    """The expert has not predicted yet."""


@dataclass(frozen=True)
class PostPrediction:
    """The expert's latest prediction was ``y_T_reported`` at period ``T``, when the market signal was ``x_T``."""

    T: int
    y_T_reported: float
    x_T: float


BeliefState = Union[Uninformed, PostPrediction]
UNINFORMED = Uninformed()


def after_prediction_variance(t, T, q):
    return 1.0 / (1.0 / t + q / ((1.0 - q) * T))


def after_prediction_moments(t, T, q, x_t, x_T, y_T):
    """Vectorized mean and variance of the market belief at ``t <= T``."""
    var = after_prediction_variance(t, T, q)
    # x_t/t - x_T/T first so that t == T cancels exactly.
    mean = var * ((x_t / t - x_T / T) + y_T / ((1.0 - q) * T))
    return mean, var


def uninformed_belief(t: int, x_t: float) -> GaussianBelief:
    t = check_period(t)
    return GaussianBelief(float(x_t), float(t))


def belief_at_prediction(t: int, q: float, y_reported: float) -> GaussianBelief:
    """Market posterior right after the expert reports ``y_reported`` at ``t``.

    It is the expert's own distribution ``N(y, (1 - q) t)`` whatever the
    market saw before.
    """
    t = check_period(t)
    q = check_quality(q, scoring=True)
    return GaussianBelief(float(y_reported), (1.0 - q) * t)


def expert_belief(t: int, q: float, y_t: float) -> GaussianBelief:
    t = check_period(t)
    q = check_quality(q, scoring=True)
    return GaussianBelief(float(y_t), (1.0 - q) * t)


def belief_after_prediction(t: int, T: int, q: float, x_t: float, x_T: float, y_T: float) -> GaussianBelief:
    t = check_period(t)
    T = check_period(T, name="T")
    if t > T:
        raise ParameterError(f"need t <= T, got t={t}, T={T}")
    q = check_quality(q, scoring=True)
    mean, var = after_prediction_moments(t, T, q, float(x_t), float(x_T), float(y_T))
    return GaussianBelief(float(mean), float(var))


def pre_prediction_belief(state: BeliefState, t: int, q: float, x_t: float) -> GaussianBelief:
    """Market belief at ``t`` before the expert acts, for either regime."""
    if isinstance(state, Uninformed):
        return uninformed_belief(t, x_t)
    if isinstance(state, PostPrediction):
        if t >= state.T:
            raise StateError(f"current period {t} is not before the latest prediction at {state.T}")
        return belief_after_prediction(t, state.T, q, x_t, state.x_T, state.y_T_reported)
    raise StateError(f"unknown belief state {state!r}")

