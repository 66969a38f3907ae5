"""Expert policies: what to do at period ``t`` given what the expert knows.

A policy sees one :class:`StrategyContext` and returns :data:`SILENT` or a
:class:`Predict`.  The simulator also hands policies a whole batch of
episodes at once through :meth:`Strategy.decide_batch`; the built-in policies
implement it with array operations, while a user policy that only defines
:meth:`Strategy.decide` falls back to a per-episode loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .beliefs import UNINFORMED, BeliefState, PostPrediction, pre_prediction_belief
from .errors import ConfigurationError
from .model import Horizon


@dataclass(frozen=True)
class Silent:
    pass


@dataclass(frozen=True)
class Predict:
    reported_mean: float


Action = Union[Silent, Predict]
SILENT = Silent()


@dataclass(frozen=True)
class StrategyContext:
    t: int
    in_allowed_set: bool
    x_t: float
    y_t: float
    belief_state: BeliefState
    q: float
    horizon: Horizon


@dataclass(frozen=True)
class BatchContext:
    """The same information as :class:`StrategyContext`, one array entry per episode.

    ``prior_mean`` is the market mean before the expert acts.  ``last_T`` is 0
    for episodes where the expert has not predicted yet.
    """

    t: int
    in_allowed_set: bool
    x_t: np.ndarray
    y_t: np.ndarray
    prior_mean: np.ndarray
    last_T: np.ndarray
    last_y: np.ndarray
    last_x: np.ndarray
    q: float
    horizon: Horizon

    def __len__(self) -> int:
        return self.x_t.shape[0]

    def episode(self, i: int) -> StrategyContext:
        if self.last_T[i] > 0:
            state = PostPrediction(int(self.last_T[i]), float(self.last_y[i]), float(self.last_x[i]))
        else:
            state = UNINFORMED
        return StrategyContext(
            self.t, self.in_allowed_set, float(self.x_t[i]), float(self.y_t[i]), state, self.q, self.horizon
        )


def truthful_always(ctx: StrategyContext) -> Action:
    return Predict(ctx.y_t) if ctx.in_allowed_set else SILENT


def _require_allowed(period: int, horizon: Horizon, what: str) -> None:
    if period not in horizon:
        raise ConfigurationError(f"{what} {period} is not an allowed period")


def distort_once(ctx: StrategyContext, T_star: int, c: float) -> Action:
    _require_allowed(T_star, ctx.horizon, "T_star")
    if not ctx.in_allowed_set:
        return SILENT
    return Predict(ctx.y_t + c if ctx.t == T_star else ctx.y_t)


def skip_one(ctx: StrategyContext, t_skip: int) -> Action:
    _require_allowed(t_skip, ctx.horizon, "t_skip")
    if not ctx.in_allowed_set or ctx.t == t_skip:
        return SILENT
    return Predict(ctx.y_t)


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not theta >= 0.0:
        raise ConfigurationError(f"theta must be >= 0, got {theta}")
    return theta


def threshold_policy(ctx: StrategyContext, theta: float) -> Action:
    """Predict only when the market's current mean is at least ``theta`` away from ``y_t``."""
    theta = _check_theta(theta)
    if not ctx.in_allowed_set:
        return SILENT
    prior = pre_prediction_belief(ctx.belief_state, ctx.t, ctx.q, ctx.x_t)
    return Predict(ctx.y_t) if abs(prior.mean - ctx.y_t) >= theta else SILENT


class Strategy:
    """Base class for policies run by the simulator."""

    name = "custom"

    def params(self) -> dict:
        return {}

    def describe(self) -> str:
        p = self.params()
        if not p:
            return self.name
        return f"{self.name}(" + ",".join(f"{k}={v}" for k, v in p.items()) + ")"

    def validate(self, horizon: Horizon) -> None:
        """Raise :class:`ConfigurationError` if the policy cannot run on ``horizon``."""

    def decide(self, ctx: StrategyContext) -> Action:
        raise NotImplementedError

    def decide_batch(self, ctx: BatchContext) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(predict_mask, reported_means)`` for every episode in the batch."""
        n = len(ctx)
        mask = np.zeros(n, dtype=bool)
        reported = np.zeros(n)
        for i in range(n):
            action = self.decide(ctx.episode(i))
            if isinstance(action, Predict):
                mask[i] = True
                reported[i] = action.reported_mean
        return mask, reported

    def __repr__(self) -> str:
        return f"<Strategy {self.describe()}>"


class AlwaysSilent(Strategy):
    name = "silent"

    def decide(self, ctx):
        return SILENT

    def decide_batch(self, ctx):
        return np.zeros(len(ctx), dtype=bool), np.zeros(len(ctx))


class TruthfulAlways(Strategy):
    name = "truthful"

    def decide(self, ctx):
        return truthful_always(ctx)

    def decide_batch(self, ctx):
        return np.full(len(ctx), ctx.in_allowed_set), ctx.y_t.copy()


class DistortOnce(Strategy):
    name = "distort"

    def __init__(self, T_star: int, c: float):
        self.T_star = int(T_star)
        self.c = float(c)
        if not math.isfinite(self.c):
            raise ConfigurationError(f"c must be finite, got {c}")

    def params(self):
        return {"T_star": self.T_star, "c": self.c}

    def validate(self, horizon):
        _require_allowed(self.T_star, horizon, "T_star")

    def decide(self, ctx):
        return distort_once(ctx, self.T_star, self.c)

    def decide_batch(self, ctx):
        shift = self.c if ctx.t == self.T_star else 0.0
        return np.full(len(ctx), ctx.in_allowed_set), ctx.y_t + shift


class SkipOne(Strategy):
    name = "skip"

    def __init__(self, t_skip: int):
        self.t_skip = int(t_skip)

    def params(self):
        return {"t_skip": self.t_skip}

    def validate(self, horizon):
        _require_allowed(self.t_skip, horizon, "t_skip")

    def decide(self, ctx):
        return skip_one(ctx, self.t_skip)

    def decide_batch(self, ctx):
        speak = ctx.in_allowed_set and ctx.t != self.t_skip
        return np.full(len(ctx), speak), ctx.y_t.copy()


class ThresholdPolicy(Strategy):
    name = "threshold"

    def __init__(self, theta: float):
        self.theta = _check_theta(theta)

    def params(self):
        return {"theta": self.theta}

    def decide(self, ctx):
        return threshold_policy(ctx, self.theta)

    def decide_batch(self, ctx):
        if not ctx.in_allowed_set:
            return np.zeros(len(ctx), dtype=bool), ctx.y_t.copy()
        return np.abs(ctx.prior_mean - ctx.y_t) >= self.theta, ctx.y_t.copy()


BUILTIN = {
    "silent": AlwaysSilent,
    "truthful": TruthfulAlways,
    "distort": DistortOnce,
    "skip": SkipOne,
    "threshold": ThresholdPolicy,
}


def make_strategy(name: str, **params) -> Strategy:
    try:
        cls = BUILTIN[name]
    except KeyError:
        raise ConfigurationError(f"unknown strategy {name!r}; choose from {sorted(BUILTIN)}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for strategy {name!r}: {exc}") from None
