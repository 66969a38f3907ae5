"""Episode execution and the Monte Carlo engine.

Rewards are settled at period 0 from the stored prior/posterior beliefs, the
same way the market would pay out once ``x0`` is known.

Monte Carlo runs are split into fixed-size chunks of consecutive episode
indices.  Episode ``i`` is always sampled from ``episode_seed(master_seed, i)``
and chunk results are merged in chunk order, so a run gives bit-identical
numbers whatever the number of worker threads.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .beliefs import (
    UNINFORMED,
    GaussianBelief,
    PostPrediction,
    after_prediction_moments,
    belief_at_prediction,
    pre_prediction_belief,
)
from .errors import ParameterError, ProtocolError, SimulationResourceError
from .model import EpisodePath, Horizon, PathBatch, check_quality, sample_batch
from .rng import check_seed, episode_seeds
from .scoring import log_score, log_score_moments
from .strategy import BatchContext, Predict, Silent, Strategy, StrategyContext

CHUNK_SIZE = 16384


@dataclass(frozen=True)
class PredictionRecord:
    t: int
    reported_mean: float
    prior_belief: GaussianBelief
    posterior_belief: GaussianBelief
    realized_reward: float | None = None


@dataclass(frozen=True)
class EpisodeResult:
    records: tuple[PredictionRecord, ...]
    total_reward: float
    path_seed: int | None


class _CallableStrategy(Strategy):
    def __init__(self, fn: Callable[[StrategyContext], object]):
        self.fn = fn
        self.name = getattr(fn, "__name__", "custom")

    def decide(self, ctx):
        return self.fn(ctx)


def as_strategy(strategy) -> Strategy:
    if isinstance(strategy, Strategy):
        return strategy
    if callable(strategy):
        return _CallableStrategy(strategy)
    raise ParameterError(f"not a strategy: {strategy!r}")


def as_horizon(horizon, t_max: int) -> Horizon:
    if isinstance(horizon, Horizon):
        if horizon.t_max != t_max:
            raise ParameterError(f"horizon has t_max={horizon.t_max}, path has {t_max}")
        return horizon
    return Horizon.explicit(t_max, horizon)


def run_episode(path: EpisodePath, strategy, K, q: float) -> EpisodeResult:
    """Play one episode from ``t_max`` down to 1, then settle every prediction."""
    horizon = as_horizon(K, path.t_max)
    q = check_quality(q, scoring=True)
    strategy = as_strategy(strategy)
    strategy.validate(horizon)

    state = UNINFORMED
    pending = []
    for t in range(path.t_max, 0, -1):
        x_t, y_t = float(path.x[t]), float(path.y[t])
        prior = pre_prediction_belief(state, t, q, x_t)
        allowed = t in horizon
        action = strategy.decide(StrategyContext(t, allowed, x_t, y_t, state, q, horizon))
        if isinstance(action, Predict):
            if not allowed:
                raise ProtocolError(f"{strategy.describe()} predicted at disallowed period {t}")
            reported = float(action.reported_mean)
            pending.append(PredictionRecord(t, reported, prior, belief_at_prediction(t, q, reported)))
            state = PostPrediction(t, reported, x_t)
        elif not isinstance(action, Silent):
            raise ProtocolError(f"{strategy.describe()} returned {action!r}, not an Action")

    records = []
    total = 0.0
    for rec in pending:
        reward = log_score(rec.prior_belief, rec.posterior_belief, path.x0)
        records.append(dataclasses.replace(rec, realized_reward=reward))
        total += reward
    return EpisodeResult(tuple(records), total, path.seed)


@dataclass(frozen=True)
class BatchOutcome:
    """Per-episode results of :func:`simulate_batch`.

    Arrays of shape ``(n, t_max + 1)`` are indexed by period; entries for
    periods without a prediction hold 0 (rewards) or NaN (beliefs).  The
    market's pre-action mean and variance are recorded for every period.
    """

    predicted: np.ndarray
    reported: np.ndarray
    market_mean: np.ndarray
    market_var: np.ndarray
    rewards: np.ndarray
    total: np.ndarray


def simulate_batch(batch: PathBatch, strategy, horizon: Horizon, q: float) -> BatchOutcome:
    """Vectorized :func:`run_episode` over every path in ``batch``."""
    horizon = as_horizon(horizon, batch.t_max)
    q = check_quality(q, scoring=True)
    strategy = as_strategy(strategy)
    strategy.validate(horizon)

    n, t_max = len(batch), batch.t_max
    shape = (n, t_max + 1)
    predicted = np.zeros(shape, dtype=bool)
    reported = np.full(shape, np.nan)
    market_mean = np.full(shape, np.nan)
    market_var = np.full(shape, np.nan)
    last_T = np.zeros(n, dtype=np.int64)
    last_y = np.zeros(n)
    last_x = np.zeros(n)

    for t in range(t_max, 0, -1):
        x_t, y_t = batch.x[:, t], batch.y[:, t]
        mean = x_t.copy()
        var = np.full(n, float(t))
        informed = last_T > 0
        if informed.any():
            m, v = after_prediction_moments(t, last_T[informed], q, x_t[informed], last_x[informed], last_y[informed])
            mean[informed] = m
            var[informed] = v
        market_mean[:, t] = mean
        market_var[:, t] = var

        allowed = t in horizon
        ctx = BatchContext(t, allowed, x_t, y_t, mean, last_T.copy(), last_y.copy(), last_x.copy(), q, horizon)
        mask, rep = strategy.decide_batch(ctx)
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            continue
        if not allowed:
            raise ProtocolError(f"{strategy.describe()} predicted at disallowed period {t}")
        rep = np.asarray(rep, dtype=np.float64)
        predicted[:, t] = mask
        reported[mask, t] = rep[mask]
        last_T[mask] = t
        last_y[mask] = rep[mask]
        last_x[mask] = x_t[mask]

    rewards = np.zeros(shape)
    total = np.zeros(n)
    for t in range(t_max, 0, -1):
        mask = predicted[:, t]
        if mask.any():
            post_var = (1.0 - q) * t
            rewards[mask, t] = log_score_moments(
                market_mean[mask, t], market_var[mask, t], reported[mask, t], post_var, batch.x0[mask]
            )
        total += rewards[:, t]
    return BatchOutcome(predicted, reported, market_mean, market_var, rewards, total)


@dataclass(frozen=True)
class Moments:
    """Count, mean and sum of squared deviations; merged with Chan's pairwise update."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> Moments:
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            return cls()
        mean = float(values.mean())
        return cls(values.size, mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: Moments) -> Moments:
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return Moments(count, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else math.nan

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count > 1 else math.nan


@dataclass(frozen=True)
class MonteCarloSummary:
    n_episodes: int
    mean: float
    stderr: float
    master_seed: int
    config_digest: str

    def z_score(self, target: float) -> float:
        diff = self.mean - target
        if self.stderr == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.stderr


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or int(n) < 2:
        raise ParameterError(f"need at least 2 episodes, got {n!r}")
    return int(n)


def chunk_bounds(n: int, chunk_size: int = CHUNK_SIZE) -> list[tuple[int, int]]:
    return [(start, min(start + chunk_size, n)) for start in range(0, n, chunk_size)]


def map_chunks(
    fn: Callable[[PathBatch], object],
    t_max: int,
    q: float,
    n: int,
    master_seed: int,
    *,
    x0: float = 0.0,
    threads: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> Iterable:
    """Yield ``fn(batch)`` for each chunk of episodes, in episode order."""
    n = _check_n(n)
    master_seed = check_seed(master_seed)
    bounds = chunk_bounds(n, chunk_size)

    def work(bound):
        start, stop = bound
        seeds = episode_seeds(master_seed, np.arange(start, stop))
        return fn(sample_batch(seeds, t_max, q, x0))

    completed = 0
    try:
        if threads <= 1 or len(bounds) == 1:
            for bound in bounds:
                yield work(bound)
                completed = bound[1]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for bound, result in zip(bounds, pool.map(work, bounds)):
                    yield result
                    completed = bound[1]
    except MemoryError:
        raise SimulationResourceError("out of memory during Monte Carlo run", completed) from None


def monte_carlo(
    statistic: Callable[[PathBatch], np.ndarray],
    t_max: int,
    q: float,
    n: int,
    master_seed: int,
    *,
    config: dict | None = None,
    **kwargs,
) -> MonteCarloSummary:
    """Mean and standard error of a per-episode ``statistic`` over ``n`` episodes."""
    total = Moments()
    for values in map_chunks(statistic, t_max, q, n, master_seed, **kwargs):
        total = total.merge(Moments.of(values))
    digest = config_digest(config if config is not None else {"t_max": t_max, "q": q, "n": n})
    return MonteCarloSummary(total.count, total.mean, total.stderr, int(master_seed), digest)


def sample_statistic(
    statistic: Callable[[PathBatch], np.ndarray], t_max: int, q: float, n: int, master_seed: int, **kwargs
) -> np.ndarray:
    """Concatenate a per-episode statistic (one row per episode) over ``n`` episodes."""
    return np.concatenate(list(map_chunks(statistic, t_max, q, n, master_seed, **kwargs)), axis=0)


def _run_config(horizon: Horizon, q: float, strategy: Strategy, n: int, master_seed: int, x0: float) -> dict:
    return {
        "t_max": horizon.t_max,
        "allowed": horizon.describe(),
        "q": q,
        "strategy": strategy.describe(),
        "n": n,
        "seed": master_seed,
        "x0": x0,
    }


def run_monte_carlo(
    horizon: Horizon,
    q: float,
    strategy,
    n: int,
    master_seed: int,
    *,
    x0: float = 0.0,
    threads: int = 1,
) -> MonteCarloSummary:
    """Mean total reward of ``strategy`` over ``n`` seeded episodes."""
    strategy = as_strategy(strategy)
    q = check_quality(q, scoring=True)
    strategy.validate(horizon)
    config = _run_config(horizon, q, strategy, n, master_seed, x0)
    return monte_carlo(
        lambda batch: simulate_batch(batch, strategy, horizon, q).total,
        horizon.t_max,
        q,
        n,
        master_seed,
        config=config,
        x0=x0,
        threads=threads,
    )


def run_tournament(
    horizon: Horizon,
    q: float,
    strategies: Sequence,
    n: int,
    master_seed: int,
    *,
    x0: float = 0.0,
    threads: int = 1,
) -> list[MonteCarloSummary]:
    """Run several strategies on the same sampled paths; one summary per strategy."""
    strategies = [as_strategy(s) for s in strategies]
    q = check_quality(q, scoring=True)
    for s in strategies:
        s.validate(horizon)

    def stat(batch):
        return [simulate_batch(batch, s, horizon, q).total for s in strategies]

    acc = [Moments() for _ in strategies]
    for chunk in map_chunks(stat, horizon.t_max, q, n, master_seed, x0=x0, threads=threads):
        acc = [m.merge(Moments.of(v)) for m, v in zip(acc, chunk)]
    return [
        MonteCarloSummary(m.count, m.mean, m.stderr, int(master_seed), config_digest(_run_config(horizon, q, s, n, master_seed, x0)))
        for m, s in zip(acc, strategies)
    ]


@dataclass(frozen=True)
class PairedSummary:
    first: MonteCarloSummary
    second: MonteCarloSummary
    difference: MonteCarloSummary


def run_paired(
    horizon: Horizon,
    q: float,
    first,
    second,
    n: int,
    master_seed: int,
    *,
    x0: float = 0.0,
    threads: int = 1,
) -> PairedSummary:
    """Compare two strategies on common paths; ``difference`` is first minus second."""
    first, second = as_strategy(first), as_strategy(second)
    q = check_quality(q, scoring=True)
    first.validate(horizon)
    second.validate(horizon)

    def stat(batch):
        a = simulate_batch(batch, first, horizon, q).total
        b = simulate_batch(batch, second, horizon, q).total
        return a, b, a - b

    acc = [Moments(), Moments(), Moments()]
    for chunk in map_chunks(stat, horizon.t_max, q, n, master_seed, x0=x0, threads=threads):
        acc = [m.merge(Moments.of(v)) for m, v in zip(acc, chunk)]
    cfg_a = _run_config(horizon, q, first, n, master_seed, x0)
    cfg_b = _run_config(horizon, q, second, n, master_seed, x0)
    diff_cfg = {"paired": [cfg_a, cfg_b]}
    digests = [config_digest(cfg_a), config_digest(cfg_b), config_digest(diff_cfg)]
    return PairedSummary(*(MonteCarloSummary(m.count, m.mean, m.stderr, int(master_seed), d) for m, d in zip(acc, digests)))
