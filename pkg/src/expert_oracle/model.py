"""The market / expert signal process.

Time runs backwards: period ``t`` means ``t`` steps remain before the outcome
``x0`` is revealed at period 0.  Step ``i`` (1-based) is split into a
knowledge part ``a_i ~ N(0, q)``, which the expert sees through, and an
uncertainty part ``b_i ~ N(0, 1 - q)``, which both signals carry::

    x_t = x0 + sum_{i<=t} (a_i + b_i)     market signal
    y_t = x0 + sum_{i<=t} b_i             expert signal
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DegenerateBeliefError, ParameterError, PeriodIndexError
from .rng import check_seed, standard_normals


def check_quality(q: float, *, scoring: bool = False) -> float:
    """Validate an expert quality.

    Sampling accepts the whole closed interval; anything that builds a belief
    from the expert's signal needs ``q < 1`` because the belief would have
    zero variance.
    """
    q = float(q)
    if not 0.0 <= q <= 1.0 or math.isnan(q):
        raise ParameterError(f"quality q must lie in [0, 1], got {q}")
    if scoring and q >= 1.0:
        raise DegenerateBeliefError("q = 1 gives a zero-variance expert belief")
    return q


def check_period(t, *, name: str = "t", minimum: int = 1) -> int:
    if isinstance(t, bool) or int(t) != t:
        raise ParameterError(f"{name} must be an integer period, got {t!r}")
    t = int(t)
    if t < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {t}")
    return t


@dataclass(frozen=True)
class Horizon:
    """Number of periods and the fixed set of periods at which predicting is allowed."""

    t_max: int
    allowed: frozenset[int]

    def __post_init__(self):
        t_max = check_period(self.t_max, name="t_max")
        allowed = frozenset(int(t) for t in self.allowed)
        bad = sorted(t for t in allowed if not 1 <= t <= t_max)
        if bad:
            raise ParameterError(f"allowed periods {bad} outside [1, {t_max}]")
        object.__setattr__(self, "t_max", t_max)
        object.__setattr__(self, "allowed", allowed)

    @classmethod
    def all_periods(cls, t_max: int) -> Horizon:
        return cls(t_max, frozenset(range(1, int(t_max) + 1)))

    @classmethod
    def every(cls, t_max: int, k: int) -> Horizon:
        """Periods ``t_max, t_max - k, t_max - 2k, ...`` down to 1."""
        k = check_period(k, name="k")
        return cls(t_max, frozenset(range(int(t_max), 0, -k)))

    @classmethod
    def explicit(cls, t_max: int, periods: Iterable[int]) -> Horizon:
        return cls(t_max, frozenset(periods))

    @classmethod
    def parse(cls, t_max: int, text) -> Horizon:
        """Build from ``"all"``, ``"every-k"`` or a comma/space separated list of periods."""
        if not isinstance(text, str):
            return cls.explicit(t_max, text)
        spec = text.strip().lower()
        if spec == "all":
            return cls.all_periods(t_max)
        if spec.startswith("every-"):
            try:
                k = int(spec[len("every-"):])
            except ValueError:
                raise ParameterError(f"bad allowed-periods value {text!r}") from None
            return cls.every(t_max, k)
        try:
            periods = [int(p) for p in spec.replace(",", " ").split()]
        except ValueError:
            raise ParameterError(f"bad allowed-periods value {text!r}") from None
        if not periods:
            raise ParameterError("empty allowed-periods list")
        return cls.explicit(t_max, periods)

    def __contains__(self, t) -> bool:
        return t in self.allowed

    def descending(self) -> list[int]:
        return sorted(self.allowed, reverse=True)

    def describe(self) -> str:
        if self.allowed == frozenset(range(1, self.t_max + 1)):
            return "all"
        return " ".join(str(t) for t in self.descending())


def _readonly(arr) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EpisodePath:
    """One sampled world.

    ``a[i - 1]`` and ``b[i - 1]`` hold the step for period ``i``.  The
    cumulative signals are precomputed; ``x[t]`` and ``y[t]`` are indexed by
    period with ``x[0] == y[0] == x0``.
    """

    x0: float
    a: np.ndarray
    b: np.ndarray
    seed: int | None = None
    x: np.ndarray = field(init=False, repr=False, compare=False)
    y: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a, b = _readonly(self.a), _readonly(self.b)
        if a.ndim != 1 or a.shape != b.shape or a.size == 0:
            raise ParameterError("a and b must be non-empty 1-d arrays of equal length")
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        x = np.empty(a.size + 1)
        y = np.empty(a.size + 1)
        x[0] = y[0] = self.x0
        x[1:] = self.x0 + np.cumsum(a + b)
        y[1:] = self.x0 + np.cumsum(b)
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "y", _readonly(y))

    @property
    def t_max(self) -> int:
        return self.a.size

    @property
    def z(self) -> np.ndarray:
        return self.a + self.b


@dataclass(frozen=True)
class SignalView:
    t: int
    x_t: float
    y_t: float


def _check_index(path: EpisodePath, t) -> int:
    if isinstance(t, bool) or int(t) != t or not 0 <= int(t) <= path.t_max:
        raise PeriodIndexError(f"period {t!r} outside [0, {path.t_max}]")
    return int(t)


def market_signal(path: EpisodePath, t: int) -> float:
    return float(path.x[_check_index(path, t)])


def expert_signal(path: EpisodePath, t: int) -> float:
    return float(path.y[_check_index(path, t)])


def signals(path: EpisodePath, t: int) -> SignalView:
    t = _check_index(path, t)
    return SignalView(t, float(path.x[t]), float(path.y[t]))


@dataclass(frozen=True)
class PathBatch:
    """Many episodes at once; arrays have one row per episode.

    ``x`` and ``y`` have ``t_max + 1`` columns indexed by period.
    """

    x0: np.ndarray
    a: np.ndarray
    b: np.ndarray
    seeds: np.ndarray
    x: np.ndarray = field(init=False, repr=False, compare=False)
    y: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, t_max = self.a.shape
        x = np.empty((n, t_max + 1))
        y = np.empty((n, t_max + 1))
        x[:, 0] = y[:, 0] = self.x0
        x[:, 1:] = self.x0[:, None] + np.cumsum(self.a + self.b, axis=1)
        y[:, 1:] = self.x0[:, None] + np.cumsum(self.b, axis=1)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.a.shape[0]

    @property
    def t_max(self) -> int:
        return self.a.shape[1]

    def episode(self, i: int) -> EpisodePath:
        return EpisodePath(float(self.x0[i]), self.a[i], self.b[i], int(self.seeds[i]))


def sample_batch(seeds, t_max: int, q: float, x0: float = 0.0) -> PathBatch:
    """Sample one path per seed.

    Draw ``2(i-1)`` of a seed's stream scales to ``a_i`` and draw ``2i-1`` to
    ``b_i``, so a shorter horizon is a prefix of a longer one.
    """
    t_max = check_period(t_max, name="t_max")
    q = check_quality(q)
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1)
    draws = standard_normals(seeds, 2 * t_max)
    a = math.sqrt(q) * draws[:, 0::2]
    b = math.sqrt(1.0 - q) * draws[:, 1::2]
    return PathBatch(np.full(seeds.size, float(x0)), a, b, seeds)


def sample_episode(rng_seed: int, t_max: int, q: float, x0: float = 0.0) -> EpisodePath:
    """Sample a single path; identical to row 0 of ``sample_batch([rng_seed], ...)``."""
    rng_seed = check_seed(rng_seed)
    batch = sample_batch([rng_seed], t_max, q, x0)
    return batch.episode(0)
