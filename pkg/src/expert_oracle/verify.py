"""Verification suites: each closed form checked against simulation.

A Monte Carlo check passes when its z-score is within ``Z_MAX``; an analytic
check passes when the two numbers agree to the stated tolerance; a KS check
passes when the statistic is below the 1% critical value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .analytics import (
    cumulative_expectation_gamma,
    cumulative_expectation_sum,
    conditional_gap_moments,
    first_case_gap_moment,
    speak_gap_coefficients,
)
from .errors import ParameterError
from .model import Horizon, check_quality
from .scoring import (
    consecutive_expectation,
    distortion_delta,
    excess_log,
    first_prediction_expectation,
)
from .simulator import Moments, run_paired, sample_statistic, simulate_batch
from .strategy import DistortOnce, SkipOne, TruthfulAlways

Z_MAX = 4.0
KS_LEVEL = 0.01


@dataclass(frozen=True)
class CheckResult:
    name: str
    kind: str
    estimate: float
    target: float
    stderr: float
    z: float
    passed: bool
    detail: str = ""

    def __post_init__(self):
        for name in ("estimate", "target", "stderr", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "passed", bool(self.passed))


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    params: dict
    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def mc_check(name: str, mean: float, stderr: float, target: float, z_max: float = Z_MAX) -> CheckResult:
    diff = mean - target
    if stderr > 0.0:
        z = diff / stderr
    else:
        z = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return CheckResult(name, "monte-carlo", mean, target, stderr, z, abs(z) <= z_max)


def mc_check_values(name: str, values: np.ndarray, target: float) -> CheckResult:
    m = Moments.of(values)
    return mc_check(name, m.mean, m.stderr, target)


def analytic_check(name: str, estimate: float, target: float, rel_tol: float, abs_tol: float = 0.0) -> CheckResult:
    err = abs(estimate - target)
    passed = err <= max(rel_tol * abs(target), abs_tol)
    return CheckResult(name, "analytic", estimate, target, math.nan, math.nan, passed, f"|err|={err:.3g}")


def ks_check(name: str, sample: np.ndarray, level: float = KS_LEVEL) -> CheckResult:
    """Kolmogorov-Smirnov test of ``sample`` against the standard normal."""
    res = stats.kstest(sample, "norm")
    critical = float(stats.kstwo.ppf(1.0 - level, len(sample)))
    return CheckResult(
        name, "ks", float(res.statistic), critical, math.nan, math.nan, res.statistic <= critical, f"p={res.pvalue:.3g}"
    )


def _ols(x: np.ndarray, y: np.ndarray):
    """Slope, intercept, their standard errors, and the residuals of ``y ~ x``."""
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - intercept - slope * x
    s2 = np.sum(resid**2) / (n - 2)
    se_slope = math.sqrt(s2 / sxx)
    se_intercept = math.sqrt(s2 * (1.0 / n + xm**2 / sxx))
    return float(slope), float(intercept), se_slope, se_intercept, resid


# Suites.  Each takes a dict holding every key of its defaults and a thread count.


def _calibration(p, threads=1) -> list[CheckResult]:
    q, T, t = p["q"], p["t_max"], p["t"]
    horizon = Horizon.explicit(T, [T, t])

    def stat(batch):
        out = simulate_batch(batch, TruthfulAlways(), horizon, q)
        x0 = batch.x0
        return np.column_stack(
            [
                (x0 - batch.x[:, t]) / math.sqrt(t),
                (x0 - out.market_mean[:, t]) / np.sqrt(out.market_var[:, t]),
                (x0 - batch.y[:, t]) / math.sqrt((1.0 - q) * t),
            ]
        )

    res = sample_statistic(stat, T, q, p["n"], p["seed"], threads=threads)
    checks = []
    for col, regime in enumerate(["uninformed", "after-prediction", "at-prediction"]):
        r = res[:, col]
        checks.append(ks_check(f"{regime} residuals ~ N(0,1)", r))
        checks.append(mc_check_values(f"{regime} residual mean", r, 0.0))
        checks.append(mc_check_values(f"{regime} residual variance", r**2, 1.0))
    return checks


def _kl(p, threads=1) -> list[CheckResult]:
    q, T, t = p["q"], p["t_max"], p["t"]
    horizon = Horizon.explicit(T, [T, t])
    var_plus = (1.0 - q) * t

    def stat(batch):
        out = simulate_batch(batch, TruthfulAlways(), horizon, q)
        first = out.rewards[:, T]
        first_kl = first_prediction_expectation(T, q, batch.x[:, T], batch.y[:, T])
        var_minus = out.market_var[:, t]
        second_kl = (batch.y[:, t] - out.market_mean[:, t]) ** 2 / (2.0 * var_minus) + 0.5 * excess_log(
            1.0 - var_plus / var_minus[0]
        )
        return np.column_stack([first, first - first_kl, out.rewards[:, t] - second_kl])

    res = sample_statistic(stat, T, q, p["n"], p["seed"], threads=threads)
    return [
        mc_check_values("first prediction: mean reward = 1/2 log(1/(1-q))", res[:, 0], -0.5 * math.log1p(-q)),
        mc_check_values("first prediction: reward - KL(signals)", res[:, 1], 0.0),
        mc_check_values("later prediction: reward - KL(signals)", res[:, 2], 0.0),
    ]


def _consecutive(p, threads=1) -> list[CheckResult]:
    q, T, t = p["q"], p["t_max"], p["t"]
    horizon = Horizon.explicit(T, [T, t])
    res = sample_statistic(
        lambda b: simulate_batch(b, TruthfulAlways(), horizon, q).rewards[:, t], T, q, p["n"], p["seed"], threads=threads
    )
    return [mc_check_values(f"reward at t={t} after prediction at T={T}", res, consecutive_expectation(T, t, q))]


def _gain_loss(p, threads=1) -> list[CheckResult]:
    q, T, t, c = p["q"], p["t_max"], p["t"], p["c"]
    horizon = Horizon.explicit(T, [T, t])
    paired = run_paired(horizon, q, DistortOnce(T, c), TruthfulAlways(), p["n"], p["seed"], threads=threads)
    d = paired.difference
    return [mc_check(f"distort by c={c} minus truthful", d.mean, d.stderr, distortion_delta(T, t, q, c))]


def _at_t(p, threads=1) -> list[CheckResult]:
    q, T, t = p["q"], p["t_max"], p["t"]
    # E over x_T - y_T ~ N(0, qT) by Gauss-Hermite quadrature (exact for polynomials).
    nodes, weights = np.polynomial.hermite_e.hermegauss(8)
    gaps = nodes * math.sqrt(q * T)
    tower = float(np.sum(weights * first_case_gap_moment(t, T, q, gaps, 0.0)) / math.sqrt(2.0 * math.pi))

    def stat(batch):
        g_t = batch.x[:, t] - batch.y[:, t]
        return g_t**2 - first_case_gap_moment(t, T, q, batch.x[:, T], batch.y[:, T])

    res = sample_statistic(stat, T, q, p["n"], p["seed"], threads=threads)
    return [
        analytic_check("tower rule: E[formula] = q t", tower, q * t, 1e-12, 1e-14),
        mc_check_values("(x_t - y_t)^2 - E_T[(x_t - y_t)^2]", res, 0.0),
    ]


def _gap_moments(p, threads=1) -> list[CheckResult]:
    q, T, t, tau = p["q"], p["t_max"], p["t"], p["tau"]
    if not 1 <= tau < t < T:
        raise ParameterError(f"need 1 <= tau < t < t_max, got tau={tau}, t={t}, t_max={T}")
    horizon = Horizon.explicit(T, [T])
    coeff, var = conditional_gap_moments(tau, t, T, q)

    def stat(batch):
        out = simulate_batch(batch, TruthfulAlways(), horizon, q)
        z_t = out.market_mean[:, t] - batch.y[:, t]
        z_tau = out.market_mean[:, tau] - batch.y[:, tau]
        return np.column_stack([z_t, z_tau, out.market_var[:, t], out.market_var[:, tau]])

    res = sample_statistic(stat, T, q, p["n"], p["seed"], threads=threads)
    z_t, z_tau = res[:, 0], res[:, 1]
    slope, intercept, se_s, se_i, resid = _ols(z_t, z_tau)
    scaled_slope, scaled_icpt, se_ss, se_si, _ = _ols(z_t / res[:, 2], z_tau / res[:, 3])
    r2 = Moments.of(resid**2)
    return [
        mc_check("regression slope = mean_coeff", slope, se_s, coeff),
        mc_check("regression intercept = 0", intercept, se_i, 0.0),
        mc_check("residual variance = variance", r2.mean, r2.stderr, var),
        mc_check("scaled gap martingale: slope = 1", scaled_slope, se_ss, 1.0),
        mc_check("scaled gap martingale: intercept = 0", scaled_icpt, se_si, 0.0),
    ]


def skip_targets(horizon: Horizon, t_skip: int, q: float):
    """Unconditional expected loss from skipping ``t_skip``, and a per-episode conditional target.

    The conditional target maps ``(batch, truthful BatchOutcome)`` to the expected
    loss given what the expert knows at ``t_skip``.
    """
    periods = horizon.descending()
    i = periods.index(t_skip)
    prev = periods[i - 1] if i > 0 else None
    nxt = periods[i + 1] if i + 1 < len(periods) else None

    if nxt is None:
        # Nothing left to say: skipping forfeits this prediction's reward.
        if prev is None:
            uncond = -0.5 * math.log1p(-q)
        else:
            uncond = consecutive_expectation(prev, t_skip, q)

        def conditional(batch, out):
            mean, var = out.market_mean[:, t_skip], out.market_var[:, t_skip]
            post = (1.0 - q) * t_skip
            return (batch.y[:, t_skip] - mean) ** 2 / (2.0 * var) + 0.5 * excess_log(1.0 - post / var[0])

        return uncond, conditional

    if prev is None:
        uncond = consecutive_expectation(t_skip, nxt, q)
    else:
        uncond = (
            consecutive_expectation(prev, t_skip, q)
            + consecutive_expectation(t_skip, nxt, q)
            - consecutive_expectation(prev, nxt, q)
        )
    coef, const = speak_gap_coefficients(t_skip, nxt, q, prev)

    def conditional(batch, out):
        gap = out.market_mean[:, t_skip] - batch.y[:, t_skip]
        return coef * gap**2 + const

    return uncond, conditional


def _predict_always(p, threads=1) -> list[CheckResult]:
    q, T = p["q"], p["t_max"]
    horizon = Horizon.parse(T, p["allowed"])
    t_skip = p["t_skip"]
    skip = SkipOne(t_skip)
    skip.validate(horizon)
    uncond, conditional = skip_targets(horizon, t_skip, q)

    def stat(batch):
        truthful = simulate_batch(batch, TruthfulAlways(), horizon, q)
        skipped = simulate_batch(batch, skip, horizon, q)
        diff = truthful.total - skipped.total
        return np.column_stack([diff, diff - conditional(batch, truthful)])

    res = sample_statistic(stat, T, q, p["n"], p["seed"], threads=threads)
    m = Moments.of(res[:, 0])
    lower = m.mean - Z_MAX * m.stderr
    return [
        mc_check(f"truthful minus skip({t_skip}) = expected gap", m.mean, m.stderr, uncond),
        mc_check_values(f"truthful minus skip({t_skip}) - speak_gap(signals)", res[:, 1], 0.0),
        CheckResult(
            f"skip({t_skip}) strictly lowers mean reward",
            "one-sided",
            m.mean,
            0.0,
            m.stderr,
            m.mean / m.stderr if m.stderr > 0 else math.inf,
            lower > 0.0,
            f"mean - {Z_MAX:g} stderr = {lower:.3g}",
        ),
    ]


def _theorem_average(p, threads=1) -> list[CheckResult]:
    q, T = p["q"], p["t_max"]
    horizon = Horizon.all_periods(T)
    xi = cumulative_expectation_gamma(T, q).xi
    res = sample_statistic(
        lambda b: simulate_batch(b, TruthfulAlways(), horizon, q).total, T, q, p["n"], p["seed"], threads=threads
    )
    m = Moments.of(res)
    rel = m.stderr / abs(m.mean) if m.mean != 0 else math.inf
    return [
        analytic_check("sum form = gamma form", cumulative_expectation_sum(T, q).xi, xi, 1e-10),
        mc_check("mean total reward = Xi(T)", m.mean, m.stderr, xi),
        CheckResult("stderr below 1% of mean", "precision", rel, 0.01, math.nan, math.nan, rel < 0.01),
    ]


@dataclass(frozen=True)
class Suite:
    run: Callable[[dict], list]
    defaults: dict


SUITES: dict[str, Suite] = {
    "calibration": Suite(_calibration, {"q": 0.6, "t_max": 10, "t": 4, "n": 100_000, "seed": 11}),
    "kl": Suite(_kl, {"q": 0.5, "t_max": 20, "t": 12, "n": 100_000, "seed": 12}),
    "consecutive": Suite(_consecutive, {"q": 0.5, "t_max": 10, "t": 5, "n": 1_000_000, "seed": 13}),
    "gain-loss": Suite(_gain_loss, {"q": 0.5, "t_max": 10, "t": 5, "c": 1.0, "n": 1_000_000, "seed": 14}),
    "at-t": Suite(_at_t, {"q": 0.5, "t_max": 10, "t": 4, "n": 1_000_000, "seed": 15}),
    "gap-moments": Suite(_gap_moments, {"q": 0.5, "t_max": 10, "t": 8, "tau": 4, "n": 1_000_000, "seed": 16}),
    "predict-always": Suite(
        _predict_always, {"q": 0.5, "t_max": 12, "allowed": "12 8 3", "t_skip": 8, "n": 1_000_000, "seed": 17}
    ),
    "theorem-average": Suite(_theorem_average, {"q": 0.5, "t_max": 20, "n": 100_000, "seed": 18}),
}


def suite_params(name: str, params: dict | None = None) -> dict:
    if name not in SUITES:
        raise ParameterError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    merged = dict(SUITES[name].defaults)
    for key, value in (params or {}).items():
        if key not in merged:
            raise ParameterError(f"suite {name!r} has no parameter {key!r}")
        merged[key] = value
    check_quality(merged["q"], scoring=True)
    return merged


def verify_suite(name: str, params: dict | None = None, *, threads: int = 1) -> SuiteReport:
    merged = suite_params(name, params)
    checks = SUITES[name].run(merged, threads)
    return SuiteReport(name, merged, tuple(checks))


def verify_all(overrides: dict | None = None, *, threads: int = 1) -> list[SuiteReport]:
    """Run every suite, applying each override only to suites that take that parameter."""
    reports = []
    for name, suite in SUITES.items():
        params = {k: v for k, v in (overrides or {}).items() if k in suite.defaults}
        reports.append(verify_suite(name, params, threads=threads))
    return reports
