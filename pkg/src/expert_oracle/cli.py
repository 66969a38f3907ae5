"""Command-line front end.

Subcommands: ``simulate``, ``sweep``, ``verify`` and ``table``.  Exit status is
0 on success, 1 on a runtime failure (or a failed verification) and 2 on a
usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import AfterPrediction, FirstPrediction, SpeakGapInputs, cumulative_expectation_gamma, speak_gap
from .errors import ConfigurationError, ExpertOracleError, ParameterError, PeriodIndexError
from .model import Horizon, check_period, check_quality
from .rng import check_seed
from .scoring import UNIT, consecutive_expectation
from .simulator import run_tournament
from .strategy import BUILTIN, make_strategy
from .verify import SUITES, verify_all, verify_suite

SEED_ENV = "EXPERT_ORACLE_SEED"
CONFIG_SECTION = "experiment"
SIMULATE_COLUMNS = ("t_max", "q", "allowed", "strategy", "mean", "stderr", "n", "seed")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad command line or configuration file."""


# Settings shared by every subcommand: (dest, help).  All are read as strings
# so a config file and the flags go through the same parser.
SETTINGS = {
    "q": "signal quality q, or a grid such as 0.1,0.5 or 0.1:0.9:0.1",
    "t_max": "horizon length (a grid for sweep and table)",
    "allowed": "allowed prediction periods: all, every-k or a list such as '12 8 3' (sweep: separate with ';')",
    "strategy": f"comma-separated strategies from {', '.join(BUILTIN)}",
    "c": "distortion added by the distort strategy",
    "t_star": "period the distort strategy misreports at (default: first allowed period)",
    "t_skip": "period the skip strategy stays silent at (default: first allowed period)",
    "theta": "threshold for the threshold strategy",
    "n": "number of episodes",
    "seed": f"master seed (falls back to ${SEED_ENV}, then 0)",
    "threads": "worker threads (default: available CPUs)",
    "t": "period t (verify suites), or a grid of t (consecutive table)",
    "tau": "earlier period tau for the gap-moments suite",
    "t1": "speak-gap table: grid of the earlier-acting period t1",
    "t2": "speak-gap table: grid of the later period t2",
    "gap": "speak-gap table: grid of the current signal gap",
    "T": "speak-gap table: period of the last prediction, or 'none' before any prediction",
    "out": "output file (default: standard output)",
    "format": "csv or json",
    "gnuplot_script": "also write a gnuplot script that plots the output file",
}


def _flag(dest: str) -> str:
    return "--" + dest.replace("_", "-")


# ---------------------------------------------------------------- parsing


def _number_grid(text: str, kind=float) -> list:
    """``"a,b,c"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise UsageError(f"range {text!r} must be start:stop:step with step > 0")
            start, stop, step = parts
            count = math.floor((stop - start) / step + 1e-9) + 1
            values = [start + i * step for i in range(max(count, 0))]
            # 0.1 + 2 * 0.1 is not 0.3; round to the step's precision
            digits = max(0, -math.floor(math.log10(step)) + 6)
            values = [round(v, digits) for v in values]
        else:
            values = [float(p) for p in text.replace(" ", ",").split(",") if p]
    except ValueError:
        raise UsageError(f"not a number grid: {text!r}") from None
    if kind is int:
        if any(v != int(v) for v in values):
            raise UsageError(f"grid {text!r} must hold integers")
        return [int(v) for v in values]
    return values


def _one(text: str, kind, name: str):
    try:
        return kind(text)
    except (TypeError, ValueError):
        raise UsageError(f"--{name.replace('_', '-')} expects a {kind.__name__}, got {text!r}") from None


def _int(text: str, name: str) -> int:
    value = _one(text, float, name)
    if value != int(value):
        raise UsageError(f"--{name.replace('_', '-')} expects an integer, got {text!r}")
    return int(value)


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; keys may use ``-`` or ``_``."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    try:
        parser.read_string(f"[{CONFIG_SECTION}]\n" + text, source=path)
    except configparser.Error as exc:
        raise UsageError(f"malformed config file {path}: {exc}") from None
    values = {}
    for key, value in parser.items(CONFIG_SECTION):
        dest = key.strip().replace("-", "_")
        if dest not in SETTINGS:
            raise UsageError(f"unknown key {key!r} in config file {path}")
        values[dest] = value.strip()
    return values


def resolve(args: argparse.Namespace) -> dict:
    """Merge settings: flags win over the config file; unset keys are absent."""
    merged = read_config(args.config) if args.config else {}
    for dest in SETTINGS:
        value = getattr(args, dest, None)
        if value is not None:
            merged[dest] = value
    if "seed" not in merged and os.environ.get(SEED_ENV):
        merged["seed"] = os.environ[SEED_ENV]
    fmt = merged.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise UsageError(f"--format must be csv or json, got {fmt!r}")
    merged["format"] = fmt
    return merged


def _seed(settings: dict) -> int:
    seed = _int(settings.get("seed", "0"), "seed")
    try:
        return check_seed(seed)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None


def _threads(settings: dict) -> int:
    if "threads" not in settings:
        return os.cpu_count() or 1
    threads = _int(settings["threads"], "threads")
    if threads < 1:
        raise UsageError(f"--threads must be >= 1, got {threads}")
    return threads


# ---------------------------------------------------------------- output


def fmt_number(value) -> str:
    """17 significant digits: round-trips every double exactly."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return "" if value is None else str(value)


@dataclass
class Table:
    title: str
    columns: tuple
    rows: list
    notes: tuple = ()

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# expert-oracle {self.title}\n")
        buf.write(f"# unit: {UNIT}\n")
        for note in self.notes:
            buf.write(f"# {note}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([fmt_number(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        def plain(v):
            if isinstance(v, np.integer):
                return int(v)
            if isinstance(v, np.floating):
                return float(v)
            return v

        rows = [{c: plain(row[c]) for c in self.columns} for row in self.rows]
        return json.dumps(rows, indent=2) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _emit(text: str, settings: dict) -> None:
    out = settings.get("out")
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def gnuplot_script(data_path: str, columns: tuple, x: str, y: str, err: str | None = None) -> str:
    xi, yi = columns.index(x) + 1, columns.index(y) + 1
    using = f"{xi}:{yi}:{columns.index(err) + 1}" if err else f"{xi}:{yi}"
    style = "yerrorbars" if err else "linespoints"
    return (
        "set datafile separator ','\n"
        "set datafile commentschars '#'\n"
        "set key autotitle columnhead\n"
        f"set xlabel '{x}'\n"
        f"set ylabel '{y} ({UNIT})'\n"
        f"plot '{data_path}' using {using} with {style}\n"
    )


def _maybe_gnuplot(settings: dict, table: Table, x: str, y: str, err: str | None = None) -> None:
    script = settings.get("gnuplot_script")
    if not script:
        return
    out = settings.get("out")
    if not out or out == "-" or settings["format"] != "csv":
        raise UsageError("--gnuplot-script needs --out FILE with csv format")
    Path(script).write_text(gnuplot_script(out, table.columns, x, y, err))


# ---------------------------------------------------------------- simulate / sweep


def build_strategies(settings: dict, horizon: Horizon) -> list:
    names = [s.strip() for s in settings.get("strategy", "truthful").split(",") if s.strip()]
    if not names:
        raise UsageError("--strategy is empty")
    first_allowed = horizon.descending()[0]
    strategies = []
    for name in names:
        if name == "distort":
            params = {
                "T_star": _int(settings.get("t_star", str(first_allowed)), "t_star"),
                "c": _one(settings.get("c", "1.0"), float, "c"),
            }
        elif name == "skip":
            params = {"t_skip": _int(settings.get("t_skip", str(first_allowed)), "t_skip")}
        elif name == "threshold":
            params = {"theta": _one(settings.get("theta", "1.0"), float, "theta")}
        else:
            params = {}
        strategy = make_strategy(name, **params)
        strategy.validate(horizon)
        strategies.append(strategy)
    return strategies


def _simulate_rows(settings: dict, q: float, t_max: int, allowed: str) -> list[dict]:
    q = check_quality(q, scoring=True)
    t_max = check_period(t_max, name="t_max")
    horizon = Horizon.parse(t_max, allowed)
    strategies = build_strategies(settings, horizon)
    n = _int(settings.get("n", "10000"), "n")
    seed = _seed(settings)
    summaries = run_tournament(horizon, q, strategies, n, seed, threads=_threads(settings))
    return [
        {
            "t_max": t_max,
            "q": q,
            "allowed": horizon.describe(),
            "strategy": s.describe(),
            "mean": m.mean,
            "stderr": m.stderr,
            "n": m.n_episodes,
            "seed": seed,
        }
        for s, m in zip(strategies, summaries)
    ]


def cmd_simulate(settings: dict) -> int:
    q = _one(settings.get("q", "0.5"), float, "q")
    t_max = _int(settings.get("t_max", "20"), "t_max")
    rows = _simulate_rows(settings, q, t_max, settings.get("allowed", "all"))
    table = Table("simulate", SIMULATE_COLUMNS, rows, ("mean: mean total reward per episode; stderr: its standard error",))
    _maybe_gnuplot(settings, table, "q", "mean", "stderr")
    _emit(table.render(settings["format"]), settings)
    return EXIT_OK


def cmd_sweep(settings: dict) -> int:
    qs = _number_grid(settings.get("q", "0.5"))
    t_maxes = _number_grid(settings.get("t_max", "20"), int)
    alloweds = [a.strip() for a in settings.get("allowed", "all").split(";") if a.strip()]
    if not (qs and t_maxes and alloweds):
        raise UsageError("sweep grid is empty")
    rows = []
    for t_max, allowed, q in itertools.product(t_maxes, alloweds, qs):
        rows.extend(_simulate_rows(settings, q, t_max, allowed))
    table = Table("sweep", SIMULATE_COLUMNS, rows, ("one row per (t_max, allowed, q, strategy); same paths within a grid point",))
    _maybe_gnuplot(settings, table, "q", "mean", "stderr")
    _emit(table.render(settings["format"]), settings)
    return EXIT_OK


# ---------------------------------------------------------------- verify

_VERIFY_TYPES = {
    "q": float,
    "c": float,
    "t_max": int,
    "t": int,
    "tau": int,
    "t_skip": int,
    "n": int,
    "seed": int,
    "allowed": str,
}


def _verify_overrides(settings: dict) -> dict:
    overrides = {}
    for key, kind in _VERIFY_TYPES.items():
        if key not in settings:
            continue
        text = settings[key]
        overrides[key] = _int(text, key) if kind is int else _one(text, kind, key)
    if "seed" in overrides:
        overrides["seed"] = check_seed(overrides["seed"])
    return overrides


def _format_report(report) -> str:
    lines = [f"suite {report.suite}: " + ("PASS" if report.passed else "FAIL")]
    params = " ".join(f"{k}={v}" for k, v in report.params.items())
    lines.append(f"  params: {params}")
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        stats = f"estimate={c.estimate:.6g} target={c.target:.6g}"
        if not math.isnan(c.stderr):
            stats += f" stderr={c.stderr:.3g} z={c.z:+.2f}"
        if c.detail:
            stats += f" {c.detail}"
        lines.append(f"  [{status}] {c.name}: {stats}")
    return "\n".join(lines) + "\n"


def cmd_verify(suite: str, settings: dict) -> int:
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from all, {', '.join(SUITES)}")
    overrides = _verify_overrides(settings)
    threads = _threads(settings)
    if suite == "all":
        reports = verify_all(overrides, threads=threads)
    else:
        reports = [verify_suite(suite, overrides, threads=threads)]
    if settings["format"] == "json":
        payload = [
            {
                "suite": r.suite,
                "params": r.params,
                "passed": r.passed,
                "checks": [
                    {
                        "name": c.name,
                        "kind": c.kind,
                        "estimate": c.estimate,
                        "target": c.target,
                        "stderr": None if math.isnan(c.stderr) else c.stderr,
                        "z": None if math.isnan(c.z) or math.isinf(c.z) else c.z,
                        "passed": c.passed,
                        "detail": c.detail,
                    }
                    for c in r.checks
                ],
            }
            for r in reports
        ]
        text = json.dumps(payload, indent=2) + "\n"
    else:
        text = "".join(_format_report(r) for r in reports)
    _emit(text, settings)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_RUNTIME


# ---------------------------------------------------------------- table


def _table_xi(settings: dict) -> Table:
    qs = _number_grid(settings.get("q", "0.1:0.9:0.1"))
    Ts = _number_grid(settings.get("t_max", "1,10,100"), int)
    rows = [{"T": T, "q": q, "xi": cumulative_expectation_gamma(T, q).xi} for T in Ts for q in qs]
    return Table("table xi", ("T", "q", "xi"), rows, ("xi: expected total reward of predicting truthfully at every period 1..T",))


def _table_consecutive(settings: dict) -> Table:
    qs = _number_grid(settings.get("q", "0.1:0.9:0.1"))
    Ts = _number_grid(settings.get("t_max", "10"), int)
    ts = _number_grid(settings.get("t", "1:10:1"), int)
    rows = [
        {"T": T, "t": t, "q": q, "expectation": consecutive_expectation(T, t, q)}
        for T in Ts
        for t in ts
        if t <= T
        for q in qs
    ]
    return Table(
        "table consecutive",
        ("T", "t", "q", "expectation"),
        rows,
        ("expectation: expected reward at t of a prediction made right after one at T (t <= T)",),
    )


def _table_speak_gap(settings: dict) -> Table:
    qs = _number_grid(settings.get("q", "0.5"))
    t1s = _number_grid(settings.get("t1", "8"), int)
    t2s = _number_grid(settings.get("t2", "4"), int)
    gaps = _number_grid(settings.get("gap", "0:3:0.5"))
    T_text = settings.get("T", "none").strip().lower()
    Ts = [None] if T_text == "none" else _number_grid(T_text, int)
    rows = []
    for T, t1, t2, q, g in itertools.product(Ts, t1s, t2s, qs, gaps):
        if not (t2 < t1 and (T is None or t1 < T)):
            continue
        regime = FirstPrediction(g, 0.0) if T is None else AfterPrediction(T, g, 0.0)
        rows.append({"T": T, "t1": t1, "t2": t2, "q": q, "gap": g, "speak_gap": speak_gap(SpeakGapInputs(t1, t2, q, regime))})
    return Table(
        "table speak-gap",
        ("T", "t1", "t2", "q", "gap", "speak_gap"),
        rows,
        (
            "speak_gap: expected gain from predicting at t1 rather than waiting for t2",
            "gap: current market mean minus y_t1; T: last prediction (empty before any prediction)",
        ),
    )


TABLES = {"xi": (_table_xi, "T", "xi"), "consecutive": (_table_consecutive, "t", "expectation"), "speak-gap": (_table_speak_gap, "gap", "speak_gap")}


def cmd_table(kind: str, settings: dict) -> int:
    build, x, y = TABLES[kind]
    table = build(settings)
    if not table.rows:
        raise UsageError(f"{kind} table grid is empty")
    _maybe_gnuplot(settings, table, x, y)
    _emit(table.render(settings["format"]), settings)
    return EXIT_OK


# ---------------------------------------------------------------- entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for dest, help_text in SETTINGS.items():
        common.add_argument(_flag(dest), dest=dest, default=None, metavar=dest.upper(), help=help_text)
    common.add_argument("--config", help="flat key = value file; flags override its values")

    parser = _Parser(prog="expert-oracle", description="Simulate and verify an expert predicting against a log-score market.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="mean total reward of one or more strategies")
    sub.add_parser("sweep", parents=[common], help="simulate over a grid of q, t_max and allowed sets")
    p_verify = sub.add_parser("verify", parents=[common], help="check closed forms against simulation")
    p_verify.add_argument("suite", help=f"one of: all, {', '.join(SUITES)}")
    p_table = sub.add_parser("table", parents=[common], help="tabulate a closed form over a grid")
    p_table.add_argument("kind", choices=sorted(TABLES))
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        settings = resolve(args)
        if args.command == "simulate":
            return cmd_simulate(settings)
        if args.command == "sweep":
            return cmd_sweep(settings)
        if args.command == "verify":
            return cmd_verify(args.suite, settings)
        return cmd_table(args.kind, settings)
    except UsageError as exc:
        print(f"expert-oracle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, ConfigurationError, PeriodIndexError) as exc:
        print(f"expert-oracle: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ExpertOracleError, OSError, MemoryError) as exc:
        print(f"expert-oracle: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
