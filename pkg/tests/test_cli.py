import csv
import io
import json
import math
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expert_oracle.cli import SIMULATE_COLUMNS, fmt_number, main


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_simulate_csv(capsys):
    code, out, _ = run(["simulate", "--q", "0.5", "--t-max", "20", "--strategy", "truthful", "--n", "20000", "--seed", "7"], capsys)
    assert code == 0
    assert "# unit: nats" in out
    header = [l for l in out.splitlines() if not l.startswith("#")][0]
    assert header == ",".join(SIMULATE_COLUMNS)
    (row,) = data_rows(out)
    assert row["strategy"] == "truthful" and row["seed"] == "7" and row["n"] == "20000"
    assert float(row["mean"]) > 0 and float(row["stderr"]) > 0


def test_silent_row_is_exact_zero(capsys):
    _, out, _ = run(["simulate", "--strategy", "silent", "--n", "1000"], capsys)
    (row,) = data_rows(out)
    assert (row["mean"], row["stderr"]) == ("0", "0")


def test_numbers_round_trip():
    for x in (0.1, 1 / 3, math.pi * 1e-300, -2.5e17):
        assert float(fmt_number(x)) == x
    assert fmt_number(3) == "3"


def test_byte_identical_across_runs_and_threads(tmp_path):
    outs = []
    for threads in ("1", "4", "1"):
        path = tmp_path / f"out{len(outs)}.csv"
        assert main(["simulate", "--strategy", "truthful,skip", "--n", "40000", "--seed", "3", "--threads", threads, "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_json_mirrors_csv(capsys):
    args = ["simulate", "--strategy", "truthful,distort", "--t-max", "10", "--allowed", "10 5", "--n", "5000"]
    _, out_csv, _ = run(args, capsys)
    _, out_json, _ = run(args + ["--format", "json"], capsys)
    rows = json.loads(out_json)
    assert [list(r) for r in rows] == [list(SIMULATE_COLUMNS)] * 2
    for r, c in zip(rows, data_rows(out_csv)):
        assert r["mean"] == float(c["mean"]) and r["strategy"] == c["strategy"]
    assert rows[1]["strategy"] == "distort(T_star=10,c=1.0)"


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("q = 0.3\nt-max = 8\nallowed = every-2\nstrategy = truthful\nn = 3000\nseed = 11\n")
    _, out, _ = run(["simulate", "--config", str(cfg)], capsys)
    (row,) = data_rows(out)
    assert (row["q"], row["t_max"], row["allowed"], row["seed"]) == ("0.29999999999999999", "8", "8 6 4 2", "11")
    _, out, _ = run(["simulate", "--config", str(cfg), "--seed", "12"], capsys)
    assert data_rows(out)[0]["seed"] == "12"


def test_seed_environment_fallback(monkeypatch, capsys):
    monkeypatch.setenv("EXPERT_ORACLE_SEED", "42")
    _, out, _ = run(["simulate", "--n", "1000"], capsys)
    assert data_rows(out)[0]["seed"] == "42"
    _, out, _ = run(["simulate", "--n", "1000", "--seed", "5"], capsys)
    assert data_rows(out)[0]["seed"] == "5"


def test_sweep(capsys):
    code, out, _ = run(
        ["sweep", "--q", "0.3,0.6", "--t-max", "6,8", "--allowed", "all;every-2", "--strategy", "truthful,silent", "--n", "1000"],
        capsys,
    )
    assert code == 0
    assert len(data_rows(out)) == 2 * 2 * 2 * 2


def test_table_xi(capsys):
    code, out, _ = run(["table", "xi", "--q", "0.1:0.9:0.1", "--t-max", "1,10,100"], capsys)
    assert code == 0
    rows = data_rows(out)
    assert len(rows) == 27
    for r in rows:
        if r["T"] == "1":
            assert float(r["xi"]) == pytest.approx(0.5 * math.log(1 / (1 - float(r["q"]))), rel=1e-14)
    _, out, _ = run(["table", "xi", "--q", "0", "--t-max", "1,10,100"], capsys)
    assert {r["xi"] for r in data_rows(out)} == {"0"}


def test_table_consecutive_and_speak_gap(capsys):
    _, out, _ = run(["table", "consecutive", "--q", "0.5", "--t-max", "10", "--t", "5"], capsys)
    (row,) = data_rows(out)
    assert float(row["expectation"]) == pytest.approx(-0.5 * math.log(0.75), rel=1e-15)
    _, out, _ = run(["table", "speak-gap", "--q", "0.5", "--T", "12", "--t1", "8", "--t2", "3", "--gap", "0:2:1"], capsys)
    rows = data_rows(out)
    assert len(rows) == 3 and all(float(r["speak_gap"]) > 0 for r in rows)
    _, out, _ = run(["table", "speak-gap"], capsys)
    assert data_rows(out)[0]["T"] == ""


def test_gnuplot_script(tmp_path):
    data, script = tmp_path / "xi.csv", tmp_path / "xi.gp"
    assert main(["table", "xi", "--out", str(data), "--gnuplot-script", str(script)]) == 0
    text = script.read_text()
    assert str(data) in text and "set datafile separator ','" in text
    assert main(["table", "xi", "--gnuplot-script", str(script)]) == 2


def test_verify(capsys):
    code, out, _ = run(["verify", "gain-loss", "--c", "0", "--n", "2000"], capsys)
    assert code == 0 and "[PASS]" in out and "estimate=0" in out
    code, out, _ = run(["verify", "theorem-average", "--q", "0.5", "--t-max", "20", "--n", "100000"], capsys)
    assert code == 0 and "FAIL" not in out
    code, out, _ = run(["verify", "all", "--n", "100000", "--format", "json"], capsys)
    assert code == 0 and len(json.loads(out)) == 8


def test_verify_failure_exits_nonzero(capsys):
    # with q = 0 the expert knows nothing the market does not, so skipping costs nothing
    code, out, _ = run(["verify", "predict-always", "--q", "0", "--n", "2000"], capsys)
    assert code == 1 and "[FAIL]" in out


@pytest.mark.parametrize(
    "args",
    [
        [],
        ["bogus"],
        ["simulate", "--q", "abc"],
        ["simulate", "--q", "1.0"],
        ["simulate", "--q", "-0.2"],
        ["simulate", "--t-max", "0"],
        ["simulate", "--t-max", "2.5"],
        ["simulate", "--n", "1"],
        ["simulate", "--seed", "-3"],
        ["simulate", "--threads", "0"],
        ["simulate", "--strategy", "psychic"],
        ["simulate", "--strategy", ""],
        ["simulate", "--strategy", "skip", "--t-skip", "3", "--allowed", "5 4"],
        ["simulate", "--allowed", "every-zero"],
        ["simulate", "--allowed", "30", "--t-max", "20"],
        ["simulate", "--format", "xml"],
        ["simulate", "--config", "/nonexistent/file"],
        ["simulate", "--theta", "-1", "--strategy", "threshold"],
        ["verify", "nope"],
        ["verify", "consecutive", "--tau", "2"],
        ["table", "xi", "--q", ""],
        ["table", "xi", "--q", "0.9:0.1:0.1"],
        ["table", "consecutive", "--t-max", "5", "--t", "6,7"],
        ["table", "speak-gap", "--t1", "3", "--t2", "5"],
        ["table", "pie"],
        ["sweep", "--allowed", ";"],
    ],
)
def test_usage_errors_exit_2(args, capsys):
    assert main(args) == 2


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["simulate", "--config", str(cfg)]) == 2
    cfg.write_text("no equals sign here\n")
    assert main(["simulate", "--config", str(cfg)]) == 2


def test_unwritable_output_is_runtime_failure(tmp_path, capsys):
    assert main(["table", "xi", "--out", str(tmp_path / "missing" / "x.csv")]) == 1


@given(st.text(max_size=12))
@settings(max_examples=60, deadline=None)
def test_malformed_quality_never_crashes(text):
    code = main(["table", "xi", "--q", text, "--t-max", "3"])
    assert code in (0, 2)


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "expert_oracle", "table", "consecutive", "--q", "0.5", "--t-max", "4"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert len(data_rows(proc.stdout)) == 4
