"""Command-line interface: argument handling, artifact layout, and
byte-for-byte reproducibility of the CSV outputs."""

import csv
import json
import os
import subprocess
import sys

import pytest

from thzuav import cli, scenario as scenario_mod

from conftest import make_scenario


@pytest.fixture(scope="module")
def scenario_file(tmp_path_factory):
    scn = make_scenario()
    path = tmp_path_factory.mktemp("scn") / "small.yaml"
    path.write_text(scenario_mod.serialize_scenario(scn))
    return str(path)


def _run(argv):
    return cli.main(argv)


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_unknown_flag_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        _run(["--frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_mode_choices_are_hyphenated(capsys):
    with pytest.raises(SystemExit) as exc:
        _run(["--mode", "pwch_fixed"])  # underscores are not CLI spelling
    assert exc.value.code == 2
    parser = cli.build_parser()
    mode_action = next(a for a in parser._actions if a.dest == "mode")
    assert set(mode_action.choices) == {
        "proposed", "pwch-fixed", "theta-fixed", "traject-fixed"}


def test_invalid_scenario_reports_error_and_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("version: v1\nseed: 3\n")  # missing every section
    rc = _run(["--scenario", str(bad), "--out", str(tmp_path / "out")])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")


def test_missing_scenario_file_exits_1(tmp_path, capsys):
    rc = _run(["--scenario", str(tmp_path / "nope.yaml"),
               "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_run_writes_all_artifacts(scenario_file, tmp_path, capsys):
    out = tmp_path / "run"
    rc = _run(["--scenario", scenario_file, "--out", str(out),
               "--max-iterations", "2", "--seed", "11"])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "min average rate" in stdout

    scn = scenario_mod.load_scenario(scenario_file)
    T, I, U = scn.uav.num_slots, scn.num_bands, scn.num_users

    header, rows = _read_csv(out / "trajectory.csv")
    assert header == ["slot", "x_m", "y_m"]
    assert len(rows) == T
    assert [int(r[0]) for r in rows] == list(range(T))
    for r in rows:
        float(r[1]), float(r[2])

    header, rows = _read_csv(out / "convergence.csv")
    assert header == (["iteration", "min_avg_rate_bps"]
                      + [f"rate_user{u}_bps" for u in range(U)])
    assert [int(r[0]) for r in rows] == list(range(1, len(rows) + 1))
    mins = [float(r[1]) for r in rows]
    for r in rows:
        # the reported minimum really is the minimum of the user columns
        users = [float(v) for v in r[2:]]
        assert abs(min(users) - float(r[1])) <= 1e-9 * max(users)
    assert mins == sorted(mins)

    header, rows = _read_csv(out / "bands.csv")
    assert header == ["band", "center_hz", "user"]
    assert len(rows) == I
    assert all(0 <= int(r[2]) < U for r in rows)

    header, rows = _read_csv(out / "power.csv")
    assert header == ["slot", "band", "power_w"]
    assert len(rows) == T * I
    powers = [float(r[2]) for r in rows]
    assert min(powers) >= 0.0

    summary = json.loads((out / "summary.json").read_text())
    assert summary["mode"] == "proposed"
    assert summary["seed"] == 11
    assert summary["iterations"] == len(mins)
    assert summary["final_min_avg_rate_bps"] == mins[-1]
    assert summary["kernel_backend"] in ("python", "compiled")
    assert summary["wall_time_s"] > 0
    assert len(summary["user_avg_rates_bps"]) == U


def test_csv_artifacts_byte_identical_across_runs(scenario_file, tmp_path,
                                                  capsys):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = _run(["--scenario", scenario_file, "--out", str(out),
                   "--max-iterations", "2", "--seed", "4"])
        assert rc == 0
        outs.append(out)
    capsys.readouterr()
    for fname in ("trajectory.csv", "convergence.csv", "bands.csv",
                  "power.csv"):
        a = (outs[0] / fname).read_bytes()
        b = (outs[1] / fname).read_bytes()
        assert a == b, f"{fname} differs between identical runs"
    sa = json.loads((outs[0] / "summary.json").read_text())
    sb = json.loads((outs[1] / "summary.json").read_text())
    sa.pop("wall_time_s"), sb.pop("wall_time_s")
    assert sa == sb


def test_compare_mode_writes_per_mode_dirs_and_table(scenario_file, tmp_path,
                                                     capsys, monkeypatch):
    monkeypatch.setenv("THZ_UAV_THREADS", "2")
    out = tmp_path / "cmp"
    rc = _run(["--scenario", scenario_file, "--out", str(out), "--compare",
               "--max-iterations", "2", "--seed", "9"])
    assert rc == 0
    capsys.readouterr()
    header, rows = _read_csv(out / "compare.csv")
    assert header == ["mode", "final_min_avg_rate_bps", "iterations",
                      "converged"]
    assert [r[0] for r in rows] == ["proposed", "pwch_fixed", "theta_fixed",
                                    "traject_fixed"]
    for mode, rate, iters, _converged in rows:
        sub = out / mode
        summary = json.loads((sub / "summary.json").read_text())
        assert summary["mode"] == mode
        assert summary["final_min_avg_rate_bps"] == float(rate)
        assert int(iters) <= 2
        for fname in ("trajectory.csv", "convergence.csv", "bands.csv",
                      "power.csv"):
            assert (sub / fname).exists()


def test_console_entry_point_runs(scenario_file, tmp_path):
    out = tmp_path / "sub"
    res = subprocess.run(
        [sys.executable, "-m", "thzuav", "--scenario", scenario_file,
         "--out", str(out), "--max-iterations", "1", "--seed", "0"],
        capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (out / "summary.json").exists()
    assert "min average rate" in res.stdout
