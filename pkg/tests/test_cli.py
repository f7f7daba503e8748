import csv
import json
import math
import subprocess
import sys

import pytest

from sarsim.cli import main, read_runs_csv, summarize
from sarsim.planner import FlightPlan
from sarsim.world import Scenario

PERFECT = """
name = "perfect"
seeds = [3]

[scenario]
kind = "clustered"

[detector]
p_max = 1.0
p_min = 1.0
position_noise_per_meter_altitude = 0.0
fp_rate_cruise = 0.0

[[strategies]]
name = "n_c=1"
batch_size = 1
"""

SMALL_SWEEP = """
name = "small"
seeds = { start = 0, count = 2 }

[scenario]
kind = "sparse"
area = { x_min = 0.0, y_min = 0.0, x_max = 120.0, y_max = 120.0 }
params = { count = 3, spacing = 30.0 }

[[strategies]]
name = "n_c=1"
batch_size = 1

[[strategies]]
name = "n_c=5"
batch_size = 5
trigger_distance = 3.0

[[strategies]]
name = "n_c=inf"
batch_size = inf
"""


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv("SARSIM_SEED", raising=False)


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


# scenario ---------------------------------------------------------------------

def test_scenario_clustered(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "scenario", "--kind", "clustered", "--seed", 42, "-o", tmp_path / "s.json")
    assert code == 0
    assert out.startswith("targets=8 bbox=(")
    assert len(Scenario.load(tmp_path / "s.json").targets) == 8


def test_scenario_empty(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "scenario", "--kind", "sparse", "--count", 0, "-o", tmp_path / "s.json")
    assert code == 0 and out == "targets=0 bbox=none\n"
    assert Scenario.load(tmp_path / "s.json").targets == ()


def test_scenario_without_output_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["scenario", "--kind", "sparse"])
    assert exc.value.code == 2
    assert "--out" in capsys.readouterr().err


def test_scenario_infeasible(tmp_path, capsys):
    code, _, err = run_cli(
        capsys, "scenario", "--kind", "sparse", "--count", 50, "--spacing", 100, "-o", tmp_path / "s.json"
    )
    assert code == 2 and "spacing" in err


def test_scenario_seed_from_environment(tmp_path, capsys, monkeypatch):
    run_cli(capsys, "scenario", "--seed", 17, "-o", tmp_path / "a.json")
    monkeypatch.setenv("SARSIM_SEED", "17")
    run_cli(capsys, "scenario", "-o", tmp_path / "b.json")
    assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()


def test_bad_environment_seed(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SARSIM_SEED", "abc")
    code, _, err = run_cli(capsys, "scenario", "-o", tmp_path / "s.json")
    assert code == 2 and "SARSIM_SEED" in err


# plan -------------------------------------------------------------------------

def test_plan_from_scenario(tmp_path, capsys):
    run_cli(capsys, "scenario", "--seed", 1, "-o", tmp_path / "s.json")
    code, out, _ = run_cli(capsys, "plan", "--scenario", tmp_path / "s.json", "--altitude", 25, "-o", tmp_path / "p.json")
    assert code == 0 and out.startswith("waypoints=")
    plan = FlightPlan.load(tmp_path / "p.json")
    assert len(plan) >= 2 and plan.generated_for_altitude == 25.0


# run --------------------------------------------------------------------------

def test_run_zero_targets(tmp_path, capsys):
    run_cli(capsys, "scenario", "--kind", "sparse", "--count", 0, "-o", tmp_path / "s.json")
    cfg = write(tmp_path, "q.exp", "[detector]\nfp_rate_cruise = 0.0\n")
    code, out, _ = run_cli(capsys, "run", "--config", cfg, "--scenario", tmp_path / "s.json")
    assert code == 0
    assert out.endswith("R=0 fp=0 recall=1.000\n")


def test_run_perfect_detector(tmp_path, capsys):
    cfg = write(tmp_path, "perfect.exp", PERFECT)
    code, out, _ = run_cli(capsys, "run", "--config", cfg)
    assert code == 0
    assert "R=8 fp=0 recall=1.000" in out


def test_run_twice_is_byte_identical(tmp_path, capsys):
    a = run_cli(capsys, "run", "--config", "clustered", "--seed", 4, "--strategy", "n_c=5", "--out", tmp_path / "a")
    b = run_cli(capsys, "run", "--config", "clustered", "--seed", 4, "--strategy", "n_c=5", "--out", tmp_path / "b")
    assert a == b and a[0] == 0
    for name in ("result.json", "trace.csv", "scenario.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    result = json.loads((tmp_path / "a" / "result.json").read_text())
    assert result["seed"] == 4 and result["strategy"] == "n_c=5"


def test_run_flags_override_config(tmp_path, capsys):
    run_cli(capsys, "run", "--config", "sparse", "--batch-size", "inf", "--trigger-distance", "inf", "--dt", 0.2,
            "--out", tmp_path)
    result = json.loads((tmp_path / "result.json").read_text())
    assert result["strategy"] == "batch=inf,dist=inf"
    times = [float(r["t"]) for r in csv.DictReader((tmp_path / "trace.csv").open())]
    assert times[1] == pytest.approx(0.2 * 10)


def test_run_timeout_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "short.exp", "max_sim_time = 10\n[scenario]\nkind = 'clustered'\n")
    code, out, err = run_cli(capsys, "run", "--config", cfg)
    assert code == 3
    assert out.startswith("time=10.00") and "timed out" in err


def test_run_malformed_config(tmp_path, capsys):
    cfg = write(tmp_path, "bad.exp", "[speeds]\nscan_speed = -3\n")
    code, _, err = run_cli(capsys, "run", "--config", cfg)
    assert code == 2 and "speeds" in err


def test_run_unknown_strategy(capsys):
    code, _, err = run_cli(capsys, "run", "--config", "clustered", "--strategy", "nope")
    assert code == 2 and "n_c=5" in err


# sweep ------------------------------------------------------------------------

def test_sweep_writes_recomputable_summary(tmp_path, capsys):
    cfg = write(tmp_path, "small.exp", SMALL_SWEEP)
    code, out, _ = run_cli(capsys, "sweep", "--config", cfg, "--out", tmp_path / "o")
    assert code == 0
    runs = read_runs_csv(tmp_path / "o" / "runs.csv")
    assert [(r["strategy"], r["seed"]) for r in runs] == [
        (s, str(k)) for s in ("n_c=1", "n_c=5", "n_c=inf") for k in (0, 1)
    ]
    with open(tmp_path / "o" / "summary.csv") as fh:
        summary = list(csv.DictReader(fh))
    assert [s["strategy"] for s in summary] == ["n_c=1", "n_c=5", "n_c=inf"]
    again = summarize(runs)
    for written, recomputed in zip(summary, again):
        for key, value in recomputed.items():
            if isinstance(value, float):
                assert float(written[key]) == pytest.approx(value, abs=1e-3)
            else:
                assert written[key] == str(value)
    assert out == (tmp_path / "o" / "summary.txt").read_text()
    assert len((tmp_path / "o" / "results.jsonl").read_text().splitlines()) == 6


def test_sweep_one_seed_three_rows(tmp_path, capsys):
    cfg = write(tmp_path, "small.exp", SMALL_SWEEP)
    run_cli(capsys, "sweep", "--config", cfg, "--seeds", 1, "--seed", 5, "--out", tmp_path)
    summary = list(csv.DictReader((tmp_path / "summary.csv").open()))
    assert len(summary) == 3 and all(s["runs"] == "1" for s in summary)
    assert {r["seed"] for r in read_runs_csv(tmp_path / "runs.csv")} == {"5"}


def test_sweep_workers_do_not_change_output(tmp_path, capsys):
    cfg = write(tmp_path, "small.exp", SMALL_SWEEP)
    run_cli(capsys, "sweep", "--config", cfg, "--out", tmp_path / "a")
    run_cli(capsys, "sweep", "--config", cfg, "--workers", 2, "--out", tmp_path / "b")
    for name in ("runs.csv", "summary.csv", "results.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_requires_config(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep"])
    assert exc.value.code == 2


def test_summary_counts_timeouts():
    rows = [
        {"strategy": "a", "mission_time": "10", "completed": "True", "false_positives_confirmed": "0",
         "false_positives_rejected": "1", "recall": "1.0"},
        {"strategy": "a", "mission_time": "30", "completed": "False", "false_positives_confirmed": "2",
         "false_positives_rejected": "3", "recall": "0.5"},
    ]
    (s,) = summarize(rows)
    assert (s["runs"], s["median_time"], s["min_time"], s["max_time"], s["timeouts"]) == (2, 20.0, 10.0, 30.0, 1)
    assert math.isclose(s["mean_recall"], 0.75)


# plot -------------------------------------------------------------------------

def test_plot_is_deterministic(tmp_path, capsys):
    run_cli(capsys, "run", "--config", "clustered", "--seed", 1, "--out", tmp_path)
    args = ("plot", tmp_path / "trace.csv", tmp_path / "scenario.json", "--title", "n_c=1")
    assert run_cli(capsys, *args, "-o", tmp_path / "a.svg")[0] == 0
    assert run_cli(capsys, *args, "-o", tmp_path / "b.svg")[0] == 0
    svg = (tmp_path / "a.svg").read_text()
    assert svg == (tmp_path / "b.svg").read_text()
    assert svg.startswith("<svg") and 'class="check"' in svg and svg.count('class="target"') == 8


def test_plot_zero_targets_is_one_colour(tmp_path, capsys):
    run_cli(capsys, "scenario", "--kind", "sparse", "--count", 0, "-o", tmp_path / "s.json")
    cfg = write(tmp_path, "q.exp", "[detector]\nfp_rate_cruise = 0.0\n")
    run_cli(capsys, "run", "--config", cfg, "--scenario", tmp_path / "s.json", "--out", tmp_path / "r")
    run_cli(capsys, "plot", tmp_path / "r" / "trace.csv", tmp_path / "s.json", "-o", tmp_path / "p.svg")
    svg = (tmp_path / "p.svg").read_text()
    assert svg.count("<polyline") == 1 and 'class="scan"' in svg and 'class="check"' not in svg


def test_plot_mismatch_warns_but_plots(tmp_path, capsys):
    run_cli(capsys, "run", "--config", "sparse", "--out", tmp_path)
    run_cli(capsys, "scenario", "--kind", "sparse", "--area", "0,0,50,50", "--count", 1, "-o", tmp_path / "small.json")
    code, _, err = run_cli(capsys, "plot", tmp_path / "trace.csv", tmp_path / "small.json", "-o", tmp_path / "p.svg")
    assert code == 0 and "outside the scenario area" in err
    assert (tmp_path / "p.svg").exists()


def test_plot_missing_file(tmp_path, capsys):
    code, _, err = run_cli(capsys, "plot", tmp_path / "nope.csv", tmp_path / "nope.json", "-o", tmp_path / "p.svg")
    assert code == 2 and "nope.csv" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "sarsim", "scenario", "--kind", "sparse", "--count", "0", "-o", str(tmp_path / "s.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout == "targets=0 bbox=none\n"
    proc = subprocess.run([sys.executable, "-m", "sarsim", "scenario"], capture_output=True, text=True)
    assert proc.returncode == 2
