import json

import pytest

from defragsim.cli import main
from defragsim.defrag import SolverInstance, SolverJob, save_instance

CONFIG_YAML = """\
topology:
  racks: 4
  hosts_per_rack: 2
  gpus_per_host: 8
  uplinks_per_tor: 2
  nic_bandwidth_gbps: 400
  uplink_bandwidth_gbps: 400
trace:
  loads: [0.9]
  num_jobs: 12
  base_seed: 0
  num_seeds: 1
  templates: [gpt3-13b, gpt3-7b, gpt-oss-120b, gpt-oss-20b]
  pp_choices: [1]
  size_choices: [5, 6, 7, 8]
algorithms: [defrag-perfect, ecmp]
controller:
  solver_time_limit: 5.0
sweep:
  load: [0.9]
  threshold: [2, 3]
output_dir: results
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(CONFIG_YAML)
    return path


def test_run_writes_outputs(config_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(config_file), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["runs"]) == 2  # one per algorithm
    algorithms = {r["algorithm"] for r in summary["runs"]}
    assert algorithms == {"defrag-perfect", "ecmp"}
    for run in summary["runs"]:
        tag = f"{run['algorithm']}_load0.9_seed0"
        assert (out / f"jobs_{tag}.csv").exists()
        assert (out / f"series_{tag}.csv").exists()
        assert (out / f"solver_{tag}.csv").exists()
    assert "wrote 2 run(s)" in capsys.readouterr().out


def test_run_algorithm_subset(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(config_file), "--algorithms", "ecmp",
                 "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert [r["algorithm"] for r in summary["runs"]] == ["ecmp"]


def test_run_seed_override(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(config_file), "--algorithms", "ecmp",
                 "--seeds", "2", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert sorted(r["seed"] for r in summary["runs"]) == [0, 1]


def test_run_unknown_algorithm_exits_2(config_file, capsys):
    assert main(["run", str(config_file), "--algorithms", "magic"]) == 2
    assert "unknown algorithm" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.yaml")]) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_config_key_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("trace:\n  jobs: 10\n")
    assert main(["validate", str(path)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_validate_prints_resolved_config(config_file, capsys):
    assert main(["validate", str(config_file)]) == 0
    out = capsys.readouterr().out
    assert "config OK" in out
    resolved = json.loads(out[:out.rindex("config OK")])
    assert resolved["trace"]["num_jobs"] == 12


def test_sweep_single_cell_matches_run(config_file, tmp_path):
    run_out = tmp_path / "run"
    sweep_out = tmp_path / "sweep"
    assert main(["run", str(config_file), "--algorithms", "ecmp",
                 "--out", str(run_out)]) == 0
    assert main(["sweep", str(config_file), "--axis", "load",
                 "--out", str(sweep_out)]) == 0
    grid = json.loads((sweep_out / "sweep_load.json").read_text())
    assert len(grid["cells"]) == 1
    cell = grid["cells"][0]
    assert cell["value"] == 0.9
    direct = json.loads((run_out / "summary.json").read_text())["runs"][0]
    swept = next(r for r in cell["runs"] if r["algorithm"] == "ecmp")
    assert swept["event_log_hash"] == direct["event_log_hash"]
    assert swept["mean_slowdown"] == direct["mean_slowdown"]


def test_sweep_threshold_axis(config_file, tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", str(config_file), "--axis", "threshold",
                 "--out", str(out)]) == 0
    grid = json.loads((out / "sweep_threshold.json").read_text())
    assert [c["value"] for c in grid["cells"]] == [2, 3]


def test_oracle_agrees_with_solver(tmp_path, capsys):
    instance = SolverInstance(
        num_racks=3, capacities=(8, 8, 8), threshold=2.0,
        jobs=(SolverJob(key=0, units=4), SolverJob(key=1, units=4),
              SolverJob(key=2, units=4)),
        initial=((2, 1, 1), (1, 2, 1), (1, 1, 2)))
    path = tmp_path / "instance.json"
    save_instance(instance, path)
    assert main(["oracle", str(path)]) == 0
    out = capsys.readouterr().out
    assert "oracle minimum moves" in out
    assert "MISMATCH" not in out
