"""Command-line interface: pipelines, exit codes, and file round trips."""
from __future__ import annotations

import json

import numpy as np
import pytest

from ccobft.cco import check_constraints, load_config
from ccobft.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_TIMEOUT, EXIT_USAGE, main
from ccobft.model import NodeProfile, load_instance, save_instance

from conftest import build_instance


@pytest.fixture()
def instance_path(tmp_path):
    path = tmp_path / "instance.json"
    code = main([
        "gen-topology", "--kind", "clustered", "--n", "12", "--seed", "1",
        "--clusters", "3", "--out", str(path),
    ])
    assert code == EXIT_OK
    return path


def test_full_pipeline_round_trips(tmp_path, instance_path, capsys):
    config_path = tmp_path / "config.json"
    code = main([
        "optimize", str(instance_path), "--solver", "exact",
        "--out", str(config_path),
    ])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "t_tr" in out
    assert "method: exact" in out
    assert "optimal: True" in out

    code = main(["check", str(instance_path), str(config_path)])
    assert code == EXIT_OK
    assert "configuration ok" in capsys.readouterr().out

    prefix = tmp_path / "results" / "run"
    code = main([
        "simulate", str(instance_path), str(config_path),
        "--requests", "6", "--out-prefix", str(prefix),
    ])
    assert code == EXIT_OK
    assert "committed 6/6" in capsys.readouterr().out
    csv_text = (tmp_path / "results" / "run.csv").read_text()
    assert csv_text.startswith("id,committee,submit_t,commit_t")
    summary = json.loads((tmp_path / "results" / "run.json").read_text())
    assert summary["committed"] == 6
    assert set(summary["latency_ms"]) == {"mean", "median", "p99"}

    # The files the pipeline exchanged are loadable as library objects.
    inst = load_instance(instance_path)
    config = load_config(config_path)
    assert check_constraints(inst, config) == []
    doc = json.loads(config_path.read_text())
    assert {"p", "committees", "optimal", "gap", "latency"} <= set(doc)
    assert all({"leader", "members", "active", "sigma"} <= set(c)
               for c in doc["committees"])


def test_experiment_command_writes_tables(tmp_path, capsys):
    out_dir = tmp_path / "sweep"
    code = main([
        "experiment", "node_sweep", "--sizes", "8", "--seeds", "1",
        "--jobs", "1", "--verify-cost-us", "0", "--out-dir", str(out_dir),
    ])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    written = [line.split(" ", 1)[1] for line in out.splitlines() if line.startswith("wrote ")]
    assert written
    for path in written:
        text = (tmp_path / "sweep" / path.split("/")[-1]).read_text()
        assert text.splitlines()[0]  # header row present
    names = {p.split("/")[-1] for p in written}
    assert "node_sweep_cells.csv" in names
    assert any(name.startswith("node_sweep_cco") for name in names)


def test_too_small_topology_exits_with_usage_error(tmp_path, capsys):
    code = main([
        "gen-topology", "--n", "3", "--out", str(tmp_path / "x.json"),
    ])
    assert code == EXIT_USAGE
    assert "n < 3f+1" in capsys.readouterr().err


def test_unknown_flag_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["optimize", "--no-such-flag"])
    assert excinfo.value.code == EXIT_USAGE


def test_missing_file_exits_with_usage_error(tmp_path, capsys):
    code = main(["optimize", str(tmp_path / "absent.json")])
    assert code == EXIT_USAGE
    assert "missing file" in capsys.readouterr().err


def test_uncappable_leaders_exit_infeasible(tmp_path, capsys):
    n = 4
    d = np.full((n, n), 1000, dtype=np.int64)
    np.fill_diagonal(d, 0)
    inst = build_instance(
        d, [1000] * n, [1000] * n,
        byzantine_cap=0.1,
        profiles=[NodeProfile(0.9, 0.0) for _ in range(n)],
    )
    path = tmp_path / "hostile.json"
    save_instance(inst, path)
    code = main(["optimize", str(path), "--solver", "exact"])
    assert code == EXIT_INFEASIBLE
    assert "infeasible" in capsys.readouterr().err


def test_mismatched_config_exits_infeasible(tmp_path, instance_path, capsys):
    config_path = tmp_path / "config.json"
    assert main([
        "optimize", str(instance_path), "--solver", "exact",
        "--out", str(config_path),
    ]) == EXIT_OK
    other_path = tmp_path / "other.json"
    assert main([
        "gen-topology", "--n", "8", "--seed", "2", "--out", str(other_path),
    ]) == EXIT_OK
    capsys.readouterr()

    code = main(["check", str(other_path), str(config_path)])
    assert code == EXIT_INFEASIBLE
    assert capsys.readouterr().out.strip()

    code = main([
        "simulate", str(other_path), str(config_path),
        "--requests", "2", "--out-prefix", str(tmp_path / "bad"),
    ])
    assert code == EXIT_INFEASIBLE


def test_exhausted_budget_exits_timeout(tmp_path, instance_path, capsys):
    code = main([
        "optimize", str(instance_path), "--solver", "exact",
        "--time-budget", "0", "--require-optimal",
    ])
    assert code == EXIT_TIMEOUT
    assert "timeout" in capsys.readouterr().err


def test_reruns_are_byte_identical(tmp_path, instance_path):
    twin_path = tmp_path / "twin.json"
    assert main([
        "gen-topology", "--kind", "clustered", "--n", "12", "--seed", "1",
        "--clusters", "3", "--out", str(twin_path),
    ]) == EXIT_OK
    assert twin_path.read_bytes() == instance_path.read_bytes()

    config_path = tmp_path / "config.json"
    assert main([
        "optimize", str(instance_path), "--solver", "exact",
        "--out", str(config_path),
    ]) == EXIT_OK
    outputs = []
    for tag in ("a", "b"):
        prefix = tmp_path / tag
        assert main([
            "simulate", str(instance_path), str(config_path),
            "--requests", "4", "--seed", "7", "--out-prefix", str(prefix),
        ]) == EXIT_OK
        outputs.append(prefix.with_suffix(".csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_simulate_accepts_fault_flags(tmp_path, instance_path, capsys):
    config_path = tmp_path / "config.json"
    assert main([
        "optimize", str(instance_path), "--solver", "exact",
        "--out", str(config_path),
    ]) == EXIT_OK
    trace_path = tmp_path / "trace.jsonl"
    code = main([
        "simulate", str(instance_path), str(config_path),
        "--requests", "6", "--tee-fail", "0:20", "--tee-recover", "0:80",
        "--trace", str(trace_path),
        "--out-prefix", str(tmp_path / "faulty"),
    ])
    assert code == EXIT_OK
    assert trace_path.exists()
    summary = json.loads((tmp_path / "faulty.json").read_text())
    assert summary["committed"] == 6


def test_bad_fault_pair_exits_with_usage_error(tmp_path, instance_path, capsys):
    config_path = tmp_path / "config.json"
    assert main([
        "optimize", str(instance_path), "--solver", "exact",
        "--out", str(config_path),
    ]) == EXIT_OK
    code = main([
        "simulate", str(instance_path), str(config_path),
        "--crash", "nonsense",
        "--out-prefix", str(tmp_path / "x"),
    ])
    assert code == EXIT_USAGE
    assert "NODE:VALUE" in capsys.readouterr().err
