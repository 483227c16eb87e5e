import json
import time

import pytest

from manetsim import ScenarioConfig
from manetsim.cli import (
    FIGURE_NAMES,
    emit_series_csv,
    emit_summary_csv,
    figure_export,
    format_config,
    main,
    parse_config,
    resolve_config,
)
from manetsim.engine import ConfigError, run, sweep


def test_empty_config_gives_table_defaults(tmp_path):
    path = tmp_path / "empty.conf"
    path.write_text("# nothing here\n")
    cfg = parse_config(path)
    assert cfg == ScenarioConfig()
    assert cfg.node_count == 50
    assert cfg.area_width == cfg.area_height == 500.0
    assert cfg.sim_time == 500
    assert cfg.algorithm == "paiwca"


def test_flag_overrides_file_overrides_default(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text("seed = 3\nalgorithm = mwis\nnodes = 30\n")
    cfg = parse_config(path, overrides={"seed": "7", "algorithm": "wca"})
    assert cfg.seed == 7
    assert cfg.algorithm == "wca"
    assert cfg.node_count == 30


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text("frobnicate = 1\n")
    with pytest.raises(ConfigError, match="frobnicate"):
        parse_config(path)


def test_out_of_range_nodes_names_key_and_bound():
    with pytest.raises(ConfigError, match=r"node_count.*\[10, 300\]"):
        resolve_config(overrides={"nodes": "400"})
    cfg = resolve_config(overrides={"nodes": "400", "unsafe": "true"})
    assert cfg.node_count == 400


def test_missing_file_is_config_error():
    with pytest.raises(ConfigError, match="not found"):
        parse_config("/nonexistent/path.conf")


def test_config_round_trip(tmp_path):
    cfg = resolve_config(
        overrides={
            "nodes": "25",
            "pause": "inf",
            "algorithm": "lowest_id",
            "weights.normalize_terms": "true",
            "traffic.sources": "all",
            "traffic.gen_until": "none",
            "energy.drain_ch": "0.25",
            "arrival_schedule": "5:25,9:26",
            "max_cluster_size": "none",
        }
    )
    text = format_config(cfg)
    path = tmp_path / "resolved.conf"
    path.write_text(text)
    assert parse_config(path) == cfg


def test_emit_series_row_count_and_idempotence(tmp_path):
    cfg = ScenarioConfig(node_count=15, sim_time=30, seed=4)
    result = run(cfg)
    p1 = emit_series_csv(result, tmp_path / "a.csv")
    assert len(p1.read_text().splitlines()) == 31  # header + one row per tick
    p2 = emit_series_csv(run(cfg), tmp_path / "b.csv")
    assert p1.read_bytes() == p2.read_bytes()


def test_emit_empty_series_header_only(tmp_path):
    result = run(ScenarioConfig(node_count=12, sim_time=0))
    p = emit_series_csv(result, tmp_path / "empty.csv")
    lines = p.read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("tick,cluster_count,connectivity")


def test_emit_summary_csv(tmp_path):
    from manetsim import FlowConfig

    base = ScenarioConfig(node_count=12, sim_time=10, traffic=FlowConfig(source_count=0))
    rows = sweep(base, "nodes", [10, 12], [0, 1])
    p = emit_summary_csv(rows, tmp_path / "s.csv")
    lines = p.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("algorithm,axis,value,seeds,cluster_count_mean")


def test_cli_run_command(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(
        ["run", "--nodes", "15", "--sim-time", "20", "--seed", "2",
         "--out", str(out)]
    )
    assert code == 0
    assert out.exists()
    manifest = json.loads(out.with_suffix(".manifest.json").read_text())
    assert manifest["seed"] == 2
    assert manifest["outputs"] == [str(out)]
    assert "nodes = 15" in manifest["config"]
    assert capsys.readouterr().out.startswith("algorithm=paiwca seed=2")


def test_cli_run_determinism_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["run", "--nodes", "15", "--sim-time", "25", "--seed", "11", "--pause", "0"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_config_error_exit_code(tmp_path, capsys):
    assert main(["run", "--nodes", "5000"]) == 1
    assert "node_count" in capsys.readouterr().err


def test_cli_unknown_set_key(capsys):
    assert main(["run", "--set", "bogus=1"]) == 1
    assert "bogus" in capsys.readouterr().err


def test_cli_sweep_command(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(
        ["sweep", "--axis", "nodes", "--values", "10,14", "--seeds", "0,1",
         "--sim-time", "10", "--set", "traffic.sources=0", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3


def test_cli_preset_arrival(tmp_path):
    out = tmp_path / "arr.csv"
    assert main(["run", "--preset", "arrival", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 101  # header + 100 ticks


def test_figure_export_schema(tmp_path):
    path = figure_export(
        "connectivity", tmp_path, seeds=[0],
        overrides={"sim_time": "5", "nodes": "12"},
    )
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    assert header[0] == "range"
    assert "paiwca_mean" in header and "paiwca_std" in header
    assert "wca_mean" in header and "wca_std" in header
    assert len(lines) == 10  # header + 9 range values
    assert path.with_suffix(".manifest.json").exists()


def test_figure_pdr_grid(tmp_path):
    path = figure_export(
        "pdr", tmp_path, seeds=[0],
        overrides={"sim_time": "5", "nodes": "12"},
    )
    lines = path.read_text().splitlines()
    xs = [float(line.split(",")[0]) for line in lines[1:]]
    assert xs == [0.0, 50.0, 100.0, 200.0, 500.0]


def test_figure_unknown_name(tmp_path):
    with pytest.raises(ConfigError, match="unknown figure"):
        figure_export("bogus", tmp_path)
    assert "clusters" in FIGURE_NAMES


def test_smoke_50_nodes_100_ticks_under_10s(tmp_path):
    start = time.time()
    out = tmp_path / "smoke.csv"
    code = main(
        ["run", "--nodes", "50", "--sim-time", "100", "--pause", "0",
         "--seed", "0", "--out", str(out)]
    )
    elapsed = time.time() - start
    assert code == 0
    assert len(out.read_text().splitlines()) == 101
    assert elapsed < 10.0
