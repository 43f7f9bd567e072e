"""Scenario files, presets, validation, sweeps, CLI surface."""

import json

import numpy as np
import pytest

import chainsim
from chainsim.cli import main as cli_main
from chainsim.errors import (
    ScenarioParseError,
    ScenarioValidationError,
)
from chainsim.runner import build_state, sweep
from chainsim.scenario import (
    PRESETS,
    Scenario,
    apply_sweep_value,
    load_scenario,
    save_scenario,
    scenario_from_dict,
)

from conftest import tiny_scenario


def test_bitcoin_preset_values():
    scn = PRESETS["bitcoin"]
    assert scn.n_nodes == 6000
    assert scn.target_interval_ms == 600_000
    assert scn.block_size_bytes == 534 * 1024 == 546_816
    assert scn.stop_blocks == 10_000
    assert scn.degree == 8


def test_litecoin_and_dogecoin_presets():
    lt = PRESETS["litecoin"]
    assert (lt.n_nodes, lt.target_interval_ms) == (800, 150_000)
    assert lt.block_size_bytes == 6257  # 6.11 KiB
    dg = PRESETS["dogecoin"]
    assert (dg.n_nodes, dg.target_interval_ms) == (600, 60_000)
    assert dg.block_size_bytes == 8192
    for p in PRESETS.values():
        p.validate()


def test_load_scenario_by_preset_name():
    assert load_scenario("bitcoin").n_nodes == 6000


def test_region_weights_must_sum_to_one():
    with pytest.raises(ScenarioValidationError):
        tiny_scenario(region_weights={"Europe": 0.5, "Asia": 0.4})


def test_participation_rate_bounds():
    with pytest.raises(ScenarioValidationError):
        tiny_scenario(relay={"participation_rate": 1.2})
    with pytest.raises(ScenarioValidationError):
        tiny_scenario(relay={"participation_rate": -0.1})


def test_unknown_keys_rejected():
    with pytest.raises(ScenarioValidationError):
        scenario_from_dict({"n_nodes": 5, "blocc_size": 100})


def test_degree_cdf_validation():
    with pytest.raises(ScenarioValidationError):
        tiny_scenario(degree=[[4, 0.5], [8, 0.9]])  # must end at 1.0
    with pytest.raises(ScenarioValidationError):
        tiny_scenario(degree=[[4, 0.5], [8, 0.4]])  # non-decreasing
    scn = tiny_scenario(degree=[[2, 0.25], [4, 1.0]], n_nodes=30)
    st = build_state(scn, 1)
    degs = st.nodes.strat_k[: scn.n_nodes]
    assert set(np.unique(degs)) <= {2, 4}


def test_scenario_round_trip(tmp_path):
    scn = tiny_scenario(n_nodes=44, degree=5, seed=99)
    p = tmp_path / "scn.json"
    save_scenario(scn, p)
    again = load_scenario(p)
    assert again.to_dict() == scn.to_dict()


def test_parse_error_reports_position(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{ not json }")
    with pytest.raises(ScenarioParseError) as ei:
        load_scenario(p)
    assert "broken.json:1" in str(ei.value)


def test_relay_member_count_exact():
    for rate, n in ((0.05, 600), (0.25, 600), (0.5, 601)):
        scn = tiny_scenario(
            n_nodes=n, degree=3,
            relay={"participation_rate": rate},
        )
        st = build_state(scn, 7)
        assert int(st.nodes.relay.sum()) == int(np.floor(rate * n))


def test_relay_membership_random_identity():
    scn = tiny_scenario(n_nodes=100, degree=3,
                        relay={"participation_rate": 0.2})
    a = set(np.flatnonzero(build_state(scn, 1).nodes.relay).tolist())
    b = set(np.flatnonzero(build_state(scn, 2).nodes.relay).tolist())
    assert len(a) == len(b) == 20
    assert a != b


def test_summary_echoes_scenario_and_seed():
    scn = tiny_scenario(stop_blocks=10)
    rep = chainsim.run(scn, seed=5)
    summary = rep.summary_dict()
    assert summary["seed"] == 5
    assert summary["scenario"] == scn.to_dict()
    assert "digest" in summary
    # no relay members -> group medians report only the all-nodes group
    assert set(summary["group_medians_ms"]) == {"all"}


def test_sweep_shapes_and_manifest(tmp_path):
    scn = tiny_scenario(n_nodes=30, degree=3, stop_blocks=8)
    out = tmp_path / "sweepout"
    results = sweep(scn, "participation_rate", [0.0, 0.1], seeds=[1, 2],
                    out_dir=out)
    assert len(results) == 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["runs"]) == 4
    rd = out / "participation_rate=0.1_seed=2"
    assert (rd / "summary.json").exists()
    assert (rd / "blocks.csv").exists()
    assert (rd / "buckets.csv").exists()


def test_sweep_parallel_workers_match_serial(tmp_path):
    scn = tiny_scenario(n_nodes=24, degree=3, stop_blocks=6)
    serial = sweep(scn, "degree", [2, 4], seeds=[1])
    parallel = sweep(scn, "degree", [2, 4], seeds=[1], workers=2)
    ds = [r.digest() for _, _, _, r in serial]
    dp = [r.digest() for _, _, _, r in parallel]
    assert ds == dp


def test_sweep_unknown_parameter():
    scn = tiny_scenario()
    with pytest.raises(ScenarioValidationError):
        sweep(scn, "block_size_bytes", [1, 2])


def test_sweep_empty_values():
    scn = tiny_scenario()
    with pytest.raises(ScenarioValidationError):
        sweep(scn, "degree", [])


def test_apply_sweep_value_strategies():
    scn = tiny_scenario()
    assert apply_sweep_value(scn, "strategy", "adaptive").strategy.kind == "adaptive"
    assert apply_sweep_value(scn, "lambda", 0.5).strategy.lam == 0.5
    assert apply_sweep_value(scn, "degree", 4).degree == 4
    assert apply_sweep_value(
        scn, "participation_rate", 0.3
    ).relay.participation_rate == 0.3


# --- CLI ---------------------------------------------------------------


def test_cli_presets_list(capsys):
    assert cli_main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    for name in ("bitcoin", "litecoin", "dogecoin"):
        assert name in out


def test_cli_run_writes_reports(tmp_path, capsys):
    scn = tiny_scenario(n_nodes=20, degree=3, stop_blocks=6)
    scn_path = tmp_path / "tiny.json"
    save_scenario(scn, scn_path)
    out_dir = tmp_path / "out"
    rc = cli_main(["run", str(scn_path), "--seed", "3", "--out", str(out_dir)])
    assert rc == 0
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["seed"] == 3
    assert summary["n_blocks"] == 6
    blocks = (out_dir / "blocks.csv").read_text().splitlines()
    assert blocks[0].startswith("block_id,height,creator")
    assert len(blocks) == 7  # header + 6 blocks


def test_cli_validation_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"n_nodes": 10, "degree": 99}))
    assert cli_main(["run", str(p)]) == 2
    p2 = tmp_path / "missing.json"
    assert cli_main(["run", str(p2)]) == 2


def test_cli_sweep(tmp_path, capsys):
    scn = tiny_scenario(n_nodes=20, degree=3, stop_blocks=5)
    scn_path = tmp_path / "tiny.json"
    save_scenario(scn, scn_path)
    rc = cli_main(
        ["sweep", str(scn_path), "--param", "degree", "--values", "2,4",
         "--seeds", "1", "--out", str(tmp_path / "sw")]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "degree=2" in out and "degree=4" in out


def test_cli_blocks_override(tmp_path, capsys):
    scn = tiny_scenario(n_nodes=15, degree=3, stop_blocks=500)
    scn_path = tmp_path / "tiny.json"
    save_scenario(scn, scn_path)
    rc = cli_main(["run", str(scn_path), "--blocks", "4"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["n_blocks"] == 4
