"""Experiment orchestration tests: config parsing, the predict-then-place
pipeline, sweeps, and CSV emission."""

import numpy as np
import pytest

from coopcache import harness
from coopcache.harness import (ConfigError, ExperimentConfig, load_config,
                               parse_config_text)

FAST = dict(
    num_contents=4, num_bs=2, cache_slots=2, num_users=6, bandwidth_hz=1e5,
    history_steps=20, mobility_window=6, predictor_epochs=15,
    episodes=1, steps_per_episode=200,
)


def fast_config(**overrides):
    kw = dict(FAST)
    kw.update(overrides)
    return ExperimentConfig(**kw)


# ------------------------------------------------------------------ config


def test_parse_config_text_types():
    values = parse_config_text(
        "num_users = 12        # trailing comment\n"
        "\n"
        "# full-line comment\n"
        "tx_power_dbm = 17.5\n"
        "predict = false\n"
        "fronthaul_max_bps = inf\n"
        "methods = laql, random\n"
        "seeds = 0, 1, 2\n")
    assert values["num_users"] == 12
    assert values["tx_power_dbm"] == 17.5
    assert values["predict"] is False
    assert values["fronthaul_max_bps"] == float("inf")
    assert values["methods"] == ("laql", "random")
    assert values["seeds"] == (0, 1, 2)


def test_parse_config_rejects_bare_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("num_users = 3\nnot a key value line\n")


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("num_users = 3\nnum_uesrs = 4\n")
    with pytest.raises(ConfigError, match="num_uesrs"):
        load_config(path)


def test_load_config_scalar_seed_becomes_tuple(tmp_path):
    path = tmp_path / "one.cfg"
    path.write_text("seeds = 5\nmethods = random\n")
    config = load_config(path)
    assert config.seeds == (5,)
    assert config.methods == ("random",)


def test_config_rejects_unknown_method():
    with pytest.raises(ConfigError):
        ExperimentConfig(methods=("laql", "greedy"))


def test_config_power_conversions():
    config = ExperimentConfig()
    assert config.tx_power_w == pytest.approx(0.1, rel=1e-12)
    assert config.noise_w == pytest.approx(10**-12.5, rel=1e-12)


def test_bs_positions_even_midline():
    config = fast_config(num_bs=3, region_side_m=4000.0)
    assert harness.bs_positions(config) == [
        (1000.0, 2000.0), (2000.0, 2000.0), (3000.0, 2000.0)]


# ---------------------------------------------------------------- pipeline


def test_pipeline_single_record():
    config = fast_config(methods=("random",), seeds=(0,), predict=False)
    records = harness.run_pipeline(config)
    assert len(records) == 1
    assert records[0].method == "random"


def test_pipeline_record_count_and_mos_bounds():
    config = fast_config(methods=("laql", "non_cooperative", "random"),
                         seeds=(0, 1), slots=2, predict=False)
    records = harness.run_pipeline(config)
    assert len(records) == 3 * 2 * 2
    for r in records:
        assert config.num_users * 1.0 <= r.sum_mos <= config.num_users * 5.0


def test_pipeline_with_prediction_is_deterministic():
    config = fast_config(methods=("laql", "random"), seeds=(3,))
    a = harness.run_pipeline(config)
    b = harness.run_pipeline(config)
    assert [(r.method, r.sum_mos, r.iterations) for r in a] == \
           [(r.method, r.sum_mos, r.iterations) for r in b]


def test_pipeline_oracle_beats_random():
    config = fast_config(methods=("optimal", "random"), seeds=(0, 1, 2),
                         predict=False)
    records = harness.run_pipeline(config)
    by_method = {}
    for r in records:
        by_method.setdefault(r.method, []).append(r.sum_mos)
    # both schemes are scored on the true slot; the oracle placement comes
    # from the persistence forecast, which at sigma=50 m stays close
    assert np.median(by_method["optimal"]) >= np.median(by_method["random"])


def test_pipeline_drops_oracle_above_cap(capsys):
    config = fast_config(methods=("optimal", "random"), seeds=(0,),
                         predict=False, oracle_cap=10)
    records = harness.run_pipeline(config)
    assert [r.method for r in records] == ["random"]
    assert "enumeration cap" in capsys.readouterr().out


# ------------------------------------------------------------------- sweep


def test_sweep_unknown_axis():
    with pytest.raises(ConfigError):
        harness.sweep(fast_config(), "bandwidth", [1.0])


def test_sweep_cardinality():
    config = fast_config(methods=("random",), seeds=(0, 1), predict=False)
    records = harness.sweep(config, "tx_power", [10.0, 15.0, 20.0, 25.0])
    assert len(records) == 4 * 2
    assert sorted({r.sweep_value for r in records}) == [10.0, 15.0, 20.0, 25.0]


def test_sweep_single_point_matches_pipeline():
    config = fast_config(methods=("random",), seeds=(4,), predict=False)
    swept = harness.sweep(config, "num_users", [6])
    direct = harness.run_pipeline(config)
    assert len(swept) == len(direct) == 1
    assert swept[0].sum_mos == direct[0].sum_mos


def test_sweep_more_power_does_not_hurt():
    config = fast_config(methods=("non_cooperative",), seeds=(0, 1, 2),
                         predict=False)
    records = harness.sweep(config, "tx_power", [10.0, 25.0])
    med = {v: np.median([r.sum_mos for r in records if r.sweep_value == v])
           for v in (10.0, 25.0)}
    assert med[25.0] >= med[10.0]


# ----------------------------------------------------------------- outputs


def test_emit_outputs_headers_only_when_empty(tmp_path):
    paths = harness.emit_outputs([], tmp_path)
    assert open(paths["runs"]).read() == (
        "method,sweep_axis,sweep_value,seed,slot,sum_mos,feasible,iterations\n")
    assert open(paths["reward_curves"]).read() == (
        "method,seed,slot,iteration,reward,best_sum_mos\n")
    assert open(paths["la_convergence"]).read() == (
        "method,seed,slot,state_key,action,prob,u,v\n")
    assert open(paths["mos_heatmap"]).read() == "x_m,y_m,mos\n"


def test_emit_outputs_byte_identical_rerun(tmp_path):
    config = fast_config(methods=("laql", "random"), seeds=(1,), predict=False,
                         heatmap_resolution=5)
    blobs = []
    for d in ("a", "b"):
        records = harness.run_pipeline(config)
        paths = harness.emit_outputs(records, tmp_path / d, config)
        blobs.append({k: open(p, "rb").read() for k, p in paths.items()})
    assert blobs[0] == blobs[1]
    assert len(blobs[0]) == 4


def test_emit_outputs_values_parse_and_bound(tmp_path):
    config = fast_config(methods=("laql",), seeds=(0,), predict=False,
                         heatmap_resolution=6)
    records = harness.run_pipeline(config)
    paths = harness.emit_outputs(records, tmp_path, config)

    heat = open(paths["mos_heatmap"]).read().splitlines()[1:]
    assert len(heat) == 36
    for line in heat:
        x, y, m = (float(v) for v in line.split(","))
        assert 0.0 <= x <= 4000.0 and 0.0 <= y <= 4000.0
        assert 1.0 <= m <= 5.0

    conv = open(paths["la_convergence"]).read().splitlines()[1:]
    assert conv
    for line in conv:
        prob = float(line.split(",")[5])
        assert 0.0 <= prob <= 1.0


def test_mos_heatmap_grid_shape():
    config = fast_config(heatmap_resolution=4)
    pl_entries = np.array([[0, 1], [2, 3]])
    from coopcache.netmodel import CachePlacement
    cells = harness.mos_heatmap(config, CachePlacement(pl_entries),
                                np.array([0.4, 0.3, 0.2, 0.1]))
    assert len(cells) == 16
    xs = sorted({x for x, _, _ in cells})
    assert xs == [500.0, 1500.0, 2500.0, 3500.0]


# --------------------------------------------------------------------- CLI


def test_cli_config_error_exit_code(tmp_path):
    from coopcache import cli
    bad = tmp_path / "bad.cfg"
    bad.write_text("nope = 1\n")
    code = cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_CONFIG


def test_cli_la_bench(tmp_path, capsys):
    from coopcache import cli
    code = cli.main(["la-bench", "--runs", "5", "--steps", "2000",
                     "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "5/5" in out
    assert (tmp_path / "la_bench.csv").exists()


def test_cli_run_writes_outputs(tmp_path):
    from coopcache import cli
    cfg = tmp_path / "fast.cfg"
    cfg.write_text(
        "num_contents = 4\nnum_bs = 2\ncache_slots = 2\nnum_users = 6\n"
        "bandwidth_hz = 1e5\nhistory_steps = 20\nmobility_window = 6\n"
        "predictor_epochs = 10\nepisodes = 1\nsteps_per_episode = 150\n"
        "predict = false\nheatmap_resolution = 5\nmethods = laql, random\n")
    out = tmp_path / "out"
    code = cli.main(["run", "--config", str(cfg), "--seed", "2",
                     "--out", str(out)])
    assert code == cli.EXIT_OK
    for name in ("runs.csv", "reward_curves.csv", "la_convergence.csv",
                 "mos_heatmap.csv"):
        assert (out / name).exists()
    assert list(out.glob("*.png"))  # rendered figures alongside the CSVs
