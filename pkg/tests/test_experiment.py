import json
import logging

import pytest

from dcs2mvnmf.experiment import (ABLATION_ORDER, ConfigError, ExperimentConfig,
                                  config_from_dict, config_to_dict, derive_seed,
                                  manifest_to_config, params_for_ratio, plan_cells, preset,
                                  resolve_config, run_experiment)


def small(out, **extra):
    data = {
        "dataset": {"synthetic": {"samples_per_class": 10, "view_dims": [6, 5], "seed": 3}},
        "ratios": [0.2], "redraws": 2, "repeats": 2, "restarts": 3,
        "solver": {"max_iters": 20}, "graph": {"k": 3}, "out": str(out),
    }
    return resolve_config(data, overrides=extra)


def test_preset_tables():
    assert preset("yale")["0.3"] == {"alpha": 1e2, "beta": 1.0, "gamma": 0.1, "k": 2}
    assert preset("ecg")["0.1"] == {"alpha": 1e5, "beta": 10.0, "gamma": 0.1, "k": 4}
    for r in ("0.1", "0.2", "0.3"):
        assert preset("webkb")[r] == {"alpha": 1e3, "beta": 1.0, "gamma": 1.0, "k": 3}
    with pytest.raises(ConfigError, match="unknown preset"):
        preset("mnist")


def test_precedence_defaults_preset_file_flags():
    cfg = resolve_config(preset_name="orl")
    assert params_for_ratio(cfg, 0.2) == {"alpha": 1e3, "beta": 1.0, "gamma": 0.01, "k": 2}
    # a file value beats the preset
    cfg = resolve_config({"solver": {"alpha": 7.0}}, "orl")
    assert params_for_ratio(cfg, 0.2)["alpha"] == 7.0
    assert params_for_ratio(cfg, 0.2)["beta"] == 1.0
    # flags beat the file
    cfg = resolve_config({"seed": 4}, overrides={"seed": 9})
    assert cfg.seed == 9
    assert resolve_config().solver.alpha == 100.0


def test_missing_ratio_falls_back_with_warning(caplog):
    cfg = resolve_config(preset_name="yale", overrides={"ratios": [0.5]})
    with caplog.at_level(logging.WARNING):
        p = params_for_ratio(cfg, 0.5)
    assert p["alpha"] == cfg.solver.alpha
    assert "no per-ratio entry" in caplog.text


@pytest.mark.parametrize("data, path", [
    ({"solver": {"alpha": -1}}, "solver"),
    ({"solver": {"alhpa": 1}}, "solver.alhpa"),
    ({"graph": {"k": 0}}, "graph"),
    ({"ratios": [1.5]}, "ratios"),
    ({"variants": ["fast"]}, "variants"),
    ({"dataset": {"kind": "files"}}, "dataset"),
])
def test_config_errors_carry_field_path(data, path):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert str(info.value).startswith(path)


def test_config_round_trip():
    cfg = resolve_config(preset_name="ecg")
    assert config_from_dict(json.loads(json.dumps(config_to_dict(cfg)))) == cfg


def test_seeds_stable_and_distinct():
    assert derive_seed(0, "mask", 0, 1) == derive_seed(0, "mask", 0, 1)
    assert derive_seed(0, "mask", 0, 1) != derive_seed(0, "mask", 1, 0)
    assert 0 <= derive_seed(123, "x") < 2**63


def test_plan_cells_counts():
    cfg = ExperimentConfig(ratios=[0.1, 0.2], redraws=3, variants=["full", "baseline"],
                           sweep={"alpha": [1.0, 10.0]})
    assert len(plan_cells(cfg, cfg.variants)) == 12
    cells = plan_cells(cfg, cfg.variants, sweep=True)
    assert len(cells) == 24
    assert cells[0].name == "g0_r0_d0_full"


def test_run_two_variants(tmp_path):
    cfg = small(tmp_path, variants=["full", "baseline"])
    paths = run_experiment(cfg)
    metrics = json.load(open(paths["metrics.json"]))
    assert [r["variant"] for r in metrics["summary"]] == ["full", "baseline"]
    assert len(metrics["cells"]) == 4
    cells = {c["cell"]: c for c in metrics["cells"]}
    # variants of one redraw share the mask and the start
    assert cells["r0_d1_full"]["seeds"]["mask"] == cells["r0_d1_baseline"]["seeds"]["mask"]
    assert cells["r0_d1_full"]["seeds"]["init"] == cells["r0_d1_baseline"]["seeds"]["init"]
    header = (tmp_path / "metrics.csv").read_text().splitlines()[0]
    assert header == "ratio,full_AC,full_NMI,baseline_AC,baseline_NMI"
    trace = (tmp_path / "trace_r0_d0_full.csv").read_text().splitlines()
    assert trace[0].startswith("iteration,total,recon_0,disc_0,graph_0,consensus_0")


def test_ablate_covers_every_variant(tmp_path):
    cfg = small(tmp_path, redraws=1)
    metrics = json.load(open(run_experiment(cfg, "ablate")["metrics.json"]))
    assert [r["variant"] for r in metrics["summary"]] == list(ABLATION_ORDER)


def test_sweep_rows(tmp_path):
    cfg = small(tmp_path, redraws=1, sweep={"alpha": [1.0, 10.0, 100.0]})
    paths = run_experiment(cfg, "sweep")
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(rows) == 1 + 3
    assert rows[0].startswith("alpha,variant,ratio")
    assert [r["alpha"] for r in json.load(open(paths["metrics.json"]))["cells"]] == [1, 10, 100]


def test_manifest_rerun_is_bit_identical(tmp_path):
    first = run_experiment(small(tmp_path / "a", variants=["full", "no_normalization"]))
    manifest = json.load(open(first["manifest.json"]))
    data, mode = manifest_to_config(manifest)
    again = run_experiment(resolve_config(data, overrides={"out": str(tmp_path / "b")}), mode)
    assert open(first["metrics.json"], "rb").read() == open(again["metrics.json"], "rb").read()


@pytest.mark.slow
def test_parallel_matches_sequential(tmp_path):
    seq = run_experiment(small(tmp_path / "s", variants=["full", "baseline"]))
    par = run_experiment(small(tmp_path / "p", variants=["full", "baseline"], parallel=True))
    assert open(seq["metrics.json"], "rb").read() == open(par["metrics.json"], "rb").read()


def test_save_factors_and_graph_dump(tmp_path):
    cfg = small(tmp_path, redraws=1, save_factors=True, dump_graph=True)
    run_experiment(cfg)
    d = tmp_path / "factors_r0_d0_full"
    for name in ("W_0.csv", "W_1.csv", "Z_c.csv", "labels.txt", "truth.txt", "meta.json"):
        assert (d / name).exists()
    assert (tmp_path / "graph_S_0.csv").exists() and (tmp_path / "graph_S_1.csv").exists()


def test_preset_table_complete():
    # (alpha, beta, gamma, k) per dataset, columns are 10%, 20%, 30% labels
    expected = {
        "yale": ([1e3, 1e4, 1e2], [0.1, 0.1, 1], [0.1, 0.1, 0.1], [2, 2, 2]),
        "orl": ([1e2, 1e3, 1e3], [1, 1, 0.1], [0.01, 0.01, 0.01], [2, 2, 2]),
        "ecg": ([1e5, 1e4, 1e3], [10, 1, 10], [0.1, 0.1, 0.1], [4, 4, 4]),
        "webkb": ([1e3, 1e3, 1e3], [1, 1, 1], [1, 1, 1], [3, 3, 3]),
    }
    for name, cols in expected.items():
        table = preset(name)
        for i, ratio in enumerate(("0.1", "0.2", "0.3")):
            assert tuple(table[ratio][k] for k in ("alpha", "beta", "gamma", "k")) == \
                tuple(col[i] for col in cols)
