import json

import numpy as np
import pytest
import yaml

from dualband.channel import load_channels
from dualband.cli import (FIGURE_IDS, config_hash, load_config, main,
                          parse_config, run_dual_band, run_figure,
                          validate_run, with_overrides)
from dualband.errors import ConfigError


def base_doc():
    return {
        "array": {"n_row": 8, "n_col": 8, "n_s": 2, "n_rf": 2,
                  "h_s": 3, "v_s": 3},
        "users": {"k_s": 2, "k_m": 2, "l_s": 3, "l_m": 3},
        "thresholds": {"gamma": 10.0,
                       "targets_sub": [[0.3, -0.2]], "upsilon_s": 10.0,
                       "targets_mm": [[0.5, 0.6]], "upsilon_m": 3.0},
        "power": {"p_t": 40.0},
        "algorithm": {"outer_iters": 25},
        "run": {"seeds": [7]},
    }


def write_doc(tmp_path, doc, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


# -- configuration ---------------------------------------------------------


def test_parse_config_roundtrip():
    cfg = parse_config(base_doc())
    arr = cfg.array_config()
    assert (arr.n_row, arr.n_col, arr.n_s, arr.n_rf) == (8, 8, 2, 2)
    gammas, targets, ups = cfg.sub6g_thresholds(2)
    assert gammas == [10.0, 10.0]
    assert targets == ((0.3, -0.2),)
    assert ups == [10.0]
    assert cfg.seeds == [7]


@pytest.mark.parametrize("mangle", [
    lambda d: d.pop("array"),
    lambda d: d["array"].pop("n_col"),
    lambda d: d.update(bogus={}),
    lambda d: d["run"].update(seeds=[]),
    lambda d: d["power"].update(p_t=-1.0),
    lambda d: d["thresholds"].update(upsilon_s=[1.0, 2.0]),
])
def test_parse_config_rejects_bad_docs(mangle):
    doc = base_doc()
    mangle(doc)
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_config_hash_tracks_content():
    a = parse_config(base_doc())
    b = parse_config(base_doc())
    assert config_hash(a) == config_hash(b)
    c = with_overrides(a, power={"p_t": 41.0})
    assert config_hash(c) != config_hash(a)
    assert a.power["p_t"] == 40.0


def test_load_config_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/cfg.yaml")


# -- exit codes ------------------------------------------------------------


def test_main_config_error_exit_code(tmp_path):
    path = write_doc(tmp_path, {"array": {"n_row": 8}})
    assert main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 3


def test_main_budget_exhausted_exit_code(tmp_path):
    doc = base_doc()
    doc["power"]["p_t"] = 1.0
    path = write_doc(tmp_path, doc)
    assert main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 2


# -- run verb --------------------------------------------------------------


def test_run_dual_band_splits_power(tmp_path):
    cfg = parse_config(base_doc())
    res = run_dual_band(cfg, seed=7)
    assert res.power_sub > 0
    assert res.power_mm_budget == pytest.approx(40.0 - res.power_sub)
    res.design_mm.validate(res.power_mm_budget)   # raises on violation


def test_run_pipeline_subset(tmp_path):
    doc = base_doc()
    doc["run"]["pipelines"] = ["sub6g"]
    res = run_dual_band(parse_config(doc), seed=7)
    assert res.design_sub is not None
    assert res.design_mm is None


def test_run_outputs_byte_identical(tmp_path):
    path = write_doc(tmp_path, base_doc())
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", path, "--seed", "7",
                 "--out", str(a)]) == 0
    assert main(["run", "--config", path, "--seed", "7",
                 "--out", str(b)]) == 0
    for name in ("results.csv", "trace_sub.csv", "trace_mm.csv",
                 "designs.json", "channels.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_validate_accepts_fresh_run_and_flags_tampering(tmp_path):
    path = write_doc(tmp_path, base_doc())
    out = tmp_path / "run"
    assert main(["run", "--config", path, "--out", str(out)]) == 0
    assert validate_run(str(out)) == []
    assert main(["validate", "--out", str(out)]) == 0
    designs = json.loads((out / "designs.json").read_text())
    designs["mmwave"]["f_bb"]["re"] = (
        10.0 * np.asarray(designs["mmwave"]["f_bb"]["re"])).tolist()
    (out / "designs.json").write_text(json.dumps(designs))
    assert validate_run(str(out)) != []
    assert main(["validate", "--out", str(out)]) == 2


def test_dump_channel_roundtrip(tmp_path):
    path = write_doc(tmp_path, base_doc())
    assert main(["dump-channel", "--config", path, "--seed", "3",
                 "--out", str(tmp_path)]) == 0
    chan = load_channels(str(tmp_path / "channels_seed3.json"))
    assert chan.seed == 3
    assert chan.h_sub.shape[1] == 2


# -- figure verb -----------------------------------------------------------


def test_figure_unknown_id_rejected(tmp_path):
    cfg = parse_config(base_doc())
    with pytest.raises(ConfigError):
        run_figure(cfg, "fig99", str(tmp_path))
    assert "fig8" in FIGURE_IDS


def read_rows(path):
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def test_figure_size_sweep_schema(tmp_path):
    doc = base_doc()
    doc["figures"] = {"fig8": {"sizes": [8, 9],
                               "strategies": ["cas", "ras_fsjbas"]}}
    cfg = parse_config(doc)
    files = run_figure(cfg, "fig8", str(tmp_path))
    assert files == ["fig8_power_vs_size.csv"]
    header, rows = read_rows(tmp_path / "fig8_power_vs_size.csv")
    assert header == ["sweep_value", "series", "statistic", "value"]
    sweeps = {r["sweep_value"] for r in rows}
    assert sweeps == {"8", "9"}
    means = {(r["sweep_value"], r["series"]): float(r["value"])
             for r in rows if r["statistic"] == "mean"}
    for size in ("8", "9"):
        assert means[(size, "ras_fsjbas")] <= means[(size, "cas")] + 1e-9
    manifest = json.loads((tmp_path / "fig8_manifest.json").read_text())
    assert manifest["figure"] == "fig8"
    assert manifest["config_hash"] == config_hash(cfg)


def test_figure_init_convergence_monotone(tmp_path):
    doc = base_doc()
    doc["figures"] = {"fig10": {"iterations": 6, "inits": ["coarse", "fixed"]}}
    cfg = parse_config(doc)
    run_figure(cfg, "fig10", str(tmp_path))
    _, rows = read_rows(tmp_path / "fig10_convergence.csv")
    for series in ("coarse", "fixed"):
        curve = [float(r["value"]) for r in rows
                 if r["series"] == series and r["statistic"] == "mean"]
        assert len(curve) == 7
        assert all(b <= a + 1e-9 for a, b in zip(curve, curve[1:]))
