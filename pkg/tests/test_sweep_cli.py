import json

import numpy as np
import pytest

from cavitycool import ConfigInvalid, OutputUnwritable
from cavitycool import cli, sweep

SMALL = """
[params]
c_d = 0.05
nu = 10.0
eta = 0.02
eta_p = 150.0

[sweep]
n_atoms = [6, 2, 4]
l = [0, 5]
L = 10
spont_emission = [false, true]

[params_extra]
"""


def _cfg(**sweep_kw):
    doc = {"params": {"c_d": 0.05, "c_r": 10.0}, "sweep": {"n_atoms": [2, 4], "l": [0], "L": 10}}
    doc["sweep"].update(sweep_kw)
    return sweep.parse_config(doc)


def test_presets_ship_with_the_package():
    assert {"fig2", "fig3", "fig4", "feasibility"} <= set(sweep.list_presets())
    cfg = sweep.load_config("fig2")
    assert cfg.params == {"c_d": 0.05, "nu": 10.0, "eta": 0.02, "eta_p": 150.0, "kappa": 1.0}
    assert {4, 10, 20, 40, 60, 100, 120} <= set(cfg.n_atoms)
    assert cfg.spont_emission == (False,) and cfg.detuning == ("sideband",)
    fig4 = sweep.load_config("fig4")
    assert fig4.params["c_r"] == 10.0 and fig4.params["c_x"] == 0.4
    assert set(fig4.l) == {0, 5}


@pytest.mark.parametrize("doc,match", [
    ({"params": {"c_d": 0.05}, "sweep": {"n_atoms": []}}, "no points"),
    ({"params": {"c_d": 0.05}, "sweep": {"n_atoms": [2], "l": []}}, "no points"),
    ({"params": {"c_d": 0.05}, "sweep": {"n_atoms": [2]}, "extra": {}}, "unknown section"),
    ({"params": {"c_d": 0.05, "cd": 1}, "sweep": {"n_atoms": [2]}}, "unknown key"),
    ({"params": {"c_d": 0.05}, "sweep": {"n_atoms": [0]}}, "positive integers"),
    ({"params": {"c_d": 0.05}, "sweep": {"n_atoms": [2], "l": [10]}}, "l entries"),
    ({"params": {"c_d": 0.05}, "sweep": {"n_atoms": [2], "detuning": ["blue"]}}, "detuning"),
    ({"params": {"c_d": 0.05, "g": 1.0}, "sweep": {"n_atoms": [2]}}, "either"),
    ({"params": {"c_d": 0.05, "nu": -1.0}, "sweep": {"n_atoms": [2]}}, "params"),
    ({"params": {}, "sweep": {"n_atoms": [2]}}, "c_d or g"),
])
def test_invalid_configs(doc, match):
    with pytest.raises(ConfigInvalid, match=match):
        sweep.parse_config(doc)


def test_unknown_key_in_toml_file(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(SMALL)
    with pytest.raises(ConfigInvalid, match="params_extra"):
        sweep.load_config(path)


def test_points_are_sorted_by_axes(tmp_path):
    path = tmp_path / "ok.toml"
    path.write_text(SMALL.replace("[params_extra]", ""))
    pts = sweep.sweep_points(sweep.load_config(path))
    keys = [(p["spont_emission"], p["l"], p["n_atoms"]) for p in pts]
    assert keys == sorted(keys)
    assert [p["index"] for p in pts] == list(range(12))


def test_overrides_are_parsed_as_toml():
    cfg = sweep.apply_overrides(_cfg(), ["sweep.n_atoms=[3]", "params.c_r=20.0",
                                         "output.name=alt"])
    assert cfg.n_atoms == (3,) and cfg.params["c_r"] == 20.0 and cfg.name == "alt"
    with pytest.raises(ConfigInvalid):
        sweep.apply_overrides(_cfg(), ["n_atoms"])


def test_failed_point_becomes_an_error_row():
    # a blue-detuned pump heats the atoms, so that point has no steady state
    cfg = _cfg(n_atoms=[2], detuning=["sideband", 10.0])
    rows, _ = sweep.run_sweep(cfg, write=False)
    assert [r["status"] for r in rows] == ["ok", "NotHurwitz"]
    assert "unstable" in rows[1]["error"]
    assert "FAILED N=2" in sweep.emit_report(rows)
    cfg = sweep.parse_config({"params": {"c_d": 60.0}, "sweep": {"n_atoms": [2]}})
    rows, _ = sweep.run_sweep(cfg, write=False)
    assert rows[0]["status"] == "TrapDestabilized" and "nu_i^2" in rows[0]["error"]


def test_serial_and_parallel_runs_agree(tmp_path):
    cfg = _cfg(n_atoms=[1, 3, 5, 8], l=[0, 4], spont_emission=[False, True])
    serial, p1 = sweep.run_sweep(cfg, workers=1, out_dir=tmp_path / "a")
    parallel, p2 = sweep.run_sweep(cfg, workers=3, out_dir=tmp_path / "b")
    assert p1["results"].read_bytes() == p2["results"].read_bytes()
    assert [r["index"] for r in parallel] == list(range(16))


def test_rerun_is_byte_identical(tmp_path):
    cfg = _cfg()
    _, p1 = sweep.run_sweep(cfg, out_dir=tmp_path)
    first = p1["results"].read_bytes()
    _, p2 = sweep.run_sweep(cfg, out_dir=tmp_path)
    assert p2["results"].read_bytes() == first


def test_csv_layout_and_round_trip(tmp_path):
    cfg = _cfg(n_atoms=[2, 12])
    rows, paths = sweep.run_sweep(cfg, out_dir=tmp_path)
    text = paths["results"].read_text()
    header = text.splitlines()[0].split(",")
    assert header[0] == "schema"
    assert "n_01" in header and "n_12" in header and "rate_13" in header
    assert "eq22_12" in header and "valid_lamb_dicke" in header
    assert text.splitlines()[1].startswith(sweep.SCHEMA)
    back = sweep.read_results(paths["results"])
    for a, b in zip(rows, back):
        assert a["gamma_min"] == b["gamma_min"]
        assert a["_n"] == b["_n"] and a["_rates"] == b["_rates"]
        assert a["regime"] == b["regime"]
    assert sweep.emit_report(back) == sweep.emit_report(rows)
    meta = json.loads(paths["meta"].read_text())
    assert meta["schema"] == sweep.SCHEMA and meta["config"]["sweep"]["n_atoms"] == [2, 12]
    long = paths["phonons"].read_text().splitlines()
    assert len(long) == 1 + 2 + 12


def test_floats_keep_seventeen_digits():
    assert sweep._fmt(0.1) == "0.10000000000000001"
    assert float(sweep._fmt(np.pi)) == np.pi


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputUnwritable):
        sweep.run_sweep(_cfg(n_atoms=[1]), out_dir=blocker / "sub")


def test_single_atom_report_has_no_crossover_line():
    rows, _ = sweep.run_sweep(_cfg(n_atoms=[1]), write=False)
    text = sweep.emit_report(rows)
    assert "single atom" in text and "crossover" not in text


def test_fig2_report_names_the_crossover():
    cfg = sweep.apply_overrides(sweep.load_config("fig2"),
                                ["sweep.n_atoms=[10, 20, 30, 40, 50, 60]"])
    rows, _ = sweep.run_sweep(cfg, write=False)
    text = sweep.emit_report(rows)
    assert "crossover N ≈ 40 (c_d·N = 2)" in text


def test_fig4_report_fits_hottest_atom_exponent():
    cfg = sweep.apply_overrides(sweep.load_config("fig4"),
                                ["sweep.n_atoms=[20, 60, 80, 100, 120]", "sweep.l=[5]"])
    rows, _ = sweep.run_sweep(cfg, write=False)
    text = sweep.emit_report(rows)
    line = next(s for s in text.splitlines() if "hottest-atom scaling" in s)
    assert "95% CI" in line
    assert float(line.split("N^")[1].split()[0]) == pytest.approx(2, abs=0.3)


def test_fig3_rates_rise_with_optimization():
    cfg = sweep.apply_overrides(sweep.load_config("fig3"), ["sweep.n_atoms=[20]"])
    rows, _ = sweep.run_sweep(cfg, write=False)
    rates = [r["gamma_min"] for r in rows]
    assert max(rates) / rates[0] >= 5


def test_feasibility_preset_report():
    cfg = sweep.load_config("feasibility")
    rows, _ = sweep.run_sweep(cfg, write=False)
    text = sweep.emit_report(rows, cfg.feasibility)
    assert "2.438 MHz" in text and "6.53 ms" in text


def test_cli_run_report_and_presets(tmp_path, capsys):
    assert cli.main(["presets", "list"]) == 0
    assert "fig3" in capsys.readouterr().out
    code = cli.main(["run", "fig2", "--out", str(tmp_path), "--quiet",
                     "--override", "sweep.n_atoms=[1, 4]"])
    assert code == 0
    csv_path = tmp_path / "fig2.csv"
    assert csv_path.exists()
    capsys.readouterr()
    assert cli.main(["report", str(csv_path)]) == 0
    assert "2 sweep point(s)" in capsys.readouterr().out


def test_cli_figures(tmp_path):
    pytest.importorskip("matplotlib")
    cli.main(["run", "fig3", "--out", str(tmp_path), "--quiet",
              "--override", "sweep.n_atoms=[5]", "--override", "sweep.l=[0, 3, 6]"])
    assert cli.main(["report", str(tmp_path / "fig3.csv"), "--figures"]) == 0
    assert (tmp_path / "fig3_scaling.png").stat().st_size > 0
    assert (tmp_path / "fig3_optimization.png").stat().st_size > 0


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["run", "no-such-preset"]) == 2
    assert cli.main(["run", "fig2", "--override", "sweep.n_atoms=[]"]) == 2
    assert cli.main(["run", "fig2", "--out", str(tmp_path), "--quiet",
                     "--override", "params.c_d=30.0", "--override", "sweep.n_atoms=[1]"]) == 3
    err = capsys.readouterr().err
    assert "no such config" in err and "no points" in err
