import json
import math

import pytest

from qgeo.cli import main, selftest
from qgeo.errors import ConfigError
from qgeo.scenarios import OPERATIONS, bundled_config, bundled_configs, parse_config, run_scenario


def scenario(**over):
    sc = {
        "name": "small",
        "model": {"kind": "ho"},
        "operation": "tqgt",
        "sweep": {"ranges": {"B": [0.5, 2.0, 4]}, "fixed": {"t": 1, "X": 1, "W": 1}},
        "coords": ["X", "W"],
        "output": "small.csv",
    }
    sc.update(over)
    return sc


def write_config(tmp_path, *scenarios):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"scenarios": list(scenarios)}))
    return str(path)


def test_parse_minimal_config():
    (sc,) = parse_config(json.dumps({"scenarios": [scenario()]}))
    assert sc.operation == "tqgt" and sc.coords == ("X", "W")


@pytest.mark.parametrize("bad", [
    "not json",
    json.dumps({"scenarios": []}),
    json.dumps({"scenarios": [scenario(operation="spin")]}),
    json.dumps({"scenarios": [scenario(model={"kind": "rotor"})]}),
    json.dumps({"scenarios": [scenario(extra=1)]}),
    json.dumps({"scenarios": [scenario(sweep={"ranges": {"B": [2.0, 1.0, 0]}, "fixed": {}})]}),
])
def test_bad_configs_are_rejected(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_exit_codes(tmp_path, capsys):
    assert main(["run", write_config(tmp_path, scenario()), "--out-dir", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "small.csv").is_file()
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["run", write_config(tmp_path, scenario(operation="spin"))]) == 2
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    # the output directory cannot be created under a regular file
    assert main(["run", write_config(tmp_path, scenario()), "--out-dir", str(blocker / "sub")]) == 1
    capsys.readouterr()


def test_out_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("QGEO_OUT_DIR", str(tmp_path / "env"))
    assert main(["run", write_config(tmp_path, scenario())]) == 0
    assert (tmp_path / "env" / "small.csv").is_file()
    capsys.readouterr()


def test_values_round_trip(tmp_path):
    (sc,) = parse_config(json.dumps({"scenarios": [scenario()]}))
    table = run_scenario(sc, tmp_path)
    text = (tmp_path / "small.csv").read_text()
    assert text.startswith(",".join(table.header) + "\n")
    assert "# version: qgeo" in text
    header = table.header
    for row in table.rows:
        cells = dict(zip(header, row))
        assert cells["status"] == "ok"
        b = float(cells["B"])
        assert float(format(b, ".17g")) == b
        assert math.isfinite(float(cells["g_X_X"]))


def test_failed_points_are_recorded_per_row(tmp_path):
    sc = scenario(operation="curvature", coords=["X", "W", "B"],
                  sweep={"ranges": {"B": [1.2, 1.6, 2]}, "fixed": {"t": 0.5, "X": 1, "W": 1}})
    (parsed,) = parse_config(json.dumps({"scenarios": [sc]}))
    table = run_scenario(parsed, tmp_path)
    status = [dict(zip(table.header, r))["status"] for r in table.rows]
    assert len(status) == 2 and all(s != "ok" for s in status)


def test_bundled_demo_is_deterministic(tmp_path):
    scs = parse_config(bundled_config("demo.json"))
    for sc in scs:
        a = run_scenario(sc, tmp_path / "a")
        b = run_scenario(sc, tmp_path / "b")
        assert a.body() == b.body()
        assert (tmp_path / "a" / sc.output).read_bytes() == (tmp_path / "b" / sc.output).read_bytes()


def test_every_operation_is_bundled():
    used = set()
    for name in bundled_configs():
        used |= {sc.operation for sc in parse_config(bundled_config(name))}
    assert used == set(OPERATIONS)


def test_selftest_passes(capsys):
    assert selftest()
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    assert main(["selftest", "--filter", "palumbo"]) == 0
    assert not selftest("nothing-matches", out=lambda s: None)


def test_list_models(capsys):
    assert main(["list-models"]) == 0
    out = capsys.readouterr().out
    for kind in ("ho", "iho", "hotdf", "chain"):
        assert kind in out
    assert "demo.json" in out
