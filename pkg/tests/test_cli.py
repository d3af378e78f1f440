import csv
import json

import pytest

from fluxtrap import cli
from fluxtrap.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, ValidationError, main, run_scenario, validate

DISK = {"profile": "uniform_disk", "B0": 5.0, "radius": 1.0}
QUICK_COUNT = {"name": "quick", "kind": "count", "field": DISK, "g": 2.0023, "radial_check": False}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def read_report(out):
    return json.loads((out / "report.json").read_text())


def is_estimate(d):
    return isinstance(d, dict) and set(d) == {"value", "error", "converged"}


def test_missing_parameter_is_named(tmp_path, capsys):
    cfg = {k: v for k, v in QUICK_COUNT.items() if k != "g"}
    assert main(["run", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "g: missing required parameter" in err


@pytest.mark.parametrize("bad", [{"g": -1.0}, {"bogus": 1}, {"field": {"profile": "uniform_disk", "R": 1.0}},
                                 {"kind": "no-such-kind"}, {"spin": 0}])
def test_validation_errors(bad):
    with pytest.raises(ValidationError):
        validate({**QUICK_COUNT, **bad})


def test_missing_file_is_io_error(tmp_path):
    assert main(["run", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == EXIT_IO


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", write(tmp_path, QUICK_COUNT), "--out", str(blocker / "sub"), "--quiet"]) == EXIT_IO


def test_empty_sweep_rejected(tmp_path):
    cfg = {**QUICK_COUNT, "sweep": {"parameter": "g", "values": []}}
    assert main(["sweep", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION


def test_override_and_config_echo(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["run", write(tmp_path, QUICK_COUNT), "--override", "g=2.5", "--override", "field.B0=2.0",
                 "--out", str(out)])
    assert code == EXIT_OK
    echoed = capsys.readouterr().out
    rep = read_report(out)
    assert rep["config"]["g"] == 2.5 and rep["config"]["field"]["B0"] == 2.0
    assert rep["config"]["spin"] == -1  # defaults are filled in
    assert '"g": 2.5' in echoed
    assert rep["results"]["N"] == 0


def test_reports_identical_apart_from_wall_time(tmp_path):
    texts = []
    for i in range(2):
        out = tmp_path / f"o{i}"
        assert main(["run", write(tmp_path, QUICK_COUNT), "--out", str(out), "--quiet"]) == EXIT_OK
        rep = read_report(out)
        rep.pop("wall_time_s")
        texts.append(json.dumps(rep, sort_keys=True))
        texts.append((out / "table.csv").read_bytes())
    assert texts[0] == texts[2] and texts[1] == texts[3]


def test_numeric_results_carry_error_and_flag():
    rep, _, code = run_scenario(QUICK_COUNT)
    assert code == EXIT_OK
    res = rep["results"]
    assert is_estimate(res["F"]) and is_estimate(res["eps"])
    assert all(is_estimate(v) for v in res["binding_integrals"])
    assert all(is_estimate(c["form_value"]) for c in res["certificates"])


def test_count_example_three_certificates():
    rep, _, _ = run_scenario(QUICK_COUNT)
    res = rep["results"]
    assert res["n_B"] == 3 and res["n_certified"] == 3
    assert [c["j"] for c in res["certificates"]] == [0, 1, 2]
    assert all(c["certified"] and c["form_value"]["value"] < 0 for c in res["certificates"])


def test_identity_check_relative_difference():
    rep, _, code = run_scenario({"kind": "identity-check", "current": {"profile": "r2exp"}, "g_values": [2.1]})
    assert code == EXIT_OK
    assert rep["results"]["relative_difference"]["value"] < 1e-4
    assert rep["results"]["conditions"][0]["binds"]


def test_presets_list(capsys):
    assert main(["presets", "list"]) == EXIT_OK
    names = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
    assert names == cli.list_presets()
    for c in range(1, 11):
        assert any(n.startswith(f"c{c:02d}_") for n in names)


def test_every_preset_validates():
    for name in cli.list_presets():
        validate(cli.load_config(name))


def test_lambda_sweep_monotone(tmp_path):
    cfg = {"kind": "strong-coupling", "current": {"profile": "r2exp"}, "g": 3.0,
           "sweep": {"parameter": "lams", "start": 100.0, "stop": 1600.0, "num": 4, "spacing": "log"}}
    out = tmp_path / "o"
    assert main(["sweep", write(tmp_path, cfg), "--out", str(out), "--quiet"]) == EXIT_OK
    with open(out / "table.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    vals = [float(r["rescaled"]) for r in rows]
    assert len(vals) == 4 and all(b > a for a, b in zip(vals, vals[1:]))
    assert all(abs(v + 1.0) < 0.02 for v in vals)
    lines = (out / "plot.dat").read_text().splitlines()
    assert lines[0].startswith("#") and sum(line.startswith("#") for line in lines) == 1
    assert all(len(line.split()) == 2 for line in lines[1:])
    xs = [float(line.split()[0]) for line in lines[1:]]
    assert xs[0] == 100.0 and xs[-1] == 1600.0 and all(b > a for a, b in zip(xs, xs[1:]))


def test_ell_sweep_table(tmp_path):
    cfg = {"kind": "radial-spectrum", "current": {"profile": "r2exp"}, "lam": 0.2, "g": 3.0,
           "sweep": {"parameter": "ell", "values": [-1, 0, 1]}}
    out = tmp_path / "o"
    assert main(["sweep", write(tmp_path, cfg), "--out", str(out), "--quiet"]) == EXIT_OK
    text = (out / "table.csv").read_text()
    assert text.splitlines()[0] == "ell,count,lowest"
    rows = list(csv.DictReader(text.splitlines()))
    assert [int(r["count"]) for r in rows] == [0, 1, 0]
    rep = read_report(out)
    assert rep["sweep"]["values"] == [-1, 0, 1]


def test_sweep_range_spacing():
    assert cli._sweep_values({"parameter": "x", "start": 1.0, "stop": 100.0, "num": 3, "spacing": "log"}) == \
        [1.0, 10.0, 100.0]
    with pytest.raises(ValidationError):
        cli._sweep_values({"parameter": "x", "values": [1.0, 1.0]})


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "fluxtrap" in capsys.readouterr().out
