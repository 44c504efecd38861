import json

import pytest

from confsub import cli
from confsub.errors import ConfigurationError, ModelConstructionError
from confsub.report import dumps, load_schema, validate


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_defaults_are_filled():
    cfg = cli.resolve_config({"model": {"name": "hopf"}})
    assert cfg["suites"] == list(cli.SUITES)
    assert cfg["grid"] == 64 and cfg["points"] == 50 and cfg["model"]["params"] == {}
    assert cfg["tolerance"]["divergence"] == 1e-4


@pytest.mark.parametrize("raw", [
    {},
    {"model": {"name": "hopf"}, "colour": 1},
    {"model": {"name": "hopf"}, "suites": ["bogus"]},
    {"model": {"name": "hopf"}, "theorems": ["T0_0"]},
    {"model": {"name": "hopf"}, "grid": 4},
    {"model": {"name": "hopf"}, "points": True},
    {"model": {"name": "hopf"}, "tolerance": {"identity": -1.0}},
    {"model": {"name": "hopf"}, "tolerance": {"loose": 1.0}},
    {"model": {"name": "hopf", "params": 3}},
])
def test_bad_configurations_rejected(raw):
    with pytest.raises(ConfigurationError):
        cli.resolve_config(raw)


def test_run_writes_valid_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    cfg = _write(tmp_path, f'suites = ["riemannian", "structural"]\npoints = 5\noutput = "{out.as_posix()}"\n'
                           '[model]\nname = "hopf"\n')
    assert cli.main(["run", str(cfg)]) == 0
    report = json.loads(out.read_text(encoding="utf-8"))
    validate(report)
    assert report["status"]["passed"] and report["status"]["first_failure"] is None
    assert report["suites"]["riemannian"]["identities"]["EQ2_3"]["status"] == "checked"
    assert "riemann" in report["conventions"]
    assert "riemannian: passed" in capsys.readouterr().err


def test_failing_check_exit_code_and_first_failure(tmp_path, capsys):
    cfg = _write(tmp_path, 'suites = ["divergence"]\ngrid = 8\nfields = 2\n[tolerance]\ndivergence = 1e-300\n'
                           '[model]\nname = "hopf"\nparams = { squash = 0.3 }\n')
    assert cli.main(["run", str(cfg)]) == 1
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["status"]["first_failure"] == "divergence/divergence residual"
    assert "first failure: divergence/divergence residual" in captured.err


def test_configuration_error_exit_code(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.toml")]) == 2
    cfg = _write(tmp_path, "[model\nname=")
    assert cli.main(["run", str(cfg)]) == 2
    cfg = _write(tmp_path, '[model]\nname = "hopf"\nparams = { r = -1.0 }\n')
    assert cli.main(["run", str(cfg)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_model_construction_error_exit_code(tmp_path, monkeypatch, capsys):
    def broken(name, params):
        raise ModelConstructionError(f"{name}: volume mismatch")

    monkeypatch.setattr(cli, "make_model", broken)
    cfg = _write(tmp_path, '[model]\nname = "hopf"\n')
    assert cli.main(["run", str(cfg)]) == 3
    assert "model construction error" in capsys.readouterr().err


def test_manifold_models_skip_submersion_suites(tmp_path, capsys):
    cfg = _write(tmp_path, 'suites = ["conformal", "quasi_einstein"]\npoints = 4\n[model]\nname = "sphere"\n'
                           'params = { n = 3 }\n')
    assert cli.main(["run", str(cfg)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["suites"]["conformal"]["status"] == "not-applicable"
    assert report["suites"]["quasi_einstein"]["status"] == "passed"


def test_describe_and_list_models(capsys):
    assert cli.main(["describe", "T3_6"]) == 0
    assert "Einstein" in capsys.readouterr().out
    assert cli.main(["describe", "T0_0"]) == 2
    assert "unknown theorem id" in capsys.readouterr().err
    assert cli.main(["list-models"]) == 0
    assert "hopf" in capsys.readouterr().out


def test_dumps_is_canonical():
    text = dumps({"b": 0.1, "a": [float("inf"), float("nan"), -float("inf"), 1e-7, 3.0]})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text)["a"] == ["inf", "nan", "-inf", 1e-7, 3.0]
    assert "0.10000000000000001" in text
    assert load_schema()["$id"] == "confsub/report-v1"
