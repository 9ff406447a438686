import json
import subprocess
import sys

import pytest

from spdedist import cli
from spdedist.scenarios import SCENARIOS, Assertion, ScenarioResult


def run_main(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_list_scenarios_is_stable(capsys):
    code, a, _ = run_main(["list-scenarios"], capsys)
    _, b, _ = run_main(["list-scenarios"], capsys)
    assert code == 0 and a == b
    names = [line.split()[0] for line in a.splitlines()]
    assert names == list(SCENARIOS)
    for name in ("halfline-ode", "gbm", "wz-convergence", "hjmm", "negative-rates", "rate-spde"):
        assert name in names


@pytest.mark.parametrize("name", list(SCENARIOS))
def test_defaults_validate(name, capsys):
    code, out, _ = run_main(["defaults", name], capsys)
    assert code == 0
    cfg = json.loads(out)
    assert cli.resolve_config(cfg)["scenario"] == name


@pytest.mark.parametrize(
    "cfg, path",
    [
        ({"scenario": "nope"}, "scenario"),
        ({"scenario": "halfline-ode", "model": {"bogus": 1}}, "model/bogus"),
        ({"scenario": "halfline-ode", "numerics": {"steps": "many"}}, "numerics/steps"),
        ({"scenario": "halfline-ode", "seed": -1}, "seed"),
        ({"scenario": "halfline-ode", "extra": 1}, "extra"),
    ],
)
def test_config_errors_name_the_field(tmp_path, capsys, cfg, path):
    code, _, err = run_main(["run", write(tmp_path, cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 2
    assert path in err


def test_invalid_json_and_seed_override_range(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run_main(["run", str(bad)], capsys)[0] == 2
    cfg = write(tmp_path, {"scenario": "halfline-ode"})
    assert run_main(["run", cfg, "--seed", str(2 ** 64)], capsys)[0] == 2
    assert run_main(["run", cfg, "--threads", "0"], capsys)[0] == 2


def test_run_writes_artifacts(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": "halfline-ode", "seed": 7})
    out = tmp_path / "out"
    code, text, _ = run_main(["run", cfg, "--out", str(out)], capsys)
    assert code == 0 and "PASS" in text
    manifest = json.loads((out / "manifest.json").read_text())
    report = json.loads((out / "report.json").read_text())
    assert manifest["seed"] == 7 and manifest["model"] == SCENARIOS["halfline-ode"].defaults["model"]
    assert report["passed"] and report["tables"]
    for name in report["tables"]:
        assert (out / name).exists()


def test_json_format(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": "nagumo-sweep"})
    out = tmp_path / "out"
    assert run_main(["run", cfg, "--out", str(out), "--format", "json"], capsys)[0] == 0
    report = json.loads((out / "report.json").read_text())
    assert all(t.endswith(".json") for t in report["tables"])
    json.loads((out / report["tables"][0]).read_text())


def test_outputs_independent_of_threads(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": "gbm", "numerics": {"n_paths": 2000, "bound_samples": 2000}})
    outs = []
    for t in (1, 4):
        out = tmp_path / f"t{t}"
        assert run_main(["run", cfg, "--out", str(out), "--threads", str(t)], capsys)[0] == 0
        outs.append(out)
    report = json.loads((outs[0] / "report.json").read_text())
    for name in report["tables"]:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_threads_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    cfg = write(tmp_path, {"scenario": "halfline-ode"})
    out = tmp_path / "out"
    assert run_main(["run", cfg, "--out", str(out)], capsys)[0] == 0
    assert json.loads((out / "report.json").read_text())["threads"] == 3


def test_failed_hard_assertion_exits_one(tmp_path, monkeypatch, capsys):
    def failing(cfg, seed, threads):
        res = ScenarioResult()
        res.assertions.append(Assertion("always fails", False, True, {}))
        return res

    sc = SCENARIOS["halfline-ode"]
    monkeypatch.setitem(SCENARIOS, "halfline-ode", type(sc)(sc.name, sc.description, sc.defaults, failing,
                                                            sc.constraints))
    cfg = write(tmp_path, {"scenario": "halfline-ode"})
    code, text, _ = run_main(["run", cfg, "--out", str(tmp_path / "o")], capsys)
    assert code == 1 and "FAIL" in text


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "spdedist", "list-scenarios"], capture_output=True, text=True)
    assert res.returncode == 0 and "gbm" in res.stdout
