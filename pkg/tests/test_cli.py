import csv
import io
import json

import pytest
from click.testing import CliRunner

from catnet.cli import main
from catnet.verify import CSV_HEADER

INLINE_CATALOG = {
    "kappa": [1, 7, 0, 1], "threshold": 1.0,
    "functions": [{"id": "id", "kind": "id"},
                  {"id": "pwl:f", "kind": "pwl", "function": "abs", "lipschitz": 1.0, "radius": 1.0}],
}
SPEC = {"layers": [
    {"matrix": [[1, 0], [0, 1]], "bias": [0, 0], "funcs": ["pwl:f", "pwl:f"]},
    {"matrix": [[1, 1]], "bias": [0], "funcs": ["id"]},
]}


@pytest.fixture
def runner():
    return CliRunner()


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def compiled(runner, tmp_path):
    out = tmp_path / "net.json"
    res = runner.invoke(main, ["compile", "--preset", "sum_lipschitz", "--d", "3", "--epsilon", "0.5",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    return out


def test_compile_preset_within_bound(compiled):
    doc = json.loads(compiled.read_text())
    assert doc["certificate"]["params_actual"] <= 277715
    assert set(doc["certificate"]["quantities"]) == {"D", "W", "L", "B", "Lambda"}


def test_verify_fresh_compile(runner, compiled):
    res = runner.invoke(main, ["verify", str(compiled)])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["passed"]


@pytest.mark.parametrize("field,factor", [("epsilon", 0.1), ("lipschitz", 0.5)])
def test_tampered_certificate_exits_3(runner, compiled, tmp_path, field, factor):
    doc = json.loads(compiled.read_text())
    doc["certificate"][field] *= factor
    res = runner.invoke(main, ["verify", _write(tmp_path / "bad.json", doc)])
    assert res.exit_code == 3


def test_verify_is_byte_deterministic(runner, compiled):
    args = ["verify", str(compiled), "--samples", "20000", "--seed", "7", "--format", "csv"]
    a = runner.invoke(main, args).output.splitlines()
    b = runner.invoke(main, args).output.splitlines()
    assert a[0] == ",".join(CSV_HEADER)
    strip = lambda rows: [r.rsplit(",", 1)[0] for r in rows]
    assert strip(a) == strip(b)


def test_compile_output_is_byte_deterministic(runner, tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        runner.invoke(main, ["compile", "--preset", "max_chain", "--d", "2", "--epsilon", "0.5",
                             "--out", str(tmp_path / name)])
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]


def test_compile_from_spec(runner, tmp_path):
    spec = _write(tmp_path / "xi.json", SPEC)
    cat = _write(tmp_path / "cat.json", INLINE_CATALOG)
    res = runner.invoke(main, ["compile", "--spec", spec, "--catalog", cat, "--epsilon", "0.1",
                               "--out", str(tmp_path / "o.json")])
    assert res.exit_code == 0, res.output
    assert "params" in res.output
    res = runner.invoke(main, ["verify", str(tmp_path / "o.json")])
    assert res.exit_code == 0, res.output


def test_malformed_json_exits_1(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"layers": [')
    res = runner.invoke(main, ["compile", "--spec", str(bad), "--catalog", str(bad), "--epsilon", "0.1"])
    assert res.exit_code == 1
    assert "invalid JSON" in res.output
    assert runner.invoke(main, ["verify", str(tmp_path / "missing.json")]).exit_code == 1


def test_usage_errors_exit_2(runner, tmp_path):
    assert runner.invoke(main, ["bench", "--preset", "sum_lipschitz", "--d", "1"]).exit_code == 2
    assert runner.invoke(main, ["compile", "--preset", "gaussian_rbf", "--d", "2",
                                "--epsilon", "0.5"]).exit_code == 2
    assert runner.invoke(main, ["compile", "--epsilon", "0.5"]).exit_code == 2
    assert runner.invoke(main, ["compile", "--preset", "ridge", "--d", "2", "--epsilon", "0.5",
                                "--param", "S"]).exit_code == 2


def test_bench_rows(runner):
    res = runner.invoke(main, ["bench", "--preset", "sum_lipschitz", "--d", "1", "--d", "2",
                               "--epsilon", "0.5", "--epsilon", "0.25"])
    assert res.exit_code == 0, res.output
    rows = list(csv.DictReader(io.StringIO(res.output)))
    assert len(rows) == 4
    assert all(int(r["params_actual"]) <= float(r["prop_bound"]) for r in rows)


def test_check_catalog(runner, tmp_path):
    good = _write(tmp_path / "c.json", INLINE_CATALOG)
    assert runner.invoke(main, ["check-catalog", "--catalog", good]).exit_code == 0
    halved = json.loads(json.dumps(INLINE_CATALOG))
    halved["functions"][1]["lipschitz"] = 0.5
    assert runner.invoke(main, ["check-catalog", "--catalog", _write(tmp_path / "h.json", halved)]).exit_code == 3
    res = runner.invoke(main, ["check-catalog", "--preset-catalog", "lip", "--param", "K=2", "--param", "r=1"])
    assert res.exit_code == 0, res.output


def test_thread_setting_is_validated(runner, monkeypatch):
    monkeypatch.setenv("CATNET_THREADS", "many")
    res = runner.invoke(main, ["compile", "--preset", "sum_lipschitz", "--d", "1", "--epsilon", "0.5"])
    assert res.exit_code == 2
    monkeypatch.setenv("CATNET_THREADS", "2")
    res = runner.invoke(main, ["compile", "--preset", "sum_lipschitz", "--d", "2", "--epsilon", "0.5"])
    assert res.exit_code == 0
