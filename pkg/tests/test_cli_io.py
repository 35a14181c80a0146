import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from divstab import cli
from divstab import functionals as fn
from divstab import io as dio
from divstab.errors import SchemaError

MODELS = sorted(p.stem for p in (dio.corpus_dir() / "models").iterdir() if p.name.endswith(".json"))


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", MODELS)
def test_round_trip(name):
    m = dio.load_model(name)
    d = dio.serialize(m)
    m2 = dio.model_from_dict(json.loads(json.dumps(d)))
    assert dio.serialize(m2) == d
    assert dio.model_hash(m2) == dio.model_hash(m)
    assert dio.model_hash(m).startswith("sha256:")


def test_hash_distinguishes_models():
    hashes = {dio.model_hash(dio.load_model(n)) for n in MODELS}
    assert len(hashes) == len(MODELS)


def test_load_examples():
    p1 = dio.load_model("p1")
    assert p1.kind == "curve" and p1.genus == 0
    f1 = dio.load_model("f1")
    assert f1.kind == "surface" and f1.names == ["H", "E"]
    t = dio.load_model("p2_toric")
    assert t.kind == "toric" and t.dim == 2


@pytest.mark.parametrize("bad,match", [
    ({"kind": "curve", "genus": -1, "V": 1}, "schema violation"),
    ({"kind": "curve", "genus": 0, "V": "1/0x"}, "schema violation"),
    ({"kind": "blob"}, "kind"),
    ({"kind": "curve", "genus": 0, "V": 1, "points": [{"id": "p", "b": 0}, {"id": "p", "b": 0}]}, "duplicate"),
    ({"kind": "toric", "n": 2, "rays": [[2, 0], [0, 1], [-1, -1]], "max_cones": [[0, 1], [1, 2], [2, 0]]},
     "not primitive"),
])
def test_schema_errors(bad, match):
    with pytest.raises(SchemaError, match=match):
        dio.model_from_dict(bad)


def test_bad_paths(tmp_path):
    with pytest.raises(SchemaError):
        dio.load_model("no_such_model")
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(SchemaError, match="not valid JSON"):
        dio.load_model(str(p))


def test_cli_beta(capsys):
    code, out, _ = run(capsys, "beta", "--job", "ordE_antican.json")
    assert code == 0
    d = json.loads(out)
    assert d["result"]["value"] == "-1/6"
    assert d["result"]["routes"] == {"derivative": "-1/6", "proportional": "-1/6"}
    assert d["assumption"]


def test_cli_sigma_val(capsys):
    code, out, _ = run(capsys, "sigma-val", "--model", "f1", "--radius", "2")
    assert code == 0
    r = json.loads(out)["result"]
    assert F(r["value"]["exact"]) < 0 and r["witness"]["divisor"] == "E"


def test_cli_delta_toric(capsys):
    code, out, _ = run(capsys, "delta", "--job", "p2_toric_delta")
    r = json.loads(out)["result"]
    assert code == 0 and r["value"]["exact"] == "1" and r["bound_kind"] == "exact-on-set"


def test_cli_norm_and_curve_commands(capsys):
    code, out, _ = run(capsys, "norm", "--job", "p1_ordp")
    r = json.loads(out)["result"]
    assert code == 0 and r["log_discrepancy"]["exact"] == "3" and r["energy"]["exact"] == "6"
    for cmd in ("energy", "ding", "mabuchi"):
        code, out, _ = run(capsys, cmd, "--job", "p1_potential")
        assert code == 0, cmd
    code, out, _ = run(capsys, "norm", "--job", "p1_mu_sigma5")
    r = json.loads(out)["result"]
    assert r["energy"]["exact"] == "1/10"
    assert r["entropy"]["exact"] == "1"


def test_cli_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--model", "p1")
    assert code == 0 and json.loads(out)["result"]["passed"]


def test_exit_codes(capsys, monkeypatch, tmp_path):
    assert run(capsys, "energy", "--model", "p1")[0] == 2  # no potential in job
    job = tmp_path / "j.json"
    job.write_text(json.dumps({"model": "f1", "potential": {"c": "0"}}))
    code, _, err = run(capsys, "energy", "--job", str(job))
    assert code == 1 and "curve" in err
    assert run(capsys, "beta", "--model", "missing_model")[0] == 2
    assert run(capsys, "beta", "--model", "p1_sublc_violation", "--format", "csv")[0] == 2
    orig = fn.beta_dirac

    def broken(pair, v, both=False):
        b1, b2 = orig(pair, v, both=True)
        from divstab.errors import ConsistencyError
        raise ConsistencyError(f"routes disagree: {b1} vs {b2 + 1}")
    monkeypatch.setattr(fn, "beta_dirac", broken)
    code, _, err = run(capsys, "beta", "--job", "ordE_antican")
    assert code == 3 and "consistency" in err


def test_scan_outputs(capsys, tmp_path):
    out = tmp_path / "scan.csv"
    plot = tmp_path / "plot.txt"
    code, _, _ = run(capsys, "scan", "--job", "f1_slice", "--format", "csv", "--out", str(out),
                     "--plot-data", str(plot))
    assert code == 0
    assert len(out.read_text().splitlines()) == 12
    assert len(plot.read_text().split("\n")) == 12
    code, _, _ = run(capsys, "scan", "--job", "p1_family", "--output-dir", str(tmp_path / "o"))
    d = json.loads((tmp_path / "o" / "scan.json").read_text())
    assert code == 0 and "timestamp" not in d["meta"]


def test_entry_point():
    r = subprocess.run([sys.executable, "-m", "divstab.cli", "delta", "--model", "p1_d2"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["result"]["value"]["exact"] == "1"
