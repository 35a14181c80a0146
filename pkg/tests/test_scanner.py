import json
from fractions import Fraction as F

import pytest

from divstab import functionals as fn
from divstab import io as dio
from divstab import scanner
from divstab.errors import DomainError, SchemaError


def slice_for(model, base, direction, lo, hi, n):
    return scanner.SliceSpec(model.cls(base), (model.cls(direction),), ((F(lo), F(hi)),), (n,))


def f1_slice(f1, n=11):
    return slice_for(f1, [3, 0], [0, -1], F(1, 2), F(3, 2), n)


def test_slice_validation(load):
    f1 = load("f1")
    with pytest.raises(DomainError):
        scanner.SliceSpec(f1.cls([3, 0]), (), (), ())
    with pytest.raises(DomainError):
        slice_for(f1, [3, 0], [0, -1], 2, 1, 3)
    with pytest.raises(DomainError):
        slice_for(f1, [3, 0], [0, -1], 0, 1, 0)


def test_grid_row_major(load):
    f1 = load("f1")
    s = scanner.SliceSpec(f1.cls([3, -1]), (f1.cls([1, 0]), f1.cls([0, 1])), ((0, 1), (0, F(1, 2))), (2, 3))
    g = s.grid()
    assert [i for i, _, _ in g] == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
    assert g[5][2] == f1.cls([4, F(-1, 2)])
    assert s.refined().points == (3, 5)


def test_single_point_scan_matches_direct(load):
    f1 = load("f1")
    cands, desc = fn.candidates_for(f1)
    s = slice_for(f1, [3, -1], [0, 1], 0, 0, 1)
    t = scanner.scan(f1, s, scanner.FUNCTIONALS, cands, desc)
    assert len(t.rows) == 1
    pair = fn.PolarizedPair(f1, f1.cls([3, -1]))
    row = t.rows[0]
    for f in scanner.FUNCTIONALS:
        assert row[f] == scanner._report_cell(getattr(fn, f)(pair, cands, desc))
    assert row["sigma_val"]["value"] == "-1/7"


def test_f1_slice(load):
    f1 = load("f1")
    cands, desc = fn.candidates_for(f1)
    t = scanner.scan(f1, f1_slice(f1), ("sigma_val",), cands, desc)
    assert len(t.rows) == 11 and all(r["status"] == "ok" for r in t.rows)
    vals = [F(r["sigma_val"]["value"]) for r in t.rows]
    assert vals[5] == F(-1, 7)
    assert vals == sorted(vals) or vals == sorted(vals, reverse=True)
    assert float(t.holder["sigma_val"]["alpha=1"]) < float("inf")


def test_outside_cone_cells(load):
    f1 = load("f1")
    t = scanner.scan(f1, slice_for(f1, [3, 0], [0, -1], 0, 3, 4), ("delta",))
    assert [r["status"] for r in t.rows] == ["outside-cone", "ok", "ok", "outside-cone"]


def test_p1_family_sigma_div_zero(load):
    m = load("p1_d1")
    t = scanner.scan(m, slice_for(m, [0], [1], 1, 10, 10), ("delta", "sigma_div"))
    assert [r["sigma_div"]["value"] for r in t.rows] == ["0"] * 10
    assert [F(r["delta"]["value"]) for r in t.rows] == [F(2, d) for d in range(1, 11)]
    assert t.sandwich_violations == []
    assert scanner.openness_extract(t)["region"] == []


def test_determinism_across_workers(load):
    f1 = load("f1")
    cands, desc = fn.candidates_for(f1)
    a = scanner.scan(f1, f1_slice(f1, 5), scanner.FUNCTIONALS, cands, desc, jobs=1)
    b = scanner.scan(f1, f1_slice(f1, 5), scanner.FUNCTIONALS, cands, desc, jobs=3)
    assert dio.dumps(a.to_json()) == dio.dumps(b.to_json())
    assert a.to_csv() == b.to_csv()


def test_refinement_embeds(load):
    f1 = load("f1")
    cands, desc = fn.candidates_for(f1)
    s = f1_slice(f1, 3)
    a = scanner.scan(f1, s, ("sigma_val",), cands, desc)
    b = scanner.scan(f1, s.refined(), ("sigma_val",), cands, desc)
    assert scanner.embeds(a, b) == []
    b.rows[2]["sigma_val"]["value"] = "99"
    assert scanner.embeds(a, b) == [[1]]


def test_openness_genus2_full_region(load):
    g2 = load("genus2")
    t = scanner.scan(g2, slice_for(g2, [0], [1], 1, 4, 4), ("sigma_div",))
    out = scanner.openness_extract(t)
    assert out["region"] == [[i] for i in range(4)]
    assert out["refinement_failures"] == [] and out["label"] == "exact-on-set"


def test_openness_f1_excludes_anticanonical(load):
    f1 = load("f1")
    cands, desc = fn.candidates_for(f1)
    t = scanner.scan(f1, f1_slice(f1, 5), ("sigma_div",), cands, desc)
    out = scanner.openness_extract(t)
    assert [2] not in out["region"]


def test_csv_and_plot_data(load):
    f1 = load("f1")
    t = scanner.scan(f1, f1_slice(f1, 3), ("sigma_val",))
    lines = t.to_csv().splitlines()
    assert lines[0].startswith("index,params,omega,status,V,sigma_val")
    assert len(lines) == 4
    pts = t.plot_data("sigma_val").split("\n")
    assert len([p for p in pts if p]) == 3
    x, y, v = map(float, pts[1].split())
    assert (x, y) == (1.0, 0.0) and v == pytest.approx(-1 / 7)
    json.loads(dio.dumps(t.to_json()))


def test_validation_suite_p1_passes(load):
    L = scanner.validation_suite(fn.PolarizedPair(load("p1"), load("p1").default_omega()), samples=40,
                                 pair_samples=20)
    assert L.passed, [e for e in L.entries if not e["passed"]]
    assert len(L.entries) >= 10


def test_corrupted_gram_rejected_at_load():
    d = json.loads((dio.corpus_dir() / "models" / "f1.json").read_text())
    d["gram"] = [["1", "0"], ["0", "1"]]
    with pytest.raises(SchemaError, match="signature"):
        dio.model_from_dict(d)
