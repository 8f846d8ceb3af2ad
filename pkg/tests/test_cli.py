import csv
import io
import json

import numpy as np
import pytest

from convexproj.benzecri import BenzecriChart
from convexproj.charfn import CharEval
from convexproj.cli import main
from convexproj.cusps import ConvexityCertificate, CuspFamily, CuspRep, DeformReport, alpha_path
from convexproj.serialize import SCHEMA, dumps
from convexproj.smoothing import PatchResult


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    paths = {}

    def put(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        paths[name] = p

    put("triangle.json", {"vertices": [[0, 0], [1, 0], [0, 1]]})
    put("cone.json", {"schema": SCHEMA, "generators": [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, -0.5]]})
    put("pts.json", [[1, 1, 1], [1, 2, 0.5], [2, 1, 1]])
    xs = np.linspace(-1, 1, 11)
    grid = np.array([(a, b) for a in xs for b in xs if a * a + b * b <= 1])
    ang = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    pts = np.vstack([grid, np.c_[np.cos(ang), np.sin(ang)]])
    put("patch.json", {"points": pts.tolist(), "heights": np.maximum(1 - (pts**2).sum(1), 0).tolist()})
    p = tmp_path / "path.json"
    p.write_text(dumps(alpha_path().to_json()))
    paths["path.json"] = p
    put("rep.json", CuspFamily("C3", 1.0, 2.0).lattice().to_json())
    put("old.json", {"schema": "convexproj/0", "vertices": [[0, 0], [1, 0], [0, 1]]})
    (tmp_path / "broken.json").write_text("{not json")
    paths["broken.json"] = tmp_path / "broken.json"
    paths["dir"] = tmp_path
    return paths


def test_normalize_triangle(capsys, files):
    code, out, _ = run(capsys, "normalize", "--body", files["triangle.json"], "--point", "[0.1,0.1]")
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == SCHEMA and data["verified"]
    chart = BenzecriChart.from_json(data)
    assert chart.R_achieved <= 5.0 and chart.tau.shape == (3, 3)


def test_charfn_records_round_trip(capsys, files):
    code, out, _ = run(capsys, "charfn", "--cone", files["cone.json"], "--points", files["pts.json"], "--kappa", 50)
    assert code == 0
    data = json.loads(out)
    recs = [CharEval.from_json(r) for r in data["records"]]
    assert len(recs) == 3
    x = recs[0].x
    assert abs(recs[0].grad_c @ x + 1) <= 1e-9
    assert data["kappa"]["kappa_hat"] > 0


def test_charfn_csv_columns(capsys, files):
    code, out, _ = run(capsys, "charfn", "--cone", files["cone.json"], "--points", files["pts.json"], "--csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["x0", "x1", "x2", "chi", "c", "min_eig_hess"]
    assert len(rows) == 4 and all(float(v) > 0 for v in (rows[1][3], rows[1][5]))


def test_smooth_round_trip(capsys, files):
    code, out, _ = run(capsys, "smooth", "--patch", files["patch.json"], "--kappa", 0.5)
    assert code == 0
    res = PatchResult.from_json(json.loads(out))
    assert np.all(res.smoothed <= res.heights + 1e-12)
    assert np.all(res.smoothed >= 0)


def test_cusp_family_and_rep_agree(capsys, files):
    code, out_family, _ = run(capsys, "cusp", "--family", "C3", "--alpha", 1, "--beta", 2)
    assert code == 0
    code, out_rep, _ = run(capsys, "cusp", "--rep", files["rep.json"])
    assert code == 0
    a, b = json.loads(out_family), json.loads(out_rep)
    assert CuspFamily.from_json(a["family"]) == CuspFamily("C3", 1.0, 2.0)
    assert a["certificate"] == b["certificate"]
    rep = CuspRep.from_json(a["rep"])
    assert rep.dim == 3 and len(rep.generators) == 2
    cert = ConvexityCertificate.from_json(a["certificate"])
    assert cert.verdict == "strictly_convex"
    assert a["translation_group"]["dim_T"] == 2 and a["flow"]["kind"] == "hyperbolic"


def test_cusp_domain_option(capsys):
    code, out, _ = run(capsys, "cusp", "--family", "C0", "--domain", "--grid=-1,1,5")
    assert code == 0
    dom = json.loads(out)["domain"]
    assert len(dom["boundary_samples"]) == 25 and dom["invariance_residual"] <= 1e-8


def test_deform_report(capsys, files):
    out_path = files["dir"] / "report.json"
    code, out, _ = run(capsys, "deform", "--path", files["path.json"], "--samples", 11, "--out", out_path)
    assert code == 0 and out == ""
    report = DeformReport.from_json(json.loads(out_path.read_text()))
    ts = [s.t for s in report.samples]
    assert len(ts) == 11 and np.all(np.diff(ts) > 0)
    assert all(s.ok for s in report.samples)


def test_deform_csv(capsys, files):
    code, out, _ = run(capsys, "deform", "--path", files["path.json"], "--samples", 3, "--csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "stage_reached", "min_eig_Q", "hausdorff_delta"]
    assert [r[1] for r in rows[1:]] == ["complete"] * 3


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest")
    data = json.loads(out)
    assert code == 0 and data["ok"]
    assert [c["name"] for c in data["checks"]] == [
        "exp_log", "benzecri", "charfn", "smoothing", "hilbert", "cusps", "deform"
    ]


@pytest.mark.parametrize(
    "argv",
    [
        ("normalize", "--body", "triangle.json", "--point", "[0.1,0.1]"),
        ("charfn", "--cone", "cone.json", "--points", "pts.json", "--kappa", "30", "--seed", "7"),
        ("cusp", "--family", "C3", "--alpha", "1", "--beta", "2"),
    ],
)
def test_output_is_byte_deterministic(capsys, files, argv):
    argv = [str(files[a]) if a in files else a for a in argv]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second and first[0] == 0


def test_seed_changes_kappa_estimate(capsys, files):
    base = ("charfn", "--cone", files["cone.json"], "--points", files["pts.json"], "--kappa", 30)
    a = json.loads(run(capsys, *base, "--seed", 1)[1])["kappa"]["kappa_hat"]
    b = json.loads(run(capsys, *base, "--seed", 2)[1])["kappa"]["kappa_hat"]
    assert a != b


def test_domain_error_exit_1(capsys):
    code, out, err = run(capsys, "cusp", "--family", "C3", "--alpha", -1, "--beta", 2)
    assert code == 1 and out == ""
    data = json.loads(err)
    assert data["schema"] == SCHEMA and data["type"] == "BadParams"


def test_exterior_point_is_domain_error(capsys, files):
    code, _, err = run(capsys, "normalize", "--body", files["triangle.json"], "--point", "[2,2]")
    assert code == 1 and json.loads(err)["error"]


@pytest.mark.parametrize(
    "argv",
    [
        ("normalize", "--body", "missing.json", "--point", "[0,0]"),
        ("normalize", "--body", "broken.json", "--point", "[0.1,0.1]"),
        ("normalize", "--body", "old.json", "--point", "[0.1,0.1]"),
        ("normalize", "--body", "triangle.json", "--point", "[0.1]"),
        ("normalize", "--body", "triangle.json", "--point", "oops"),
        ("charfn", "--cone", "cone.json", "--points", "triangle.json"),
        ("cusp", "--alpha", "1"),
        ("cusp", "--family", "C0", "--grid", "1,2"),
        ("cusp", "--family", "C0", "--grid", "2,1,5"),
    ],
)
def test_input_errors_exit_2(capsys, files, argv):
    argv = [str(files[a]) if a in files else (str(files["dir"] / a) if a.endswith(".json") else a) for a in argv]
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert json.loads(err)["type"] == "InputError"


@pytest.mark.parametrize("argv", [("selftest", "--bogus"), ("frobnicate",), ("smooth",)])
def test_bad_flags_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(list(argv))
    assert exc.value.code == 2
