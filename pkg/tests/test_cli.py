import csv
import io
import json

import pytest

from volprod.cli import BodyParseError, load_body, main, parse_body, report_csv
from volprod.polytope import VPolytope
from volprod.polytope import volume as polytope_volume
from volprod.starbody import LpBall

TS = "2000-01-01T00:00:00+00:00"


def run(argv, capsys, timestamp=TS):
    code = main(argv, timestamp=timestamp)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_verify_so_diamond_passes(capsys):
    code, out, _ = run(["verify", "--group", "so-diamond", "--dim", "3", "--samples", "50", "--seed", "1"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["summary"] == {"total": 50, "passed": 50, "failed": 0}


def test_verify_so_simplex_dim2(capsys):
    code, out, _ = run(["verify", "--group", "so-simplex", "--dim", "2", "--samples", "20"], capsys)
    assert code == 0
    assert json.loads(out)["seed"] == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--group", "bogus"],
        ["verify"],
        ["verify", "--group", "so-diamond", "--dim", "7"],
        ["volprod"],
        ["nonsense"],
        ["volprod", "--body", "does-not-exist.json"],
        ["volprod", "--body", "dodecahedron"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert err


def test_failing_verify_exits_1(capsys):
    # an impossible margin tolerance makes every check fail
    code, out, _ = run(["verify", "--group", "so-diamond", "--samples", "2", "--tol", "-100"], capsys)
    assert code == 1
    assert json.loads(out)["summary"]["failed"] == 2


def test_volprod_cube(capsys, tmp_path):
    body = write(tmp_path, "cube3.json", {"kind": "vpolytope", "vertices": VPolytope(
        [[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)]).vertices.tolist()})
    code, out, _ = run(["volprod", "--body", body], capsys)
    rec = json.loads(out)["records"][0]
    assert code == 0
    assert rec["values"]["product"] == pytest.approx(32 / 3, rel=1e-9)
    assert rec["pass"]


def test_volprod_assert_fails_below_bound(capsys):
    # the simplex product lies below the symmetric bound
    code, _, _ = run(["volprod", "--body", "simplex", "--assert"], capsys)
    assert code == 1
    code, _, _ = run(["volprod", "--body", "simplex", "--bound", "simplex", "--assert"], capsys)
    assert code == 0


def test_santalo_of_shifted_cube(capsys, tmp_path):
    verts = [[x + 0.25, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)]
    body = write(tmp_path, "shifted.json", {"kind": "vpolytope", "vertices": verts})
    code, out, _ = run(["santalo", "--body", body], capsys)
    point = json.loads(out)["records"][0]["values"]["santalo_point"]
    assert point == pytest.approx([0.25, 0.0, 0.0], abs=1e-7)


def test_capacity_cube_cross(capsys, tmp_path):
    code, out, _ = run(["capacity", "--k", "cube", "--t", "cross", "--chain", "--assert"], capsys)
    assert code == 0
    recs = json.loads(out)["records"]
    assert recs[0]["values"]["c_hz"] == pytest.approx(4.0, abs=1e-9)
    assert recs[0]["values"]["viterbo_lhs"] == pytest.approx(recs[0]["values"]["viterbo_rhs"], rel=1e-9)
    assert [r["name"] for r in recs[1:]] == ["chain-bipolar-inradius", "chain-mahler-bound", "chain-viterbo"]


def test_capacity_asymmetric_exits_1(capsys):
    code, _, err = run(["capacity", "--k", "simplex", "--t", "cube"], capsys)
    assert code == 1
    assert "NotCentrallySymmetric" in err


@pytest.mark.parametrize("check", ["patch", "estimate", "duality", "bf", "chain"])
def test_signed_checks_on_ball(check, capsys, tmp_path):
    body = write(tmp_path, "ball3.json", {"kind": "lp_ball", "p": 2, "dim": 3})
    code, out, _ = run(["signed", "--body", body, "--check", check, "--assert"], capsys)
    report = json.loads(out)
    assert code == 0
    assert report["summary"]["failed"] == 0


def test_signed_estimate_records(capsys):
    code, out, _ = run(["signed", "--body", "ball", "--check", "estimate"], capsys)
    recs = json.loads(out)["records"]
    assert all(r["name"] == "signed-volume-estimate" for r in recs)
    assert recs[0]["values"]["lhs"] == 0.0


def test_bodies_lists_shorthands(capsys):
    code, out, _ = run(["bodies"], capsys)
    names = [r["values"]["name"] for r in json.loads(out)["records"]]
    assert code == 0
    assert names == ["cube", "cross", "simplex", "ball", "lp:p"]


def test_out_and_csv_files(capsys, tmp_path):
    out_path, csv_path = tmp_path / "r.json", tmp_path / "r.csv"
    code, out, _ = run(["verify", "--group", "so-diamond", "--samples", "3", "--out", str(out_path),
                        "--csv", str(csv_path)], capsys)
    assert code == 0
    assert "3/3 checks passed" in out
    report = json.loads(out_path.read_text())
    rows = list(csv.DictReader(io.StringIO(csv_path.read_text())))
    assert len(rows) == report["summary"]["total"] == 3
    assert rows[0]["name"] == "mahler-diamond-bound"
    assert float(rows[1]["values.product"]) == report["records"][1]["values"]["product"]
    assert report_csv(report) == csv_path.read_text()


def test_report_field_order(capsys):
    _, out, _ = run(["bodies"], capsys)
    assert list(json.loads(out)) == ["command", "seed", "tolerances", "records", "summary", "timestamp"]


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--group", "so-simplex", "--samples", "5", "--seed", "4"],
        ["signed", "--body", "lp:3", "--check", "duality"],
        ["capacity", "--k", "cube", "--t", "cross", "--chain"],
    ],
)
def test_reports_are_deterministic(argv, capsys):
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    assert first == second


def test_timestamp_is_the_only_difference(capsys):
    _, a, _ = run(["bodies"], capsys, timestamp="2000-01-01T00:00:00+00:00")
    _, b, _ = run(["bodies"], capsys, timestamp="2020-06-01T12:00:00+00:00")
    ra, rb = json.loads(a), json.loads(b)
    assert ra.pop("timestamp") != rb.pop("timestamp")
    assert ra == rb


def test_tolerance_profile_env(capsys, monkeypatch):
    monkeypatch.setenv("VOLPROD_TOLERANCE_PROFILE", "fast")
    _, out, _ = run(["bodies"], capsys)
    assert json.loads(out)["tolerances"]["tol_quad"] == 1e-3
    monkeypatch.setenv("VOLPROD_TOLERANCE_PROFILE", "nope")
    code, _, _ = run(["bodies"], capsys)
    assert code == 2


def test_parse_body_kinds():
    cube_v = [[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)]
    assert polytope_volume(parse_body({"kind": "vpolytope", "vertices": cube_v})) == pytest.approx(8.0)
    rows = [[1, 0, 0, 1], [-1, 0, 0, 1], [0, 1, 0, 1], [0, -1, 0, 1], [0, 0, 1, 1], [0, 0, -1, 1]]
    assert polytope_volume(parse_body({"kind": "hpolytope", "halfspaces": rows})) == pytest.approx(8.0)
    dict_rows = [{"normal": r[:3], "offset": r[3]} for r in rows]
    assert polytope_volume(parse_body({"kind": "hpolytope", "halfspaces": dict_rows})) == pytest.approx(8.0)
    lp = parse_body({"kind": "lp_ball", "p": 3, "dim": 3})
    assert isinstance(lp, LpBall) and lp.p == 3
    pert = parse_body({"kind": "perturbed", "base": "ball", "eps": 0.05, "group": "so-diamond", "seed": 1, "dim": 3})
    assert pert.dim == 3
    hull = parse_body({"kind": "orbit_hull", "points": [[1, 0, 0]], "group": "o-diamond"})
    assert polytope_volume(hull) == pytest.approx(4 / 3)


@pytest.mark.parametrize(
    "record",
    [
        {"vertices": [[0, 0]]},
        {"kind": "vpolytope", "vertices": [[0, 0], [1, 1], [2, 2]]},
        {"kind": "vpolytope", "vertices": [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 0]], "dim": 2},
        {"kind": "lp_ball", "p": 3},
        {"kind": "lp_ball", "p": 0.5, "dim": 3},
        {"kind": "orbit_hull", "points": [[1, 0, 0]], "group": "bogus"},
        {"kind": "perturbed", "base": "ball", "eps": 5.0, "dim": 3},
        {"kind": "hpolytope", "halfspaces": [{"normal": [1, 0]}]},
        {"kind": "torus"},
    ],
)
def test_parse_body_rejects(record):
    with pytest.raises(BodyParseError):
        parse_body(record)


def test_load_body_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(BodyParseError):
        load_body(str(path))


def test_shorthands():
    assert load_body("cube", 4).dim == 4
    assert load_body("lp:2.5").p == 2.5
    with pytest.raises(BodyParseError):
        load_body("lp:abc")


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "volprod.cli", "volprod", "--body", "cube", "--out",
                           str(tmp_path / "r.json")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads((tmp_path / "r.json").read_text())["records"][0]["values"]["product"] == pytest.approx(32 / 3)
