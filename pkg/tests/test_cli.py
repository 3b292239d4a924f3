import json

import pytest

from orbital.cli import main
from orbital.export import read_atoms_csv, read_pgm
from orbital.series import enumerate_series
from orbital.config import load_config

BAD_P = '{"dimension": 1, "maps": [{"kind": "affine1d", "a": 0.5, "b": 0.5}], "map_probs": [1], "p": 0, "mu0": {"kind": "point", "point": [0]}}'

DYADIC_2D = json.dumps(
    {
        "dimension": 2,
        "maps": [
            {"kind": "affine2d", "A": [[0.5, 0], [0, 0.5]], "t": [0, 0]},
            {"kind": "affine2d", "A": [[0.5, 0], [0, 0.5]], "t": [0.5, 0]},
            {"kind": "affine2d", "A": [[0, -0.5], [0.5, 0]], "t": [0.25, 0.5]},
        ],
        "map_probs": [0.25, 0.25, 0.5],
        "p": 0.25,
        "mu0": {"kind": "point", "point": [0.5, 0.5]},
    }
)


def test_validate(capsys, tmp_path):
    assert main(["validate", "exercise.cfg"]) == 0
    path = tmp_path / "bad.cfg"
    path.write_text(BAD_P)
    assert main(["validate", str(path)]) == 1
    assert "p:" in capsys.readouterr().err
    path.write_text(BAD_P.replace('"p": 0', '"p": 1'))
    assert main(["validate", str(path)]) == 0


def test_json_errors(capsys, tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(BAD_P)
    assert main(["validate", str(path), "--json-errors"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "SchemaViolation" and err["violations"][0]["field"] == "p"
    path.write_text("{oops")
    assert main(["validate", str(path), "--json-errors"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ParseError" and err["line"] == 1


def test_runtime_error_exit_code(capsys, tmp_path):
    assert main(["build", "exercise.cfg", "--depth", "3", "--out", str(tmp_path / "missing" / "x.csv")]) == 2
    assert main(["validate", "no-such-file.cfg"]) == 2


def test_build(capsys, tmp_path):
    out = tmp_path / "m.csv"
    assert main(["build", "exercise.cfg", "--depth", "3", "--route", "enum", "--out", str(out)]) == 0
    meta = json.loads(capsys.readouterr().out)
    assert meta["tail_bound"] == 0.0625 and meta["depth"] == 3 and meta["raw_mass"] == 0.9375
    assert meta["route"] == "enumeration"
    assert json.loads((tmp_path / "m.csv.meta.jsonl").read_text()) == meta
    back = read_atoms_csv(out)
    direct = enumerate_series(load_config("exercise").system, 3).measure
    assert back.atoms.tobytes() == direct.atoms.tobytes() and back.weights.tobytes() == direct.weights.tobytes()


def test_build_tol_and_routes(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["build", "exercise.cfg", "--tol", "0.0625", "--route", "enum", "--out", str(a)]) == 0
    assert json.loads(capsys.readouterr().out)["depth"] == 3
    dyadic = tmp_path / "dyadic.cfg"
    dyadic.write_text(DYADIC_2D)
    for name in ("exercise", str(dyadic)):
        main(["build", name, "--depth", "6", "--route", "enum", "--out", str(a)])
        main(["build", name, "--depth", "6", "--route", "neumann", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


def test_verify(capsys):
    assert main(["verify", "exercise.cfg", "--depth", "20"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3


def test_verify_failure_exit(capsys, monkeypatch):
    from orbital import cli
    from orbital.verify import Check

    monkeypatch.setattr(cli, "verify_report", lambda *a, **k: [Check("residual", 1.0, 0.5, False)])
    assert main(["verify", "exercise.cfg"]) == 1
    assert capsys.readouterr().out.startswith("FAIL residual")


def test_sample(capsys, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sample", "exercise.cfg", "--count", "100", "--seed", "3", "--method", "chaos", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x" and len(lines) == 101


def test_study(capsys, tmp_path):
    out, closed = tmp_path / "t.csv", tmp_path / "c.csv"
    assert main(["study-exercise", "exercise.cfg", "--ps", "0.5,0.1,0.01", "--x", "0.9", "--out", str(out), "--closed-out", str(closed)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "p,mass" and len(rows) == 4
    assert abs(float(rows[1].split(",")[1]) - 0.9375) <= 1e-9
    assert closed.read_text().startswith("p,w1_to_one\n")


def test_render(tmp_path):
    out = tmp_path / "f.pgm"
    assert main(["render", "sierpinski-condensation", "--res", "32x16", "--box", "0,1,0,1", "--scale", "log", "--count", "5000", "--out", str(out)]) == 0
    assert read_pgm(out).shape == (16, 32)
    assert main(["render", "exercise", "--out", str(out)]) == 2


def test_presets(capsys):
    assert main(["presets"]) == 0
    assert "exercise.cfg" in capsys.readouterr().out.split()
