import json
import pathlib

import jsonschema
import pytest

from inner_dyn import __version__
from inner_dyn.cli import dumps, run

ROOT = pathlib.Path(__file__).resolve().parents[1]
SPECS = ROOT / "data" / "specs"
SCHEMAS = ROOT / "src" / "inner_dyn" / "schemas"


def spec(name):
    return str(SPECS / f"{name}.json")


def invoke(capsys, *argv):
    code = run([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def validate(command, text):
    doc = json.loads(text)
    schema = json.loads((SCHEMAS / f"{command}.json").read_text())
    jsonschema.validate(doc, schema)
    return doc


JSON_CASES = [
    ("eval", ["--spec", spec("boole"), "--theta", "0.5,0.25", "--z", "0.3+0.2j"]),
    ("dw", ["--spec", spec("shifted_square")]),
    ("clark", ["--spec", spec("doubling"), "--x", "0.5"]),
    ("gap", ["--spec", spec("doubling"), "--b", "4", "--N", "3", "--M", "64"]),
    ("radius", ["--spec", spec("blaschke_half"), "--M", "48"]),
    ("twist", ["--spec", spec("doubling"), "--t", "0,0.5", "--M", "32"]),
    ("clt", ["--spec", spec("doubling"), "--n", "100", "--trials", "2000", "--seed", "7"]),
    ("clt", ["--spec", spec("doubling"), "--n", "8", "--tree-x", "0.37"]),
    ("llt", ["--spec", spec("doubling"), "--n", "100", "--trials", "50000", "--seed", "7"]),
    ("scan", ["--spec", spec("blaschke_half"), "--t-max", "0.5", "--step", "0.25", "--M", "32"]),
    ("construct", ["--measure", spec("clark_quarter")]),
    ("adler", ["--spec", spec("boole"), "--grid", "512"]),
]


@pytest.mark.parametrize("command,args", JSON_CASES, ids=[c + str(i) for i, (c, _) in enumerate(JSON_CASES)])
def test_json_outputs_validate(capsys, command, args):
    code, out, _ = invoke(capsys, command, *args)
    assert code == 0
    doc = validate(command, out)
    h = doc["header"]
    assert h["tool"] == "inner-dyn" and h["version"] == __version__ and h["command"] == command
    assert "threads" not in h["params"]


def test_gap_example(capsys):
    _, out, _ = invoke(capsys, "gap", "--spec", spec("doubling"), "--b", "4", "--N", "3", "--M", "64")
    res = json.loads(out)["result"]
    assert res["measured_norm"][0] == pytest.approx(0.5, abs=1e-12)
    assert all(m <= b for m, b in zip(res["measured_norm"], res["bicycle_bound"]))
    assert set(res) >= {"N", "measured_norm", "bicycle_bound", "wheelchair_fit_rho", "second_eigenvalue_modulus"}


def test_construct_output(capsys):
    _, out, _ = invoke(capsys, "construct", "--measure", spec("clark_quarter"))
    res = json.loads(out)["result"]
    assert res["spec"]["rotation"]["re"] == pytest.approx(-1.0)
    assert res["roundtrip"]["max_error"] < 1e-12


def test_mobius_exit_code(capsys):
    code, out, err = invoke(capsys, "dw", "--spec", spec("mobius"))
    assert code == 2 and out == ""
    assert "Denjoy–Wolff requires non-Möbius" in err


@pytest.mark.parametrize("argv", [
    ["gap", "--spec", spec("mobius"), "--b", "2"],
    ["eval", "--spec", spec("boole"), "--theta", "0.0"],
    ["dw", "--spec", "/nonexistent/spec.json"],
    ["clt", "--spec", spec("doubling"), "--n", "10"],
    ["clt", "--spec", spec("doubling"), "--psi-const", "1", "--psi-cos", "0", "--n", "10", "--trials", "10", "--seed", "1"],
    ["construct", "--measure", spec("doubling")],
])
def test_precondition_exit_codes(capsys, argv):
    code, _, err = invoke(capsys, *argv)
    assert code == 2
    assert "precondition" in err


def test_invalid_spec_reports_line(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "zeros": [\n    {"re": 0.0, "im": 0.0, "mult": 1},\n    {"re": 2.0, "im": 0.0, "mult": 1}\n  ]\n}\n')
    code, _, err = invoke(capsys, "dw", "--spec", bad)
    assert code == 2 and "line 4" in err


def test_numeric_exit_code(capsys):
    code, _, err = invoke(capsys, "clt", "--spec", spec("boole"), "--n", "2", "--tree-x", "0.3")
    assert code == 3 and "numeric failure" in err


def test_seed_required_for_llt():
    with pytest.raises(SystemExit) as info:
        run(["llt", "--spec", spec("doubling"), "--n", "10", "--trials", "10"])
    assert info.value.code == 2


@pytest.mark.parametrize("argv", [
    ["orbit", "--spec", spec("doubling"), "--theta0", "0.142857", "--n", "5"],
    ["matrix", "--spec", spec("doubling"), "--M", "4"],
    ["clark", "--spec", spec("boole"), "--x", "0.5", "--threshold", "1e-4", "--format", "csv"],
    ["scan", "--spec", spec("doubling"), "--t-max", "0.2", "--step", "0.1", "--M", "16", "--format", "csv"],
])
def test_csv_outputs(capsys, argv):
    code, out, _ = invoke(capsys, *argv)
    assert code == 0
    first, header, *rows = out.splitlines()
    assert first.startswith("# ")
    meta = json.loads(first[2:])
    assert meta["command"] == argv[0] and meta["tool"] == "inner-dyn"
    assert "," in header and rows
    width = header.count(",")
    assert all(r.count(",") == width for r in rows)


def test_matrix_csv_rows(capsys):
    _, out, _ = invoke(capsys, "matrix", "--spec", spec("doubling"), "--M", "4")
    rows = out.splitlines()[1:]
    assert rows[0] == "k,l,re,im" and "4,2,1,0" in rows


def test_seventeen_digits():
    text = dumps({"x": 0.1, "y": 1 / 3, "z": float("nan"), "c": 1 + 2j})
    doc = json.loads(text)
    assert doc["x"] == 0.1 and doc["y"] == 1 / 3 and doc["z"] is None
    assert "0.33333333333333331" in text


def test_out_file(tmp_path, capsys):
    out = tmp_path / "dw.json"
    code, stdout, _ = invoke(capsys, "dw", "--spec", spec("boole"), "--out", out)
    assert code == 0 and stdout == ""
    validate("dw", out.read_text())


def test_determinism_across_threads(tmp_path):
    base = ["clt", "--spec", spec("boole"), "--n", "300", "--trials", "20000", "--seed", "7"]
    outs = []
    for threads in (1, 3, 1):
        path = tmp_path / f"clt{threads}_{len(outs)}.json"
        assert run(base + ["--threads", str(threads), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_determinism_python_backend(tmp_path):
    base = ["llt", "--spec", spec("doubling"), "--n", "100", "--trials", "40000", "--seed", "3", "--backend", "python"]
    outs = []
    for threads in (1, 2):
        path = tmp_path / f"llt{threads}.json"
        assert run(base + ["--threads", str(threads), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
