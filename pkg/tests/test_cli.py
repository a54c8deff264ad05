import csv
import json

import pytest

from wedge_edge.cli import main
from wedge_edge.polynomial import MultiPoly


def run(tmp_path, name, argv, config=None):
    out = tmp_path / name
    args = list(argv) + ["--out", str(out)]
    if config is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    return main(args), out


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_constants_table(tmp_path):
    code, out = run(tmp_path, "c", ["constants"], {"n": 2, "p": 0.5, "d_max": 10})
    assert code == 0
    rows = read_csv(out / "constants.csv")
    assert len(rows) == 11
    assert [int(r["d"]) for r in rows] == list(range(11))


def test_zoo_grid_from_config(tmp_path):
    code, out = run(tmp_path, "z", ["zoo"], {"name": "geom", "t": 4, "grid": 50})
    assert code == 0
    rows = read_csv(out / "zoo_geom.csv")
    assert len(rows) == 2500
    # the singular curve zw = 1/4 shows as large values
    big = [r for r in rows if float(r["abs_f"]) > 20]
    assert big and all(abs(4 * float(r["z"]) * float(r["w"]) - 1) < 0.2 for r in big)


def test_zoo_listing(tmp_path):
    code, out = run(tmp_path, "zl", ["zoo"])
    assert code == 0
    names = [row["name"] for row in json.loads((out / "zoo.json").read_text())]
    assert names == sorted(names) and "geom" in names


def test_sqrt_is_hypothesis_failure(tmp_path, capsys):
    code, out = run(tmp_path, "s", ["reconstruct", "--function", "sqrt"])
    assert code == 2
    assert "overlap measure 0" in capsys.readouterr().err
    assert json.loads((out / "failure.json").read_text())["error"] == "OverlapFailure"


def test_pole_is_hypothesis_failure(tmp_path):
    cfg = {"function": "geom", "params": {"t": 4}, "wedge": {"kind": "box", "side": 2.0, "nvars": 2, "ball": 0.45},
           "D": 24}
    code, out = run(tmp_path, "p", ["radius"], cfg)
    assert code == 2
    assert json.loads((out / "failure.json").read_text())["error"] == "NoFiniteN0"


def test_misspelled_key(tmp_path, capsys):
    code, _ = run(tmp_path, "m", ["constants"], {"n": 2, "pp": 0.5})
    assert code == 1
    assert "'pp'" in capsys.readouterr().err


def test_misspelled_wedge_key(tmp_path, capsys):
    code, _ = run(tmp_path, "w", ["wedge-check"], {"wedge": {"kind": "box", "sides": 1}})
    assert code == 1
    assert "'sides'" in capsys.readouterr().err


def test_unknown_flag_is_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["constants", "--bogus", "1"])
    assert exc.value.code == 1


def test_invalid_measure_is_error(tmp_path):
    code, _ = run(tmp_path, "bad", ["constants", "--p", "0"])
    assert code == 1


def test_reconstruct_outputs(tmp_path):
    code, out = run(tmp_path, "r", ["reconstruct", "--function", "geom", "--params", '{"t": 4}'])
    assert code == 0
    res = json.loads((out / "reconstruct.json").read_text())
    assert res["fitted_C"] == pytest.approx(2, rel=0.1)
    assert len(read_csv(out / "l1_bounds.csv")) == 25


def test_serialized_polynomial(tmp_path):
    x, y = MultiPoly.variables(2)
    poly = (1 + x * y - 2 * y**2).to_dict()
    code, out = run(tmp_path, "poly", ["reconstruct"], {"function": "poly", "poly": poly, "D": 6})
    assert code == 0
    bounds = [float(r["l1_bound"]) for r in read_csv(out / "l1_bounds.csv")]
    assert bounds[:3] == pytest.approx([1, 0, 3], abs=1e-9)


def test_polyhedral_wedge_check(tmp_path):
    wedge = {"kind": "polyhedral", "halfspaces": [[1, 0], [0, 1], [3, -1]], "one": [1, 1], "samples": 20000}
    code, out = run(tmp_path, "wc", ["wedge-check"], {"wedge": wedge})
    assert code == 0
    assert json.loads((out / "wedge_check.json").read_text())["starlike"]


def test_sweep(tmp_path):
    code, out = run(tmp_path, "sw", ["sweep", "--function", "exp", "--scales", "1,2,4"])
    assert code == 0
    radii = [float(r["radius"]) for r in read_csv(out / "sweep.csv")]
    assert radii[1] / radii[0] == pytest.approx(2, rel=0.2)


COMMANDS = [
    ["constants", "--n", "3", "--p", "0.4", "--d-max", "8"],
    ["zoo", "--name", "onevar", "--grid", "40"],
    ["zoo"],
    ["reconstruct", "--function", "geom", "--params", '{"t": 16}'],
    ["radius", "--function", "onevar"],
    ["wedge-check", "--wedge", '{"kind": "hermitian", "m": 2, "samples": 20000}'],
    ["sweep", "--function", "exp"],
    ["reconstruct", "--function", "sqrt"],
]


@pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: a[0] + ("-" + a[2] if len(a) > 2 else ""))
def test_byte_identical_runs(tmp_path, argv):
    seeded = argv[0] not in ("constants", "zoo")
    extra = ["--seed", "11"] if seeded else []
    code_a, a = run(tmp_path, "a", argv + extra)
    code_b, b = run(tmp_path, "b", argv + extra + (["--workers", "4"] if seeded else []))
    assert code_a == code_b
    files_a = sorted(p.name for p in a.iterdir())
    assert files_a == sorted(p.name for p in b.iterdir())
    for name in files_a:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
