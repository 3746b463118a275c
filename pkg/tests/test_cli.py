import csv
import io
import json
import subprocess
import sys

import pytest

from paradoxrand.cli import COLUMNS, main, to_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_columns_and_rows(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "hardy", "--min", "0", "--max", "0.09", "--points", "4", "--workers", "1")
    assert code == 0
    assert out.splitlines()[0] == ",".join(COLUMNS)
    rs = rows(out)
    assert len(rs) == 4 and [float(r["param"]) for r in rs] == [0.0, 0.03, 0.06, 0.09]
    assert all(r["status"] == "Optimal" and r["level"] == "1+AB" and r["qubit_lower"] == "" for r in rs)


def test_sweep_hardy_example(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "hardy", "--min", "0", "--max", "0.09017", "--points", "25")
    rs = rows(out)
    assert code == 0 and len(rs) == 25
    assert float(rs[-1]["h_min"]) == pytest.approx(1.35, abs=0.02)


def test_sweep_cabello_example(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "cabello", "--points", "3", "--max", "0.10784")
    assert rows(out)[-1]["h_min"] != ""
    assert float(rows(out)[-1]["h_min"]) == pytest.approx(1.56, abs=0.02)


def test_single_point_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "hardy", "--min", "0", "--max", "0", "--points", "1")
    (r,) = rows(out)
    assert code == 0 and abs(float(r["h_min"])) <= 1e-6


def test_sweep_bit_stable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path, workers in ((a, "1"), (b, "2")):
        assert main(["sweep", "--family", "dw-cabello", "--points", "5", "--workers", workers, "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["sweep", "--family", "dw-cabello", "--points", "5", "--workers", "1", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_all_infeasible_exit_2(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "hardy", "--min", "0.1", "--max", "0.2", "--points", "2")
    assert code == 2 and all(r["status"] == "Infeasible" for r in rows(out))


def test_sweep_solver_failure_exit_3_with_partial_output(capsys):
    code, out, _ = run(capsys, "sweep", "--family", "hardy", "--points", "2", "--gap-tol", "1e-20")
    assert code == 3
    assert len(rows(out)) == 2


def test_svg_plot(tmp_path, capsys):
    svg = tmp_path / "h.svg"
    code, _, _ = run(capsys, "sweep", "--family", "chsh", "--points", "3", "--plot", str(svg))
    text = svg.read_text()
    assert code == 0 and text.startswith("<svg") and "<polyline" in text and "H_min" in text


def test_bound_json(capsys):
    code, out, _ = run(capsys, "bound", "--family", "chsh", "--param", "2.0")
    doc = json.loads(out)
    assert code == 0
    assert set(doc) == set(COLUMNS) | {"per_outcome"}
    assert doc["h_min"] <= 1e-6 and doc["lhv"] == 2.0


def test_bound_noisy_example(capsys):
    code, out, _ = run(capsys, "bound", "--family", "noisy-hardy", "--param", "0.3333")
    doc = json.loads(out)
    assert code == 0
    assert doc["h_min"] == pytest.approx(1.58, abs=0.02)
    assert doc["lhv"] == pytest.approx(0.9999, abs=1e-4)


def test_bound_dw_example(capsys):
    code, out, _ = run(capsys, "bound", "--family", "dw-cabello", "--param", "0.08279")
    assert json.loads(out)["h_min"] == pytest.approx(0.68, abs=0.02)


def test_bound_infeasible_exit_2(capsys):
    code, out, _ = run(capsys, "bound", "--family", "cabello", "--param", "0.2")
    assert code == 2 and json.loads(out)["status"] == "Infeasible"


def test_bound_solver_failure_exit_3(capsys):
    code, out, _ = run(capsys, "bound", "--family", "hardy", "--param", "0.05", "--gap-tol", "1e-20")
    assert code == 3 and json.loads(out)["status"] == "SolverFailure"


def test_lhv_commands(capsys):
    code, out, _ = run(capsys, "lhv", "--family", "noisy-hardy", "--param", "0.1")
    assert code == 0 and json.loads(out)["lhv"] == pytest.approx(0.3, abs=1e-9)
    code, out, _ = run(capsys, "lhv", "--family", "noisy-hardy", "--min", "0", "--max", "0.3333333333333333", "--points", "3")
    assert [float(r["lhv"]) for r in rows(out)] == pytest.approx([0.0, 0.5, 1.0], abs=1e-9)


def test_qubit_opt_deterministic_json(capsys):
    argv = ("qubit-opt", "--family", "hardy", "--seed", "7", "--restarts", "4", "--workers", "1")
    c1, o1, _ = run(capsys, *argv)
    c2, o2, _ = run(capsys, *argv)
    assert c1 == c2 == 0 and o1 == o2
    doc = json.loads(o1)
    assert {"value", "state", "meas", "residual"} <= set(doc)


def test_qubit_opt_examples(capsys):
    for family, floor in (("hardy", 0.0900), ("cabello", 0.1070)):
        code, out, _ = run(capsys, "qubit-opt", "--family", family, "--seed", "7", "--restarts", "8")
        assert code == 0 and json.loads(out)["value"] >= floor


def test_qubit_opt_no_feasible_exit_4(capsys):
    code, _, err = run(capsys, "qubit-opt", "--family", "noisy-hardy", "--param", "-0.1", "--restarts", "2")
    assert code == 4 and "no feasible" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep"],
        ["sweep", "--family", "bell"],
        ["sweep", "--family", "hardy", "--points", "0"],
        ["sweep", "--family", "hardy", "--min", "1", "--max", "0"],
        ["bound", "--family", "hardy"],
        ["bound", "--family", "hardy", "--param", "0.1", "--gap-tol", "-1"],
        ["bound", "--family", "hardy", "--param", "x"],
        ["sweep", "--family", "hardy", "--level", "3"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    capsys.readouterr()


def test_help_exits_0(capsys):
    assert main(["sweep", "--help"]) == 0
    assert "--family" in capsys.readouterr().out


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# chsh sweep\nfamily = chsh\npoints = 3\nmin = 2\nqubit = false\n")
    code, out, _ = run(capsys, "sweep", "--config", str(cfg))
    assert code == 0 and len(rows(out)) == 3
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--points", "2")
    assert len(rows(out)) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert main(["sweep", "--family", "hardy", "--config", str(bad)]) == 1


def test_csv_empty_cells_for_missing():
    text = to_csv([{c: None for c in COLUMNS} | {"status": "Infeasible"}])
    assert text.splitlines()[1] == ",,,,,Infeasible,,"


def test_console_script_module_entry():
    proc = subprocess.run(
        [sys.executable, "-m", "paradoxrand", "bound", "--family", "chsh", "--param", "2"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["status"] == "Optimal"
