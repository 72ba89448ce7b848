import csv
import io

import numpy as np
import pytest

from nipg1d.cli import main, parse_number, read_config
from nipg1d.studies import CSV_HEADER


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_parse_number():
    assert parse_number("2^-20") == 2.0 ** -20
    assert parse_number(" 0.25 ") == 0.25


def test_read_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nvariant = bs\n\nerror-x = 1  # trailing\n")
    assert read_config(str(p)) == {"variant": "bs", "error_x": "1"}
    p.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        read_config(str(p))


def test_mesh_prints_nodes_and_report(capsys):
    rc, out, _ = run(capsys, "mesh", "--variant", "s", "--N", "16", "--eps", "2^-20")
    lines = out.splitlines()
    assert rc == 0
    nodes = np.array([float(s) for s in lines[:17]])
    assert nodes[0] == 0.0 and nodes[-1] == 1.0
    assert lines[17].startswith("# S mesh, N = 16")


def test_mesh_dump_17_digits(capsys, tmp_path):
    dump = tmp_path / "nodes.txt"
    rc, _, _ = run(capsys, "mesh", "--variant", "dl", "--H", "0.5", "--eps", "2^-20",
                   "--dump", str(dump))
    vals = dump.read_text().split()
    assert rc == 0 and len(vals) == 71
    x = np.array([float(v) for v in vals])
    assert np.all(np.diff(x) > 0)
    # 17 significant digits round-trip exactly
    assert all(f"{float(v):.17g}" == v for v in vals)


def test_solve_spot_value(capsys, tmp_path):
    dump = tmp_path / "u.txt"
    rc, out, _ = run(capsys, "solve", "--variant", "s", "--k", "1", "--N", "16",
                     "--eps", "2^-20", "--dump", str(dump))
    assert rc == 0
    assert "N = 16" in out and "e_dG = 1.369e-03" in out
    assert len(dump.read_text().split()) == 32


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("variant=s\nk=1\nN=16\neps=2^-20\n")
    rc, out, _ = run(capsys, "solve", "--config", str(cfg))
    assert rc == 0 and "N = 16" in out
    rc, out, _ = run(capsys, "solve", "--config", str(cfg), "--N", "32")
    assert rc == 0 and "N = 32" in out and "e_dG = 6.991e-04" in out


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour=blue\n")
    rc, _, err = run(capsys, "solve", "--config", str(cfg))
    assert rc == 1 and err.startswith("nipg1d: error:")


@pytest.mark.parametrize("argv", [
    ["solve", "--variant", "zz", "--N", "16", "--eps", "0.001"],
    ["solve", "--variant", "s", "--N", "10", "--eps", "0.001"],
    ["solve", "--variant", "s", "--N", "16"],
    ["mesh", "--variant", "dl", "--H", "0.5", "--eps", "1"],
    ["slope", "--variant", "s"],
])
def test_errors_exit_nonzero(capsys, argv):
    rc, _, err = run(capsys, *argv)
    assert rc != 0
    assert len(err.strip().splitlines()) == 1 and err.startswith("nipg1d: error:")


def test_study_csv(capsys, tmp_path):
    out = tmp_path / "t.csv"
    rc, _, _ = run(capsys, "study", "--variant", "s,dl", "--k", "1",
                   "--N", "16,32", "--H", "2^-1,2^-2", "--out", str(out))
    assert rc == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == CSV_HEADER
    assert [r[:4] for r in rows[1:]] == [["S", "1", "16", ""], ["S", "1", "32", ""],
                                         ["DL", "1", "70", "0.5"], ["DL", "1", "128", "0.25"]]
    assert rows[1][6] == "1.369e-03" and rows[1][7] == "0.970"
    assert rows[2][7] == "" and rows[4][9] == ""
    assert rows[3][5] == ""


def test_study_stdout(capsys):
    rc, out, _ = run(capsys, "study", "--variant", "bs", "--k", "2", "--N", "16,32")
    rows = list(csv.reader(io.StringIO(out)))
    assert rc == 0 and rows[0] == CSV_HEADER and len(rows) == 3


def test_sweep(capsys, tmp_path):
    dump = tmp_path / "d.txt"
    rc, out, _ = run(capsys, "sweep", "--variant", "s", "--N", "64",
                     "--eps", "2^-10,2^-12", "--dump", str(dump))
    rows = list(csv.reader(io.StringIO(out)))
    assert rc == 0 and len(rows) == 3
    assert [r[4] for r in rows[1:]] == [repr(2.0 ** -10), repr(2.0 ** -12)]
    assert len(dump.read_text().split()) == 4


def test_slope(capsys, tmp_path):
    out = tmp_path / "s.csv"
    rc, _, err = run(capsys, "slope", "--eps", "2^-10,2^-14", "--out", str(out))
    lines = out.read_text().splitlines()
    assert rc == 0 and lines[0] == "eps,H,N_DL,e_dGb,comparison" and len(lines) == 3
    assert all(line.split(",")[2] == "1024" for line in lines[1:])
    assert "fitted slope" in err


def test_interp_study(capsys):
    rc, out, _ = run(capsys, "interp-study", "--variant", "bs", "--k", "1",
                     "--N", "32,64,128", "--kind", "projection")
    rows = list(csv.reader(io.StringIO(out)))
    assert rc == 0
    assert rows[0] == ["variant", "kind", "k", "quantity", "variable", "order",
                       "fitted_rate", "rates"]
    names = {r[3] for r in rows[1:]}
    assert "coarse_Linf" in names and "fine_sqrt_eps_H1" in names
    assert all(r[1] == "projection" for r in rows[1:])
