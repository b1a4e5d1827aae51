import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from clockwork.cli import main

BASE = ["--eps", "0.001", "--rho", "2", "--phi", "0.2"]


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSimulate:
    def test_base(self, capsys):
        code, out, err = run(["simulate", *BASE, "--t-end", "400"], capsys)
        assert code == 0
        data = rows(out)
        assert list(data[0]) == ["tau", "beta", "gamma"]
        assert float(data[-1]["tau"]) == 400.0
        tau = float(err.split("tau=")[1].split()[0])
        assert abs(tau - 150) <= 10

    def test_full_precision(self, capsys):
        _, out, _ = run(["simulate", *BASE, "--t-end", "400", "--samples", "5"], capsys)
        beta = rows(out)[1]["beta"]
        assert len(beta.replace(".", "").lstrip("0").split("e")[0]) >= 15

    def test_dimensional(self, capsys):
        code, out, err = run(["simulate", "--k0", "0.57", "--k1", "570", "--a0", "0.0068718",
                              "--b0", "0", "--c0", "0.003263", "--samples", "101"], capsys)
        assert code == 0
        data = rows(out)
        assert list(data[0]) == ["t_s", "a_mol_l", "b_mol_l", "c_mol_l"]
        assert len(data) == 101
        t = float(err.split(" t=")[1].split()[0])
        assert 110 < t < 135

    def test_text(self, capsys):
        code, out, _ = run(["simulate", *BASE, "--t-end", "400", "--format", "text"], capsys)
        assert code == 0
        assert "switchover: tau=" in out

    def test_missing_rho(self, capsys):
        code, _, err = run(["simulate", "--eps", "0.001", "--phi", "0.2"], capsys)
        assert code == 2
        assert "--rho" in err

    def test_partial_dimensional(self, capsys):
        code, _, err = run(["simulate", "--k0", "0.57", "--k1", "570"], capsys)
        assert code == 2 and "--c0" in err

    def test_bad_values(self, capsys):
        assert run(["simulate", "--eps", "-1", "--rho", "2", "--phi", "0.2"], capsys)[0] == 2
        assert run(["simulate", *BASE, "--rel-tol", "2"], capsys)[0] == 2

    def test_step_budget(self, capsys):
        code, out, err = run(["simulate", *BASE, "--t-end", "400", "--max-steps", "20"], capsys)
        assert code == 3
        assert "error" in err
        assert len(rows(out)) > 1

    def test_to_file(self, tmp_path, capsys):
        path = tmp_path / "traj.csv"
        code, out, _ = run(["simulate", *BASE, "--t-end", "50", "--out", str(path)], capsys)
        assert code == 0 and out == ""
        assert path.read_text().startswith("tau,beta,gamma\n")


class TestAsymptotic:
    def test_regions_in_order(self, capsys):
        code, out, _ = run(["asymptotic", *BASE, "--t-end", "400"], capsys)
        assert code == 0
        labels = [r["region"] for r in rows(out)]
        order = ["I", "II", "III", "IV"]
        idx = [order.index(lab) for lab in labels]
        assert idx == sorted(idx) and set(labels) == set(order)
        assert len(labels) == 801

    def test_single_region(self, capsys):
        code, out, _ = run(["asymptotic", *BASE, "--t-end", "400", "--region", "II"], capsys)
        assert code == 0
        data = rows(out)
        assert {r["region"] for r in data} == {"II"}
        # region II blows up at tau = 150, so later samples are dropped
        assert max(float(r["tau"]) for r in data) < 150

    def test_text(self, capsys):
        code, out, _ = run(["asymptotic", *BASE, "--format", "text", "--samples", "5"], capsys)
        assert code == 0 and "c1=0.6" in out

    def test_invalid_groups(self, capsys):
        assert run(["asymptotic", "--eps", "0.001", "--rho", "4", "--phi", "0.3"], capsys)[0] == 2


class TestCompare:
    def test_base(self, capsys):
        code, out, err = run(["compare", *BASE, "--t-end", "400"], capsys)
        assert code == 0
        data = rows(out)
        assert len(data) == 801
        region3 = [float(r["abs_err_beta"]) for r in data if r["region"] == "III"]
        assert max(region3) < 5 * 0.001 ** 0.5
        assert "III:" in err

    @pytest.mark.parametrize("engine", ["numeric", "asymptotic"])
    def test_self(self, engine, capsys):
        code, out, _ = run(["compare", *BASE, "--t-end", "300", "--reference", engine,
                            "--candidate", engine], capsys)
        assert code == 0
        for r in rows(out):
            assert float(r["abs_err_beta"]) == 0.0 and float(r["abs_err_gamma"]) == 0.0

    def test_solver_failure(self, capsys):
        assert run(["compare", *BASE, "--t-end", "400", "--max-steps", "10"], capsys)[0] == 3


class TestPredict:
    def test_single(self, capsys):
        code, out, _ = run(["predict", "--c0", "0.003263", "--m0", "0.0068718", "--k0", "0.57",
                            "--phi", "0"], capsys)
        assert code == 0
        assert float(rows(out)[0]["t_sw_predicted_s"]) == pytest.approx(121.2275130756097, rel=1e-14)

    def test_boundary_warns(self, capsys):
        code, out, err = run(["predict", "--c0", "0.002", "--m0", "0.004", "--k0", "0.57",
                              "--phi", "0.5"], capsys)
        assert code == 0
        assert float(rows(out)[0]["t_sw_predicted_s"]) == 0.0
        assert "warning" in err

    def test_no_induction(self, capsys):
        code, _, err = run(["predict", "--c0", "0.001", "--m0", "0.004", "--k0", "0.57",
                            "--phi", "0.5"], capsys)
        assert code == 2 and "no induction" in err

    def test_table(self, tmp_path, capsys):
        path = tmp_path / "d.csv"
        path.write_text("series_id,c0_mol_l,m0_mol_l,t_sw_s\nb,0.003320,0.0034962,\"(426.97, 495.78)\"\n")
        code, out, _ = run(["predict", "--table", str(path), "--k0", "0.57"], capsys)
        assert code == 0
        data = rows(out)
        assert len(data) == 2
        assert float(data[0]["t_sw_predicted_s"]) == pytest.approx(476.5085428543133, rel=1e-13)

    def test_missing(self, capsys):
        assert run(["predict", "--c0", "0.003"], capsys)[0] == 2
        assert run(["predict", "--c0", "0.003", "--m0", "0.007"], capsys)[0] == 2
        assert run(["predict", "--c0", "0.003", "--m0", "0.007", "--k0", "0"], capsys)[0] == 2


class TestFit:
    def test_bundled(self, capsys):
        code, out, err = run(["fit"], capsys)
        assert code == 0
        assert len(rows(out)) == 20
        k0 = float(err.split("k0        = ")[1].split()[0])
        assert k0 == pytest.approx(0.57, abs=0.02)

    def test_synthetic_recovery(self, tmp_path, capsys):
        lines = ["series_id,c0_mol_l,m0_mol_l,t_sw_s"]
        for c0, m0 in [(0.002, 0.007), (0.004, 0.007), (0.003, 0.004), (0.003, 0.012)]:
            lines.append(f"s,{c0},{m0},{(c0 - 0.05 * m0) / (m0 * m0 * 0.5)!r}")
        path = tmp_path / "s.csv"
        path.write_text("\n".join(lines) + "\n")
        code, out, _ = run(["fit", "--data", str(path), "--format", "text"], capsys)
        assert code == 0
        assert "k0        = 0.5 " in out
        assert "phi       = 0.05\n" in out

    def test_malformed(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("series_id,c0_mol_l,m0_mol_l,t_sw_s\na,0.1,0.2,3\na,0.1,oops,3\n")
        code, _, err = run(["fit", "--data", str(path)], capsys)
        assert code == 2
        assert "line 3" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run(["fit", "--data", str(tmp_path / "none.csv")], capsys)[0] == 2

    def test_degenerate(self, tmp_path, capsys):
        path = tmp_path / "one.csv"
        path.write_text("series_id,c0_mol_l,m0_mol_l,t_sw_s\na,0.003,0.007,100\n")
        assert run(["fit", "--data", str(path)], capsys)[0] == 2


def test_unknown_subcommand(capsys):
    assert run(["plot"], capsys)[0] == 2


@pytest.mark.parametrize("argv", [
    ["simulate", *BASE, "--t-end", "400"],
    ["asymptotic", *BASE],
    ["compare", *BASE, "--t-end", "300", "--samples", "101"],
    ["fit"],
])
def test_byte_identical(argv):
    outs = [subprocess.run([sys.executable, "-m", "clockwork", *argv], capture_output=True,
                           check=True, env={"CLOCKWORK_SEED": seed, "PATH": ""}).stdout
            for seed in ("1", "2")]
    assert outs[0] == outs[1] and len(outs[0]) > 0


def test_values_parse_back(capsys):
    _, out, _ = run(["asymptotic", *BASE, "--samples", "11"], capsys)
    data = rows(out)
    taus = np.array([float(r["tau"]) for r in data])
    assert np.allclose(np.diff(taus), taus[1])
