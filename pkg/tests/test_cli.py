import numpy as np
import pytest

from mhdpp import cli


def run_cli(argv):
    return cli.main(argv)


class TestRun:
    def test_smooth1d_run_writes_profile_and_diagnostics(self, tmp_path):
        out = tmp_path / "o1"
        rc = run_cli([
            "run", "--problem", "smooth1d", "--cells", "32",
            "--t-end", "0.01", "--out", str(out),
        ])
        assert rc == 0
        diag = (out / "diagnostics.csv").read_text().splitlines()
        assert diag[0] == ("step,t,dt,min_rho,min_p,max_divB_fo,max_divB_ho,"
                           "total_mass,limited_cells")
        assert len(diag) > 1
        snaps = sorted(out.glob("snap_*.csv"))
        assert len(snaps) == 2  # initial + final
        header = snaps[0].read_text().splitlines()[0]
        assert header == "x,rho,mx,my,mz,Bx,By,Bz,E,p"
        rows = snaps[0].read_text().splitlines()[1:]
        assert len(rows) == 32

    def test_blast_run_writes_vtk(self, tmp_path):
        out = tmp_path / "o2"
        rc = run_cli([
            "run", "--problem", "blast", "--cells", "8x8",
            "--t-end", "1e-4", "--out", str(out), "--snapshot-every", "2",
        ])
        assert rc == 0
        vtks = sorted(out.glob("snap_*.vtk"))
        assert len(vtks) >= 2
        text = vtks[-1].read_text()
        assert "DATASET STRUCTURED_POINTS" in text
        assert "DIMENSIONS 9 9 1" in text
        assert "CELL_DATA 64" in text
        for name in ("rho", "p", "E", "divB_ho"):
            assert f"SCALARS {name} double 1" in text
        assert "VECTORS velocity double" in text
        assert "VECTORS B double" in text

    def test_determinism_byte_identical(self, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            rc = run_cli([
                "run", "--problem", "smooth1d", "--cells", "24",
                "--t-end", "0.02", "--out", str(out),
            ])
            assert rc == 0
            outs.append((out / "diagnostics.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_unknown_problem_exits_1(self, tmp_path, capsys):
        rc = run_cli(["run", "--problem", "nope", "--out", str(tmp_path)])
        assert rc == 1
        assert "unknown problem" in capsys.readouterr().err

    def test_invalid_config_key_echoes_line(self, tmp_path, capsys):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("[solver]\nwarp_speed = 9\n")
        rc = run_cli(["run", "--config", str(cfgfile), "--out", str(tmp_path / "o")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "warp_speed = 9" in err

    def test_config_file_with_flag_override(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(
            "[problem]\nname = smooth1d\ncells = 16\nt_end = 0.01\n"
            "[solver]\nk = 1\npenalty = off\n"
            "[output]\ndir = " + str(tmp_path / "fromfile") + "\n"
        )
        rc = run_cli(["run", "--config", str(cfgfile),
                      "--out", str(tmp_path / "cli_wins")])
        assert rc == 0
        assert (tmp_path / "cli_wins" / "diagnostics.csv").exists()
        assert not (tmp_path / "fromfile").exists()

    def test_positivity_abort_exit_2(self, tmp_path, capsys):
        # Odd cell count puts the near-vacuum jump inside a cell; without
        # any limiting the projected polynomial has negative density at the
        # quadrature points and the run must abort with exit code 2.
        rc = run_cli([
            "run", "--problem", "vacuum_tube", "--cells", "25",
            "--t-end", "0.05", "--pp-limiter", "off",
            "--oscillation-limiter", "off", "--out", str(tmp_path / "o"),
        ])
        assert rc == 2
        assert "positivity" in capsys.readouterr().err


class TestConvergence:
    def test_smooth1d_orders(self, tmp_path, capsys):
        rc = run_cli([
            "convergence", "--problem", "smooth1d", "--cells", "16,32",
            "--t-end", "0.02", "--out", str(tmp_path),
        ])
        assert rc == 0
        outtxt = capsys.readouterr().out
        assert "L1[rho]" in outtxt
        csv = (tmp_path / "convergence.csv").read_text().splitlines()
        assert csv[0].startswith("cells,l1_rho")
        assert len(csv) == 3
        order = float(csv[2].split(",")[9])
        assert order > 2.0

    def test_problem_without_exact_solution(self, tmp_path, capsys):
        rc = run_cli(["convergence", "--problem", "blast", "--cells", "8,16",
                      "--out", str(tmp_path)])
        assert rc == 1
        assert "exact solution" in capsys.readouterr().err

    def test_thread_cap_respected(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MHDPP_THREADS", "2")
        rc = run_cli([
            "convergence", "--problem", "smooth1d", "--cells", "12,24",
            "--t-end", "0.01", "--out", str(tmp_path),
        ])
        assert rc == 0
        assert (tmp_path / "convergence.csv").exists()


class TestVerify:
    def test_small_suite_passes(self, tmp_path, capsys):
        rc = run_cli(["verify", "--seed", "5", "--trials", "100",
                      "--out", str(tmp_path / "report.csv")])
        assert rc == 0
        assert (tmp_path / "report.csv").exists()
        assert "multi_state_inequality" in capsys.readouterr().out

    def test_zero_trials_empty_report(self, tmp_path):
        rc = run_cli(["verify", "--trials", "0"])
        assert rc == 0

    def test_seed_reproducibility(self, tmp_path):
        paths = []
        for tag in ("r1", "r2"):
            p = tmp_path / f"{tag}.csv"
            run_cli(["verify", "--seed", "9", "--trials", "200", "--out", str(p)])
            paths.append(p.read_bytes())
        assert paths[0] == paths[1]
