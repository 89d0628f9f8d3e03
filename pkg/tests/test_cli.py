"""End-to-end tests of the command line interface via main(argv)."""

import numpy as np
import pytest

from eigenmin import cli, mesh
from eigenmin.cli import EXIT_OK, EXIT_SOLVER, EXIT_USAGE, EXIT_VERIFY_FAIL, main


def test_mesh_command_writes_file(tmp_path, capsys):
    out = tmp_path / "t.smesh"
    rc = main(["mesh", "--surface", "clifford", "--resolution", "8", "--out", str(out)])
    assert rc == EXIT_OK
    text = capsys.readouterr().out
    assert "vertices: 64" in text
    assert "faces: 128" in text
    assert "euler: 0" in text
    loaded = mesh.read_mesh(out)
    assert loaded.vertex_count == 64


def test_mesh_command_stats_only(capsys):
    rc = main(["mesh", "--surface", "sphere", "--subdiv", "1"])
    assert rc == EXIT_OK
    text = capsys.readouterr().out
    assert "vertices: 42" in text
    assert "euler: 2" in text


def test_mesh_rejects_wrong_granularity_flag(capsys):
    rc = main(["mesh", "--surface", "clifford", "--subdiv", "3"])
    assert rc == EXIT_USAGE
    err = capsys.readouterr().err
    assert "--subdiv" in err


def test_mesh_rejects_bad_resolution(capsys):
    rc = main(["mesh", "--surface", "clifford", "--resolution", "2"])
    assert rc == EXIT_USAGE
    err = capsys.readouterr().err
    assert "--resolution" in err


def test_spectrum_command(capsys):
    rc = main(["spectrum", "--surface", "clifford", "--resolution", "12", "--k", "4"])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("EIGENMIN-SPECTRUM 1")
    assert "k: 4" in out
    assert "deflated: true" in out
    data_lines = [l for l in out.splitlines() if l and l[0].isdigit()]
    assert len(data_lines) == 4
    lam0 = float(data_lines[0].split()[0])
    assert lam0 == pytest.approx(2.0, rel=0.1)


def test_spectrum_deflate_false(capsys):
    rc = main(["spectrum", "--surface", "clifford", "--resolution", "8",
               "--k", "2", "--deflate", "false"])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "deflated: false" in out
    first = float([l for l in out.splitlines() if l and l[0].isdigit()][0].split()[0])
    assert abs(first) < 1e-8


def test_spectrum_from_mesh_file(tmp_path, capsys):
    path = tmp_path / "m.smesh"
    mesh.write_mesh(mesh.generate_torus(10), path)
    rc = main(["spectrum", "--mesh", str(path), "--k", "2"])
    assert rc == EXIT_OK
    assert "dim: 100" in capsys.readouterr().out


def test_spectrum_mesh_and_surface_conflict(capsys):
    rc = main(["spectrum", "--mesh", "x.smesh", "--surface", "clifford"])
    assert rc == EXIT_USAGE


def test_spectrum_k_validation(capsys):
    rc = main(["spectrum", "--surface", "clifford", "--resolution", "8", "--k", "0"])
    assert rc == EXIT_USAGE


def test_rayleigh_coordinate(capsys):
    rc = main(["rayleigh", "--surface", "sphere", "--subdiv", "2", "--coord", "2"])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "coordinate: 2" in out
    proj = float(next(l for l in out.splitlines()
                      if l.startswith("rayleigh-projected:")).split()[1])
    assert proj == pytest.approx(2.05, rel=0.05)


def test_rayleigh_truncation(capsys):
    rc = main(["rayleigh", "--surface", "clifford", "--resolution", "16",
               "--coord", "1", "--beta", "4", "--p0", "0,0"])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "beta: 4.0" in out


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep", "--surface", "clifford", "--resolution", "16",
               "--betas", "1,4,16", "--out", str(out)])
    assert rc == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("beta,rayleigh_raw")
    assert len(lines) == 4


def test_sweep_deduplicates_betas(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep", "--surface", "clifford", "--resolution", "16",
               "--betas", "4,1,4", "--out", str(out)])
    assert rc == EXIT_OK
    captured = capsys.readouterr()
    assert "duplicate beta" in captured.err
    assert len(out.read_text().splitlines()) == 3


def test_sweep_bad_coord(capsys):
    rc = main(["sweep", "--surface", "clifford", "--resolution", "16",
               "--coord", "5", "--betas", "1,2"])
    assert rc == EXIT_USAGE
    assert "coord_index" in capsys.readouterr().err


def test_sweep_profiles(tmp_path, capsys):
    out = tmp_path / "s.csv"
    prof = tmp_path / "p.csv"
    rc = main(["sweep", "--surface", "clifford", "--resolution", "8",
               "--betas", "2,8", "--out", str(out), "--profiles", str(prof)])
    assert rc == EXIT_OK
    lines = prof.read_text().splitlines()
    assert lines[0] == "beta,distance,phi_beta,u_beta,x_i,abs_error"
    assert len(lines) == 1 + 2 * 64


def test_verify_sphere_passes(tmp_path, capsys):
    report_path = tmp_path / "report.txt"
    csv_path = tmp_path / "report.csv"
    rc = main(["verify", "--surface", "sphere", "--subdivs", "2,3,4",
               "--out", str(report_path), "--csv", str(csv_path)])
    assert rc == EXIT_OK
    captured = capsys.readouterr()
    assert "overall: pass" in captured.out
    assert "FAIL" not in captured.out
    assert captured.out.count("ok  ") >= 20
    assert "time " in captured.err
    assert report_path.read_text().startswith("EIGENMIN-REPORT 1")
    assert csv_path.read_text().startswith("id,mode,")


def test_verify_zero_tolerance_fails(capsys):
    rc = main(["verify", "--surface", "clifford", "--resolutions", "8,12,16",
               "--tol", "0"])
    assert rc == EXIT_VERIFY_FAIL
    out = capsys.readouterr().out
    assert "overall: fail" in out
    assert "FAIL" in out


def test_verify_reruns_byte_identical(tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    argv = ["verify", "--surface", "clifford", "--resolutions", "8,12,16"]
    assert main(argv + ["--out", str(a)]) in (EXIT_OK, EXIT_VERIFY_FAIL)
    assert main(argv + ["--out", str(b)]) in (EXIT_OK, EXIT_VERIFY_FAIL)
    assert a.read_bytes() == b.read_bytes()


def test_verify_unwritable_out(capsys):
    rc = main(["verify", "--surface", "sphere", "--subdivs", "1,2",
               "--out", "/nonexistent-dir/report.txt"])
    assert rc == EXIT_USAGE


def test_verify_bad_resolutions(capsys):
    rc = main(["verify", "--surface", "clifford", "--resolutions", "16"])
    assert rc == EXIT_VERIFY_FAIL or rc == EXIT_USAGE
    # One resolution cannot support convergence checks; the run must not crash.


def test_verify_malformed_resolutions(capsys):
    rc = main(["verify", "--surface", "clifford", "--resolutions", "a,b"])
    assert rc == EXIT_USAGE
    assert "--resolutions" in capsys.readouterr().err


def test_oracle_command(capsys):
    rc = main(["oracle", "--surface", "sphere", "--count", "3"])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "area: 12.566370614359172" in out
    assert "second-fundamental-norm-sq: 0.0" in out
    lines = [l for l in out.splitlines() if l and l[0].isdigit()]
    assert lines[0].split() == ["0.0", "1"]
    assert lines[1].split() == ["2.0", "3"]
    assert lines[2].split() == ["6.0", "5"]


def test_oracle_torus(capsys):
    rc = main(["oracle", "--surface", "clifford", "--count", "2"])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "second-fundamental-norm-sq: 2.0" in out
    lines = [l for l in out.splitlines() if l and l[0].isdigit()]
    assert lines[1].split() == ["2.0", "4"]


def test_config_file_supplies_defaults(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# spectral defaults\nresolution = 12\nk = 3\n")
    rc = main(["spectrum", "--surface", "clifford", "--config", str(cfg)])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "dim: 144" in out
    assert "k: 3" in out


def test_config_explicit_flag_wins(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("k = 3\n")
    rc = main(["spectrum", "--surface", "clifford", "--resolution", "12",
               "--config", str(cfg), "--k", "2"])
    assert rc == EXIT_OK
    assert "k: 2" in capsys.readouterr().out


def test_config_missing_file(capsys):
    rc = main(["spectrum", "--surface", "clifford", "--config", "/no/such.cfg"])
    assert rc == EXIT_USAGE


def test_config_malformed_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("resolution 12\n")
    rc = main(["spectrum", "--surface", "clifford", "--config", str(cfg)])
    assert rc == EXIT_USAGE
    assert "line 1" in capsys.readouterr().err


def test_spectrum_reruns_byte_identical(tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    argv = ["spectrum", "--surface", "clifford", "--resolution", "16", "--k", "4"]
    assert main(argv + ["--out", str(a)]) == EXIT_OK
    assert main(argv + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_nonconvergence_exit_code(monkeypatch, capsys):
    from eigenmin.eigen import NonConvergence

    def explode(*args, **kwargs):
        raise NonConvergence("residual 1.0e-03 above tolerance 1.0e-08 after 3000 iterations")

    monkeypatch.setattr(cli, "solve_lowest", explode)
    rc = main(["spectrum", "--surface", "clifford", "--resolution", "8"])
    assert rc == EXIT_SOLVER
    assert "residual" in capsys.readouterr().err
