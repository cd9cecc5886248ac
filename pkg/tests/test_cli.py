from __future__ import annotations

import csv
import json

import pytest

from fermi_lab.cli import main


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for name in ("spectrum", "canonical", "grand", "weyl", "thm1", "thm2", "thm3", "est1", "consistency", "selftest"):
        assert name in out


def test_spectrum_subcommand(tmp_path, capsys):
    code = main([
        "spectrum", "--lambda", "3.0", "--grid", "200", "--levels", "10",
        "--out", str(tmp_path),
    ])
    assert code == 0
    rows = read_rows(tmp_path / "spectrum.csv")
    assert rows[0] == ["k", "epsilon"]
    assert len(rows) == 11
    assert (tmp_path / "spectrum.csv.json").exists()


def test_canonical_subcommand(tmp_path):
    code = main([
        "canonical", "--lambda", "6.0", "--n-particles", "4", "--beta", "1.5",
        "--out", str(tmp_path),
    ])
    assert code == 0
    rows = read_rows(tmp_path / "canonical.csv")
    assert rows[0] == ["N", "beta", "log_z", "trunc_bound"]
    N, beta, log_z, trunc = rows[1]
    assert N == "4"
    assert float(beta) == 1.5
    assert float(log_z) < 0.0
    assert 0.0 <= float(trunc) < 1e-10


def test_grand_subcommand(tmp_path):
    code = main([
        "grand", "--lambda", "6.0", "--mu-list", "1,2", "--out", str(tmp_path),
    ])
    assert code == 0
    rows = read_rows(tmp_path / "grand.csv")
    assert rows[0] == ["mu", "beta", "log_xi", "tail_bound"]
    assert len(rows) == 3
    assert float(rows[1][2]) < float(rows[2][2])  # ln Xi grows with mu


def test_est1_subcommand(tmp_path):
    code = main(["est1", "--lambda", "4.0", "--n-particles", "8", "--out", str(tmp_path)])
    assert code == 0
    rows = read_rows(tmp_path / "est1.csv")
    assert rows[0] == ["lam", "N", "beta", "lhs", "rhs"]
    assert float(rows[1][3]) <= float(rows[1][4])


def test_consistency_subcommand(tmp_path):
    code = main(["consistency", "--out", str(tmp_path)])
    assert code == 0
    rows = read_rows(tmp_path / "consistency.csv")
    assert rows[0] == ["trial", "M", "beta", "mu", "discrepancy"]
    assert len(rows) == 51
    assert max(float(r[4]) for r in rows[1:]) < 1e-10


def test_thm2_subcommand(tmp_path):
    code = main([
        "thm2", "--lambda", "3.0", "--mu-list", "25,50", "--out", str(tmp_path),
    ])
    assert code == 0
    rows = read_rows(tmp_path / "theorem2.csv")
    assert rows[0][:4] == ["control", "ratio", "bound", "flag"]
    assert rows[0][4] == "aux_lnxi_over_mu32"
    assert len(rows) == 3
    for r in rows[1:]:
        assert abs(float(r[1]) - 1.0) <= float(r[2])
    # pins the dispatch order: ln Xi / mu^1.5 at mu=50 sits just under the
    # large-mu asymptote 2 lam / (3 pi) = 0.637; a lam/beta swap gives 0.21
    assert 0.5 < float(rows[2][4]) < 0.7
    meta = json.loads((tmp_path / "theorem2.json").read_text())["meta"]
    assert meta["lam"] == 3.0
    assert meta["beta"] == 1.0


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.ini"
    out_a = tmp_path / "a"
    cfg.write_text(
        "[experiment]\nname = canonical\n\n"
        "[params]\nlambda = 6.0\nn_particles = 4\nbeta = 2.0\n\n"
        f"[output]\ndir = {out_a}\n"
    )
    assert main(["canonical", "--config", str(cfg)]) == 0
    rows = read_rows(out_a / "canonical.csv")
    assert float(rows[1][1]) == 2.0
    out_b = tmp_path / "b"
    assert main(["canonical", "--config", str(cfg), "--beta", "0.5", "--out", str(out_b)]) == 0
    assert float(read_rows(out_b / "canonical.csv")[1][1]) == 0.5


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[params]\nbogus = 1\n")
    code = main(["canonical", "--config", str(cfg)])
    assert code == 2
    assert "ERROR code=2" in capsys.readouterr().err


def test_config_subcommand_mismatch(tmp_path, capsys):
    cfg = tmp_path / "mismatch.ini"
    cfg.write_text("[experiment]\nname = grand\n")
    code = main(["canonical", "--config", str(cfg)])
    assert code == 2
    assert "ERROR code=2" in capsys.readouterr().err


def test_out_dir_from_environment(tmp_path, monkeypatch):
    target = tmp_path / "envout"
    monkeypatch.setenv("FERMI_LAB_OUT", str(target))
    code = main(["canonical", "--lambda", "6.0", "--n-particles", "4"])
    assert code == 0
    assert (target / "canonical.csv").exists()


def test_repeat_runs_byte_identical(tmp_path):
    args = ["grand", "--lambda", "6.0", "--mu-list", "1,2"]
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    assert (out_a / "grand.csv").read_bytes() == (out_b / "grand.csv").read_bytes()


def test_weyl_pre_asymptotic_exit_code(tmp_path):
    code = main([
        "weyl", "--lambda", "3.0", "--amplitude", "2.0",
        "--t-min", "10", "--t-max", "15", "--t-points", "5",
        "--out", str(tmp_path),
    ])
    assert code == 4  # whole grid sits below 4 C^2
    rows = read_rows(tmp_path / "weyl.csv")
    assert all(r[3] == "pre_asymptotic" for r in rows[1:])


def test_theorem1_via_config_schedule(tmp_path):
    cfg = tmp_path / "t1.ini"
    out = tmp_path / "t1"
    cfg.write_text(
        "[experiment]\nname = theorem1\n\n"
        "[params]\nm_min = 4\nm_max = 5\n\n"
        f"[output]\ndir = {out}\n"
    )
    assert main(["thm1", "--config", str(cfg)]) == 0
    rows = read_rows(out / "theorem1.csv")
    assert len(rows) == 3
    for r in rows[1:]:
        assert abs(float(r[1]) - 1.0) <= float(r[2])


def test_rejects_unknown_potential(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--potential", "Bogus"])
    assert exc.value.code == 2
