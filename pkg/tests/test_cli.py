import pytest

from rbmflock.cli import main


def test_verify_theory_exit_zero(capsys, tmp_path):
    assert main(["verify-theory", "--out", str(tmp_path)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert (tmp_path / "verify_theory.csv").exists()


def test_simulate_writes_metrics(tmp_path, capsys):
    code = main(["simulate", "--method", "rbmr", "--n", "16", "--p", "2", "--tau", "0.1",
                 "--t-end", "0.5", "--seed", "7", "--out", str(tmp_path), "--snapshots"])
    assert code == 0
    lines = (tmp_path / "rbmr_metrics.csv").read_text().splitlines()
    assert lines[0] == "# seed=7 init_stream=0 batch_stream=1" and len(lines) == 2 + 6
    snap = (tmp_path / "rbmr_snapshots.csv").read_text().splitlines()
    assert snap[1] == "t,particle_id,x_0,v_0" and len(snap) == 2 + 6 * 16


def test_config_violation_exit_one(capsys):
    assert main(["simulate", "--method", "rbm1", "--n", "10", "--p", "4", "--t-end", "0.1"]) == 1
    assert "p | N" in capsys.readouterr().err


def test_unknown_flag_exit_two():
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--bogus"])
    assert info.value.code == 2


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[simulation]\nn = 8\np = 4\nt_end = 0.2\nmethod = ips\nseed = 1\n")
    assert main(["simulate", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "ips_metrics.csv").read_text()
    assert text.startswith("# seed=5 ")


def test_protocol_subcommands_run(tmp_path, capsys):
    base = ["--n", "8", "--t-end", "0.2", "--reps", "2", "--out", str(tmp_path)]
    assert main(["sweep-tau", "--values", "0.1,0.05", "--dt", "0.05"] + base) == 0
    assert (tmp_path / "sweep_tau" / "scaled_error_tau.csv").exists()
    assert main(["sweep-p", "--values", "2,4"] + base) == 0
    assert main(["compare", "--values", "8,16"] + base) == 0
    assert main(["conserve"] + base) == 0
    assert (tmp_path / "conserve" / "first_moment.csv").exists()
    assert main(["flocking", "--kernel", "constant:1"] + base) == 0
    assert main(["bench", "--values", "8,16", "--repeats", "1", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "bench.csv").exists()
