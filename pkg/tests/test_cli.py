import pytest

from unrel.cli import build_parser, main

COMMANDS = ["estimate", "exact", "mc", "packing", "ghtree", "diagnose", "gen", "accept", "bench"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_help_lists_every_command(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    text = capsys.readouterr().out
    for cmd in COMMANDS:
        assert cmd in text


@pytest.mark.parametrize("cmd", COMMANDS)
def test_subcommand_help(cmd, capsys):
    with pytest.raises(SystemExit) as err:
        build_parser().parse_args([cmd, "--help"])
    assert err.value.code == 0


def test_exact(capsys):
    code, out, _ = run(capsys, "exact", "--family", "cycle:n=4", "--p", "0.5", "--cuts")
    assert code == 0
    assert "u=0.6875 " in out


def test_estimate_record_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    args = ["estimate", "--family", "dumbbell:k=5,b=2", "--p", "0.1", "--eps", "0.2", "--seed", "4"]
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert "wall" not in text and "rep=0 " in text and "case=Exact" in text


def test_graph_file_and_gen(tmp_path, capsys):
    f = tmp_path / "g.txt"
    assert run(capsys, "gen", "--family", "complete:n=4", "--out", str(f))[0] == 0
    code, out, _ = run(capsys, "ghtree", "--graph", str(f))
    assert code == 0 and out.count("capacity=3") == 3


def test_mc_packing_diagnose(capsys):
    assert run(capsys, "mc", "--family", "cycle:n=5", "--p", "0.3", "--trials", "2000")[0] == 0
    code, out, _ = run(capsys, "packing", "--family", "cycle:n=6", "--delta", "0.3")
    assert code == 0 and "lam=2" in out
    code, out, _ = run(capsys, "diagnose", "--family", "complete:n=5", "--p", "0.3")
    assert code == 0 and "case=Exact" in out


def test_errors_exit_nonzero(tmp_path, capsys):
    code, _, err = run(capsys, "exact", "--family", "nope", "--p", "0.1")
    assert code == 2 and "error=" in err
    bad = tmp_path / "bad.txt"
    bad.write_text("p 3 1\n0 3\n")
    code, _, err = run(capsys, "exact", "--graph", str(bad), "--p", "0.1")
    assert code == 2 and "line 2" in err


def test_env_override_and_abort(monkeypatch, capsys):
    monkeypatch.setenv("UNREL_DEPTH_FACTOR", "0")
    code, _, err = run(capsys, "estimate", "--family", "random-regular:n=16,d=4", "--p", "0.12", "--eps", "0.5")
    assert code == 3 and "diag_path" in err


def test_accept_rows(capsys):
    code, out, _ = run(capsys, "accept", "--criteria", "6")
    assert code == 0
    assert "failed=0" in out and out.count("status=PASS") >= 1
