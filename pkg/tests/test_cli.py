import csv
import io

import pytest

from conicaldim.cli import fmt, main, parse_scales


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_fmt_uses_17_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "1"


def test_parse_scales():
    s = parse_scales("3^-1..3^-4")
    assert [float(x) for x in s] == pytest.approx([1 / 3, 1 / 9, 1 / 27, 1 / 81])
    with pytest.raises(Exception):
        parse_scales("0.1,0.5")


def test_verify_moran(capsys):
    code, out, _ = run_cli(capsys, "verify", "E2")
    assert code == 0
    assert out.splitlines()[-1].startswith("E2 PASS")


def test_verify_deterministic(tmp_path, capsys):
    outs = []
    for d in ("a", "b"):
        code, _, _ = run_cli(capsys, "verify", "E1", "--seed", "7", "--param", "points=5",
                             "--out", str(tmp_path / d))
        assert code == 0
        outs.append((tmp_path / d / "E1.csv").read_bytes())
    assert outs[0] == outs[1] and len(outs[0]) > 0
    index = (tmp_path / "a" / "results_index.txt").read_text()
    assert index.startswith("seed=7 E1 PASS")


def test_ratios_row_count(capsys):
    code, out, _ = run_cli(capsys, "ratios", "--system", "cantor13", "--point", "0",
                           "--gauge", "logpow:2", "--scales", "3^-1..3^-40")
    assert code == 0
    assert len(rows(out)) == 41


def test_runlength_two_numbers(capsys):
    code, out, _ = run_cli(capsys, "runlength", "--p", "0.5", "--n", "10000", "--seed", "1")
    assert code == 0
    r = rows(out)
    assert len(r) == 2 and len(r[1]) >= 2


def test_packing_demo(tmp_path, capsys):
    pts = tmp_path / "pts.csv"
    pts.write_text("0,0,1\n1,0,2\n0,1,1\n")
    code, out, _ = run_cli(capsys, "packing-demo", "--points", str(pts), "--theta", "1,0")
    assert code == 0 and len(rows(out)) >= 2


def test_sharpness_and_grid(capsys):
    code, out, _ = run_cli(capsys, "sharpness", "--k-max", "3")
    assert code == 0 and len(rows(out)) == 4
    code, out, _ = run_cli(capsys, "grid-measure", "--generations", "3")
    assert code == 0 and len(rows(out)) >= 2


def test_cone_search_not_found_exit_1(capsys):
    code, out, _ = run_cli(capsys, "cone-search", "--system", "cantor13", "--m", "0",
                           "--alpha", "0.5", "--l-max", "1")
    assert code == 1 and out


def test_cone_search_found(capsys):
    code, out, _ = run_cli(capsys, "cone-search", "--system", "cantor13", "--m", "0",
                           "--alpha", "0.5", "--l-max", "3")
    assert code == 0 and len(rows(out)) >= 2


def test_usage_errors(tmp_path, capsys):
    code, _, err = run_cli(capsys, "verify", "E12")
    assert code == 2 and "experiment" in err
    code, _, err = run_cli(capsys, "verify", "E2", "--seed", str(2 ** 64))
    assert code == 2 and "seed" in err
    code, _, _ = run_cli(capsys, "no-such-command")
    assert code == 2
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("# comment\nbogus=1\n")
    code, _, err = run_cli(capsys, "verify", "E2", "--config", str(cfg))
    assert code == 2 and "bogus" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("p=0.5\nn=2000\nseed=3\n")
    code, a, _ = run_cli(capsys, "runlength", "--config", str(cfg))
    code2, b, _ = run_cli(capsys, "runlength", "--p", "0.5", "--n", "2000", "--seed", "3")
    assert code == code2 == 0 and a == b
