import json
from pathlib import Path

import pytest

from specialcone.cli import ConfigError, RunConfig, load_certificate, main, parse_config

DATA = Path(__file__).parent / "data"
FAST = ["--samples", "8"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(tsv):
    """Report rows without the trailing summary line."""
    lines = [l.split("\t") for l in tsv.splitlines() if "\t" in l]
    head = lines[0]
    return [dict(zip(head, l)) for l in lines[1:] if len(l) == len(head) and l[0] != "summary"]


def test_verify_flat_c2_passes(capsys):
    code, out, _ = run_cli(capsys, "verify", "flat_c2", *FAST)
    assert code == 0
    assert out.splitlines()[0].startswith("stage\tcheck")
    assert all(r["verdict"] in ("PASS", "INFO") for r in rows(out))


def test_gallery_flag_equals_positional(capsys):
    _, a, _ = run_cli(capsys, "verify", "hopf", "--n", "1", *FAST)
    _, b, _ = run_cli(capsys, "verify", "--gallery", "hopf", "--n", "1", *FAST)
    assert a == b


def test_reruns_are_byte_identical(capsys):
    _, a, _ = run_cli(capsys, "verify", "product", *FAST)
    _, b, _ = run_cli(capsys, "verify", "product", *FAST)
    assert a == b
    _, c, _ = run_cli(capsys, "verify", "product", "--samples", "8", "--seed", "7")
    assert c != a


@pytest.mark.parametrize("argv", [
    ["verify", "nope"],
    ["verify", "flat_c2", "--stages", "verify"],
    ["verify", "flat_c2", "--stages", "bogus"],
    ["verify"],
    ["verify", "hopf", "--k", "2"],
    ["verify", "flat_c2", "--perturb", "gamma2"],
    ["verify", "--config", "/nonexistent.cert"],
    ["verify", "oneform", "--stages", "check"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 2 and out == ""
    assert err.startswith("specialcone: error:")


def test_gamma2_perturbation_exits_1(capsys):
    code, out, _ = run_cli(capsys, "verify", "flat_c2", "--perturb", "gamma2=0.01", *FAST)
    assert code == 1
    failing = [r["check"] for r in rows(out) if r["verdict"] == "FAIL"]
    assert any("dgamma2" in c for c in failing)


def test_strict_stops_after_first_failing_stage(capsys):
    argv = ["verify", "flat_c2", "--perturb", "gamma2=0.01", *FAST]
    _, full, _ = run_cli(capsys, *argv)
    code, strict, _ = run_cli(capsys, *argv, "--strict")
    assert code == 1
    stages = {r["stage"] for r in rows(strict)}
    assert stages == {"check"} and len(rows(strict)) < len(rows(full))


def test_config_file(capsys):
    path = str(DATA / "flat_two_patch.cert")
    code, out, _ = run_cli(capsys, "verify", "--config", path, *FAST)
    assert code == 0
    assert any(r["check"].startswith("(2) overlap") for r in rows(out))
    code, out, _ = run_cli(capsys, "verify", "--config", path, "--perturb", "B=0.01", *FAST)
    assert code == 1
    assert any(r["check"].startswith("(2) overlap B") and r["verdict"] == "FAIL" for r in rows(out))


def test_config_parser():
    cert = load_certificate((DATA / "flat_two_patch.cert").read_text())
    assert len(cert.patches) == 2 and cert.chart.dim == 4
    with pytest.raises(ConfigError) as exc:
        parse_config('n = 2\n[patch 1]\nB[3][1][1] = "x1 +"\n')
    assert exc.value.line == 3
    with pytest.raises(ConfigError) as exc:
        parse_config("n = 2\nzap = 3\n")
    assert exc.value.line == 2 and "zap" in str(exc.value)
    with pytest.raises(ConfigError) as exc:
        parse_config("n = 2\n[patch 1]\nf = 1\n")
    assert exc.value.line == 3
    with pytest.raises(ConfigError):
        load_certificate("n = 2\n")


def test_out_writes_tsv(capsys, tmp_path):
    dest = tmp_path / "r.tsv"
    code, out, _ = run_cli(capsys, "verify", "hopf", "--n", "1", *FAST, "--out", str(dest))
    assert code == 0 and out == ""
    _, direct, _ = run_cli(capsys, "verify", "hopf", "--n", "1", *FAST)
    assert dest.read_text() == direct


def test_list(capsys):
    code, out, _ = run_cli(capsys, "list", "surface")
    assert code == 0
    assert [l.split()[0] for l in out.splitlines() if not l.startswith(" ")] == ["product", "surface2"]
    _, out, _ = run_cli(capsys, "list", "--machine")
    entries = [json.loads(l) for l in out.splitlines()]
    assert [e["name"] for e in entries] == ["hopf", "flat_c2", "product", "surface2", "oneform"]
    _, out, _ = run_cli(capsys, "list", "zzz")
    assert out == ""


def test_oneform_cmap(capsys):
    code, out, _ = run_cli(capsys, "verify", "oneform", "--samples", "4", "--t-grid", "2")
    assert code == 0
    assert {r["stage"] for r in rows(out)} == {"cmap"}


def test_psk_stage_on_indefinite_example(capsys):
    code, out, _ = run_cli(capsys, "verify", "hopf", "--n", "1", "--stages", "check,psk", *FAST)
    assert code == 1
    fails = [r["check"] for r in rows(out) if r["verdict"] == "FAIL"]
    # a = -g_FS is negative definite, so the cone signature is not (2n,2) either
    assert fails == ["g positive definite", "signature (2n,2)"]
    assert out.splitlines()[-1].startswith("summary\trows=")


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig("hopf", {}, "x.cert")
    with pytest.raises(ConfigError):
        RunConfig("hopf", {}, None, ("check",), samples=0)
