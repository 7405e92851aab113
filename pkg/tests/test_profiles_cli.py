import json
import subprocess
import sys

import numpy as np
import pytest

from franson_qkd.cli import main
from franson_qkd.distillation import read_key
from franson_qkd.errors import ConfigError
from franson_qkd.profiles import (
    BUILTIN_PROFILES,
    LAB_20M,
    SPOOL_8450M,
    apply_overrides,
    dumps,
    load_profile,
    loads,
    to_flat,
)
from franson_qkd.qber_model import qber_breakdown


@pytest.mark.parametrize("profile", list(BUILTIN_PROFILES.values()))
def test_profile_text_round_trip(profile):
    assert loads(dumps(profile), base=profile) == profile
    assert to_flat(loads(dumps(profile))) == to_flat(profile)


def test_builtin_budgets():
    assert LAB_20M.budget().link_loss_db == 0.0
    assert SPOOL_8450M.budget().link_loss_db == pytest.approx(4.7)
    assert SPOOL_8450M.peaks().peak_fwhm == pytest.approx(0.8)


def test_overrides_and_aliases():
    p = apply_overrides(LAB_20M, [("mu", "0.5"), ("p_cs", "1e-5"), ("n_gates", "1000"), ("side_peak_leakage", "true")])
    assert p.source.mu == 0.5 and p.gates == 1000 and p.side_peak_leakage
    assert p.bob0.dark_prob_per_gate == p.bob1.dark_prob_per_gate == 1e-5
    assert p.budget().side_leak > 0


@pytest.mark.parametrize(
    "items",
    [[("V", "2")], [("nope", "1")], [("source", "1")], [("mu", "abc")], [("gates", "none")], [("source.mu.x", "1")]],
)
def test_bad_overrides(items):
    with pytest.raises(ConfigError):
        apply_overrides(LAB_20M, items)


def test_profile_file_parsing(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("# custom\nname = x\nchannel.length = 2.0  # km\nvisibility=0.9\n\n")
    p = load_profile(str(f))
    assert (p.name, p.channel.length, p.visibility) == ("x", 2.0, 0.9)
    f.write_text("just words\n")
    with pytest.raises(ConfigError):
        load_profile(str(f))
    with pytest.raises(ConfigError):
        load_profile("no-such-profile")


def test_cli_analytic(tmp_path, capsys):
    assert main(["analytic", "--out-dir", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "analytic.json").read_text())
    assert d["total"] == qber_breakdown(LAB_20M.budget()).total
    assert "QBER_opt=4.1000%" in capsys.readouterr().out


def test_cli_sweep(capsys):
    assert main(["sweep", "--min", "0", "--max", "10", "--step", "1"]) == 0
    out = capsys.readouterr()
    assert len(out.out.strip().split("\n")) == 12
    assert "10% crossing (counted)" in out.err
    assert main(["sweep", "--step", "0"]) == 2


def test_cli_simulate_outputs(tmp_path):
    args = ["simulate", "--gates", "200000", "--seed", "3", "--out-dir"]
    assert main(args + [str(tmp_path / "a")]) == 0
    assert main(args + [str(tmp_path / "b")]) == 0
    for name in ("stats.json", "transcript.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    stats = json.loads((tmp_path / "a" / "stats.json").read_text())
    assert {"stats", "analytic", "seed"} <= set(stats)
    assert main(["simulate", "--gates", "1000", "--verification", "--out-dir", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "transcript.csv").read_text().startswith(
        "gate_index,alice_basis,alice_bit,bob_basis,bob_bit,resolution,detector_id\n"
    )


def test_cli_distill(tmp_path):
    assert main(["distill", "--gates", "3000000", "--out-dir", str(tmp_path)]) == 0
    bits, meta = read_key(tmp_path / "final_key.bin")
    assert bits.size == meta["length"] > 0
    assert {"qber_estimate", "leaked_bits", "hash_seed"} <= set(meta)
    assert json.loads((tmp_path / "reconciliation.json").read_text())["leaked_bits"] == meta["leaked_bits"]


def test_cli_distill_above_cutoff(tmp_path):
    assert main(["distill", "--gates", "300000", "--set", "V=0.5", "--out-dir", str(tmp_path)]) == 4


def test_cli_histogram_and_profile(capsys):
    assert main(["histogram"]) == 0
    assert capsys.readouterr().out.startswith("t_ns,density\n")
    assert main(["histogram", "--bin-width", "1.0"]) == 3
    assert main(["profile", "--profile", "spool-8450m"]) == 0
    assert "channel.length = 8.45" in capsys.readouterr().out


def test_cli_security(capsys):
    assert main(["security"]) == 0
    assert json.loads(capsys.readouterr().out)["level"] == "pair_passive_immune"
    assert main(["security", "--source", "faint_pulse", "--mu-fp", "0.1", "--loss-db", "25"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["pns_vulnerable"] and d["rank"] == 2
    assert main(["security", "--source", "faint_pulse"]) == 3


def test_cli_exit_codes():
    assert main(["analytic", "--set", "V=2"]) == 2
    assert main(["analytic", "--set", "eta=0"]) == 3
    assert main(["analytic", "--profile", "nowhere"]) == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "franson_qkd.cli", "analytic"], capture_output=True, text=True)
    assert r.returncode == 0 and "lab-20m" in r.stdout
