import csv
import io
import json
import subprocess
import sys

import pytest

from fakestate.cli import EXIT_CONFIG, EXIT_OK, EXIT_REALIZABILITY, EXIT_REGRESSION, main
from fakestate.config import ConfigError, load_config, parse_config, reference_config
from fakestate.model import SourceLabel

UNPHYSICAL = """\
channel.alpha_db_per_km = 0
channel.length_km = 0
detector.eta_bob = 1.0
detector.dark_count = 0
source.signal = 0.5
strategy.name = pnr
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cfg_file(tmp_path):
    def write(text, name="run.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


class TestConfig:
    def test_reference(self):
        cfg = reference_config()
        assert cfg.system.channel.length_km == 120
        assert cfg.system.source(SourceLabel.DECOY).mean_photons == 0.127
        assert cfg.session.pulse_count == 10**10
        assert cfg.strategy_name == "intercept" and cfg.resend_prob is None

    def test_defaults_and_comments(self):
        cfg = parse_config("# nothing but a comment\n\nchannel.length_km = 50  # shorter\n")
        assert cfg.system.channel.length_km == 50
        assert cfg.system.detector.eta_bob == 0.045

    def test_source_order_follows_file(self):
        cfg = parse_config("source.decoy = 0.1\nsource.signal = 0.5\n")
        assert [s.label.value for s in cfg.system.sources] == ["decoy", "signal"]

    @pytest.mark.parametrize("text,line,frag", [
        ("channel.length_km = 120\nchannel.bogus = 1\n", 2, "unknown key"),
        ("channel.length_km = 1\nchannel.length_km = 2\n", 2, "duplicate key"),
        ("\n\ndetector.dark_count = abc\n", 3, "detector.dark_count"),
        ("just words\n", 1, "expected 'key = value'"),
        ("detector.misalignment = 0.7\n", 1, "detector"),
        ("strategy.name = magic\n", 1, "strategy must be one of"),
        ("sweep.grid = 0:10\n", 1, "start:stop:step"),
        ("channel.length_km = 50\nstrategy.intercept_km = 60\n", 2, "intercept_km"),
        ("mc.pulses = 1.5\n", 1, "integer"),
    ])
    def test_errors_carry_line(self, text, line, frag):
        with pytest.raises(ConfigError) as exc:
            parse_config(text, "x.cfg")
        assert str(exc.value).startswith(f"x.cfg:{line}:")
        assert frag in str(exc.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")


class TestCli:
    def test_expect_text(self, capsys):
        code, out, _ = run(capsys, "expect")
        assert code == EXIT_OK
        assert "1.359e-04" in out
        assert "6.679e-05" in out

    def test_expect_vacuum_only(self, capsys, cfg_file):
        # a zero-intensity signal stands in for a link that only ever sends vacuum
        text = "source.signal = 0\nsource.vacuum = 0\n"
        code, out, _ = run(capsys, "expect", "--config", cfg_file(text), "--format", "json")
        assert code == EXIT_OK
        p_d = 8.5e-7
        for row in json.loads(out)["sources"]:
            assert row["p_det"] == pytest.approx(2 * p_d - p_d**2, rel=1e-5)

    def test_feasibility_verdicts(self, capsys):
        for strategy, verdict in [("naive", "Infeasible"), ("vacuum-split", "Infeasible"), ("intercept", "Feasible")]:
            code, out, _ = run(capsys, "feasibility", "--strategy", strategy, "--l", "120", "--format", "json")
            assert code == EXIT_OK
            d = json.loads(out)
            assert d["verdict"] == verdict
        assert d["cross_source_eta_f"]["lo"] == pytest.approx(8.894e-2, abs=1e-5)
        assert d["cross_source_eta_f"]["hi"] == pytest.approx(9.120e-2, abs=1e-5)

    def test_vacuum_split_signal_empty(self, capsys):
        _, out, _ = run(capsys, "feasibility", "--strategy", "vacuum-split", "--format", "json")
        sig = json.loads(out)["per_source"][0]
        assert sig["source"] == "signal" and sig["combined_eta_f"]["empty"]

    def test_windows_has_no_verdict(self, capsys):
        _, out, _ = run(capsys, "windows", "--format", "json")
        assert "verdict" not in json.loads(out)

    def test_json_round_trip(self, capsys):
        for cmd in ("expect", "windows", "feasibility", "sweep", "reproduce"):
            _, out, _ = run(capsys, cmd, "--format", "json", "--grid", "0:120:30")
            d = json.loads(out)
            assert json.loads(json.dumps(d)) == d

    def test_sweep_csv_schema(self, capsys):
        code, out, _ = run(capsys, "sweep", "--format", "csv", "--grid", "0:120:10")
        assert code == EXIT_OK
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["l_km", "source", "eta_f_gain_lo", "eta_f_gain_hi", "eta_f_err_lo",
                           "eta_f_err_hi", "combined_lo", "combined_hi", "feasible"]
        assert len(rows) == 1 + 13 * 2
        assert {len(r) for r in rows} == {9}

    def test_sweep_byte_identical(self, capsys):
        outs = {run(capsys, "sweep", "--format", "csv", "--workers", str(w))[1] for w in (1, 1, 4)}
        assert len(outs) == 1

    def test_mc_deterministic(self, capsys):
        a = run(capsys, "mc", "--format", "csv", "--pulses", "1e6", "--seed", "5")
        b = run(capsys, "mc", "--format", "csv", "--pulses", "1e6", "--seed", "5", "--workers", "3")
        assert a[0] == EXIT_OK and a[1] == b[1]

    def test_mc_honest_and_fluctuation(self, capsys):
        code, out, _ = run(capsys, "mc", "--strategy", "honest", "--pulses", "1e6", "--format", "json")
        assert code == EXIT_OK and len(json.loads(out)["sources"]) == 2
        code, out, _ = run(capsys, "mc", "--fluctuation", "--format", "json")
        assert code == EXIT_OK and json.loads(out)["trials"] == 200

    def test_out_file(self, capsys, tmp_path):
        dest = tmp_path / "expect.csv"
        code, out, _ = run(capsys, "expect", "--format", "csv", "--out", str(dest))
        assert code == EXIT_OK and out == ""
        assert dest.read_text().startswith("source,")

    def test_reproduce_exit(self, capsys):
        code, out, _ = run(capsys, "reproduce")
        lines = [l for l in out.splitlines() if l.startswith(("PASS", "FAIL"))]
        assert len(lines) == 16
        assert code == (EXIT_OK if all(l.startswith("PASS") for l in lines) else EXIT_REGRESSION)

    def test_config_error_exit(self, capsys, cfg_file):
        code, _, err = run(capsys, "expect", "--config", cfg_file("a.b = 1\n"))
        assert code == EXIT_CONFIG
        assert "run.cfg:1:" in err

    def test_bad_flag_values(self, capsys):
        assert run(capsys, "feasibility", "--l", "500")[0] == EXIT_CONFIG
        assert run(capsys, "sweep", "--grid", "10:0:1")[0] == EXIT_CONFIG
        assert run(capsys, "feasibility", "--strategy", "honest")[0] == EXIT_CONFIG

    def test_realizability_exit(self, capsys, cfg_file):
        path = cfg_file(UNPHYSICAL)
        for cmd in ("feasibility", "mc"):
            code, _, err = run(capsys, cmd, "--config", path)
            assert code == EXIT_REALIZABILITY
            assert "realizability" in err

    def test_module_entry_point(self):
        p = subprocess.run([sys.executable, "-m", "fakestate", "expect", "--format", "csv"],
                           capture_output=True, text=True)
        assert p.returncode == 0 and p.stdout.startswith("source,")
