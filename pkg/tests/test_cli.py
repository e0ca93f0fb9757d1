import io
import json
import subprocess
import sys

import pytest

from hypercube import experiments as ex
from hypercube.cli import main, parse_caps, parse_rates
from hypercube.sim import Circuit


def run(argv, capsys, monkeypatch=None, stdin=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("level,expected", [(1, "[[6,4,2]] rate=0.6667"), (2, "[[36,16,4]] rate=0.4444"),
                                            (3, "[[216,64,8]] rate=0.2963")])
def test_codegen(level, expected, capsys):
    code, out, _ = run(["codegen", "--level", str(level)], capsys)
    assert code == 0
    assert out.strip() == expected


def test_codegen_verbose_counts(capsys):
    code, out, _ = run(["codegen", "--level", "2", "--verbose"], capsys)
    assert code == 0
    assert "z-generators=10 x-generators=10 logical-qubits=16" in out


def test_decode_hard_example(capsys, monkeypatch):
    code, out, _ = run(["decode", "--level", "1", "--decoder", "hard"], capsys, monkeypatch, "110000\n")
    assert (code, out) == (0, "0100\n")


@pytest.mark.parametrize("decoder", ["hard", "soft", "md"])
def test_decode_codewords_all_decoders(decoder, capsys, monkeypatch):
    code, out, _ = run(["decode", "--level", "1", "--decoder", decoder], capsys, monkeypatch,
                       "000000\n111111\n011000\n")
    assert code == 0
    assert out.split() == ["0000", "0000", "1000"]


def test_decode_detect_and_distance(capsys, monkeypatch):
    code, out, _ = run(["decode", "--level", "1", "--decoder", "md", "--mode", "detect", "--distance"],
                       capsys, monkeypatch, "100000\n000000\n")
    assert code == 0
    assert out.split("\n")[:2] == ["F", "0000 d=0"]


@pytest.mark.parametrize("stdin", ["10100\n", "11000x\n"])
def test_decode_rejects_bad_input(stdin, capsys, monkeypatch):
    code, _, err = run(["decode", "--level", "1"], capsys, monkeypatch, stdin)
    assert code == 1
    assert "Error" in err


@pytest.mark.parametrize("argv", [["codegen", "--bogus"], ["codegen", "--level", "0"], ["nosuch"],
                                  ["sweep", "--rates", "0.1:0.05:3"], ["sweep", "--levels", "2,x"],
                                  ["sweep", "--decoder", "md,magic"], ["decode", "--n-th", "3:7"],
                                  ["sim-cnot", "--rounds", "1"]])
def test_validation_errors_exit_1(argv, capsys):
    assert run(argv, capsys)[0] == 1


def test_unwritable_output_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, err = run(["sim-bitflip", "--level", "1", "--trials", "10", "--output-dir", str(blocker / "x")],
                       capsys)
    assert code == 1
    assert "output directory" in err


def test_rate_grids():
    assert parse_rates("0.02:0.08:7") == pytest.approx([0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08])
    assert parse_rates("0.001:0.1:3", "log") == pytest.approx([0.001, 0.01, 0.1])
    assert parse_rates("0.01,0.03") == [0.01, 0.03]
    assert parse_rates("0.05:0.05:1") == [0.05]


def test_cap_parsing():
    assert parse_caps("3=100000,4=5") == {3: 100000, 4: 5}
    assert parse_caps("none") == {}


def _sweep(tmp_path, name, capsys, *extra):
    out = tmp_path / name
    code, stdout, _ = run(["sweep", "--levels", "1,2", "--decoder", "md", "--rates", "0.02:0.08:7", "--seed",
                           "7", "--trials", "800", "--output-dir", str(out), *extra], capsys)
    assert code == 0
    return out, stdout


def test_sweep_deterministic_csv(tmp_path, capsys):
    a, stdout = _sweep(tmp_path, "a", capsys)
    b, _ = _sweep(tmp_path, "b", capsys, "--jobs", "2")
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    assert (a / "sweep.json").read_bytes() == (b / "sweep.json").read_bytes()
    lines = (a / "sweep.csv").read_text().splitlines()
    assert lines[0] == ",".join(ex.CSV_COLUMNS)
    assert len(lines) == 1 + 14
    assert len(stdout.splitlines()) == 14
    summary = json.loads((a / "sweep.json").read_text())
    assert set(summary["fits"]) == {"md:L1", "md:L2"}


def test_output_dir_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("HYPERCUBE_OUTPUT_DIR", str(tmp_path / "env"))
    code, _, _ = run(["sim-bitflip", "--level", "1", "--decoder", "hard", "--trials", "100"], capsys)
    assert code == 0
    assert (tmp_path / "env" / "bitflip-L1-hard.csv").exists()


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[sweep]\nlevels = 3\ntrials = 123\nrates = 0.01,0.02\n\n[codegen]\nlevel = 2\n")
    code, out, _ = run(["--config", str(cfg), "sweep", "--trials", "50", "--show-config"], capsys)
    assert code == 0
    settings = dict(line.split(" = ") for line in out.splitlines()[1:])
    assert out.splitlines()[0] == "[sweep]"
    assert settings["levels"] == "3" and settings["trials"] == "50" and settings["rates"] == "0.01,0.02"
    code, out, _ = run(["--config", str(cfg), "codegen"], capsys)
    assert out.strip() == "[[36,16,4]] rate=0.4444"


def test_show_config_round_trips(tmp_path, capsys):
    code, out, _ = run(["sim-bitflip", "--rate", "0.03", "--show-config"], capsys)
    assert code == 0
    cfg = tmp_path / "shown.ini"
    cfg.write_text(out)
    _, again, _ = run(["--config", str(cfg), "sim-bitflip", "--show-config"], capsys)
    assert again == out


def test_missing_config_file(capsys):
    assert run(["--config", "/nonexistent/x.ini", "codegen"], capsys)[0] == 1


def test_fit_and_threshold(tmp_path, capsys):
    rows = [ex.ExperimentResult(lv, "md", r, 10_000, int(10_000 * c * r**e))
            for lv, c, e in ((2, 10.0, 2), (3, 278.0, 3)) for r in (0.02, 0.03, 0.04, 0.05, 0.06)]
    path = tmp_path / "s.csv"
    path.write_text(ex.results_to_csv(rows))
    code, out, _ = run(["fit", "--input", str(path)], capsys)
    assert code == 0
    assert "L=2 decoder=md exponent=2.0" in out and "L=3 decoder=md exponent=3.0" in out
    code, out, _ = run(["threshold", "--input", str(path), "--levels", "2,3", "--bootstrap", "50"], capsys)
    assert code == 0
    value = float(out.split()[0].split("=")[1])
    assert value == pytest.approx(10 / 278, rel=0.02)


def test_threshold_no_crossing_exit_3(tmp_path, capsys):
    rows = [ex.ExperimentResult(lv, "md", r, 10_000, int(10_000 * c * r**2))
            for lv, c in ((2, 1.0), (3, 5.0)) for r in (0.02, 0.04, 0.06)]
    path = tmp_path / "s.csv"
    path.write_text(ex.results_to_csv(rows))
    assert run(["threshold", "--input", str(path), "--levels", "2,3"], capsys)[0] == 3


def test_threshold_missing_file_is_validation_error(capsys):
    assert run(["threshold", "--input", "/nonexistent.csv"], capsys)[0] == 1


@pytest.mark.parametrize("kind", ["zero-encoder", "ghz-encoder", "arbitrary-encoder", "ft-encoder", "edz",
                                  "ect", "cnot"])
def test_emit_circuit_parses_back(kind, capsys):
    code, out, _ = run(["emit-circuit", "--kind", kind, "--level", "1", "--rounds", "2"], capsys)
    assert code == 0
    c = Circuit.from_text(out)
    c.validate()
    assert c.to_text() == out


def test_emit_circuit_stats(capsys):
    code, out, _ = run(["emit-circuit", "--kind", "cnot", "--level", "1", "--stats"], capsys)
    assert code == 0
    assert "FEEDFORWARD 40" in out.splitlines()


def test_sim_cnot_noiseless(tmp_path, capsys):
    code, out, _ = run(["sim-cnot", "--level", "1", "--rate", "0", "--trials", "300", "--rounds", "2",
                        "--output-dir", str(tmp_path)], capsys)
    assert code == 0
    assert "failures=0" in out
    assert (tmp_path / "cnot-L1.csv").exists()


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "hypercube.cli", "codegen", "--level", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.strip() == "[[216,64,8]] rate=0.2963"
    res = subprocess.run([sys.executable, "-m", "hypercube.cli", "codegen", "--level", "x"],
                         capture_output=True, text=True)
    assert res.returncode == 1
