"""CLI behavior: files written, exit codes, determinism. Runs in-process."""

from __future__ import annotations

import json

import pytest

from infrachamber.cli import EXIT_CONFIG, EXIT_OK, EXIT_VERIFICATION, build_parser, main
from infrachamber.io import read_waveform_csv


def _tree(root):
    return sorted(str(p.relative_to(root)) for p in root.rglob("*") if p.is_file())


def test_sweep_writes_record_curve_and_metadata(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main(["sweep", "--hold", "0.1", "--step", "1.0", "--out", str(out)])
    assert code == EXIT_OK
    index = json.loads((out / "steps" / "index.json").read_text())
    assert len(index["steps"]) == 11  # --step 1.0 over [-5, 5]
    assert index["hold_s"] == 0.1
    curve = (out / "operating_curve.csv").read_text().strip().split("\n")
    assert curve[0] == "flow_lps,pressure_pa"
    assert len(curve) == 12
    run = json.loads((out / "run.json").read_text())
    assert run["command"] == "sweep"
    assert run["parameters"]["step"] == 1.0
    assert "sweep" in run["experiment"]
    assert (out / "operating_curve.svg").exists()
    assert "11 levels" in capsys.readouterr().out


def test_missing_config_exits_2_without_output(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(tmp_path / "nope.json"), "--out", str(out)])
    assert code == EXIT_CONFIG
    assert not out.exists()
    assert "not found" in capsys.readouterr().err


def test_invalid_config_json_exits_2(tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    code = main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert not (tmp_path / "o").exists()
    assert "JSON" in capsys.readouterr().err


def test_config_with_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"volume": 9.0}))
    code = main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "unknown chamber config" in capsys.readouterr().err


def test_config_override_changes_results(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fan": {"p_max_pa": 90.0, "q_max_lps": 27.5}}))
    out_a = tmp_path / "default"
    out_b = tmp_path / "weak_fan"
    assert main(["sweep", "--hold", "0.1", "--out", str(out_a)]) == EXIT_OK
    assert main(["sweep", "--hold", "0.1", "--config", str(cfg), "--out", str(out_b)]) == EXIT_OK
    top_a = (out_a / "operating_curve.csv").read_text().strip().split("\n")[-1]
    top_b = (out_b / "operating_curve.csv").read_text().strip().split("\n")[-1]
    assert top_a != top_b


def test_tone_outputs_and_zero_freq_rejected(tmp_path, capsys):
    out = tmp_path / "tone"
    code = main(["tone", "--freq", "2.0", "--out", str(out), "--sample-rate", "500"])
    assert code == EXIT_OK
    drive = read_waveform_csv(out / "tone_drive.csv")
    output = read_waveform_csv(out / "tone_output.csv")
    assert drive.unit == "volts" and output.unit == "pascals"
    assert drive.sample_rate == 500.0
    assert (out / "tone.svg").exists()
    run = json.loads((out / "run.json").read_text())
    assert run["results"]["amplitude_pa"] > 0

    code = main(["tone", "--freq", "0", "--out", str(tmp_path / "t0")])
    assert code == EXIT_CONFIG
    assert not (tmp_path / "t0").exists()
    assert "freq" in capsys.readouterr().err


def test_bode_outputs(tmp_path):
    out = tmp_path / "bode"
    code = main(["bode", "--f0", "2.0", "--max-k", "3", "--out", str(out)])
    assert code == EXIT_OK
    rows = (out / "bode.csv").read_text().strip().split("\n")
    assert rows[0] == "k,f_hz,gain_db,phase_deg"
    assert len(rows) == 4
    resp = json.loads((out / "response.json").read_text())
    assert [e["k"] for e in resp["entries"]] == [1, 2, 3]
    assert (out / "bode.svg").exists()


def test_replicate_compensated_and_control(tmp_path, capsys):
    out = tmp_path / "rep"
    code = main(
        ["replicate", "--out", str(out), "--n-periods", "8", "--n-harmonics", "6"]
    )
    assert code == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["rms_rel_err"] <= 0.05
    for name in (
        "response.json",
        "compensated_spectrum.json",
        "drive.csv",
        "target.csv",
        "achieved.csv",
        "overlay.csv",
        "overlay.svg",
        "run.json",
    ):
        assert (out / name).exists(), name
    overlay = (out / "overlay.csv").read_text().strip().split("\n")
    assert overlay[0] == "time_s,target_pa,achieved_pa"
    capsys.readouterr()

    out2 = tmp_path / "rep_raw"
    code = main(
        [
            "replicate", "--no-compensate", "--out", str(out2),
            "--n-periods", "8", "--n-harmonics", "6",
        ]
    )
    assert code == EXIT_VERIFICATION
    assert "verification failed" in capsys.readouterr().err
    raw = json.loads((out2 / "report.json").read_text())  # report still written
    assert raw["rms_rel_err"] > report["rms_rel_err"]
    assert not (out2 / "compensated_spectrum.json").exists()


def test_replicate_from_pulse_csv(tmp_path):
    from infrachamber.compensation import reference_turbine_pulse
    from infrachamber.io import write_waveform_csv
    from infrachamber.signals import synthesize_harmonics

    pulse = reference_turbine_pulse(n_harmonics=6)
    wave = synthesize_harmonics(pulse.spectrum, 2 / 0.8, 1000.0, unit="pascals")
    csv_path = tmp_path / "pulse.csv"
    write_waveform_csv(csv_path, wave)
    out = tmp_path / "rep"
    code = main(
        [
            "replicate", "--pulse", str(csv_path), "--out", str(out),
            "--n-periods", "8", "--n-harmonics", "6",
        ]
    )
    assert code == EXIT_OK
    run = json.loads((out / "run.json").read_text())
    assert run["parameters"]["pulse_csv"] == str(csv_path)


def test_replicate_missing_pulse_csv_exits_2(tmp_path, capsys):
    out = tmp_path / "rep"
    code = main(["replicate", "--pulse", str(tmp_path / "ghost.csv"), "--out", str(out)])
    assert code == EXIT_CONFIG
    assert not out.exists()
    assert "not found" in capsys.readouterr().err


def test_repeated_runs_are_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        assert main(["tone", "--freq", "4.0", "--out", str(out)]) == EXIT_OK
    assert _tree(a) == _tree(b)
    for rel in _tree(a):
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_parser_covers_all_subcommands():
    parser = build_parser()
    for argv in (
        ["sweep"],
        ["bode"],
        ["tone", "--freq", "1.0"],
        ["replicate", "--reference"],
        ["serve", "--port", "1234"],
    ):
        args = parser.parse_args(argv)
        assert callable(args.handler)
    with pytest.raises(SystemExit):
        parser.parse_args(["tone"])  # --freq is required
    with pytest.raises(SystemExit):
        parser.parse_args(["replicate", "--pulse", "x.csv", "--reference"])  # exclusive
