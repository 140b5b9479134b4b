"""File formats: round trips must be bit-exact, errors must be loud."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from infrachamber.chamber import FanCurve, ValveMap, default_chamber
from infrachamber.compensation import ReproductionReport
from infrachamber.io import (
    atomic_write_text,
    bode_to_csv,
    chamber_from_dict,
    chamber_to_dict,
    read_chamber_config,
    read_report_json,
    read_response_json,
    read_spectrum_json,
    read_sweep_record,
    read_waveform_csv,
    write_chamber_config,
    write_report_json,
    write_response_json,
    write_spectrum_json,
    write_sweep_record,
    write_waveform_csv,
)
from infrachamber.signals import (
    FrequencyResponse,
    HarmonicComponent,
    HarmonicSpectrum,
    ResponseEntry,
    Waveform,
)
from infrachamber.sysid import BodeRow, BodeTable, SweepRecord, SweepStep


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    path = tmp_path / "x.txt"
    atomic_write_text(path, "one")
    atomic_write_text(path, "two")
    assert path.read_text() == "two"
    assert list(tmp_path.iterdir()) == [path]


# ---------------------------------------------------------------------------
# waveform CSV
# ---------------------------------------------------------------------------

def test_waveform_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    wave = Waveform(rng.normal(50.0, 10.0, 400), 1000.0, "pascals")
    path = tmp_path / "w.csv"
    write_waveform_csv(path, wave)
    back = read_waveform_csv(path)
    assert np.array_equal(back.samples, wave.samples)
    assert back.sample_rate == wave.sample_rate
    assert back.unit == "pascals"


def test_waveform_csv_round_trip_survives_awkward_rates(tmp_path):
    wave = Waveform(np.arange(300.0), 44100.0, "volts")
    path = tmp_path / "w.csv"
    write_waveform_csv(path, wave)
    assert read_waveform_csv(path).sample_rate == 44100.0


def test_waveform_csv_rejects_bad_headers_and_grids(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n0.0,1.0,volts\n")
    with pytest.raises(ValueError, match="header"):
        read_waveform_csv(path)
    path.write_text("time_s,value,unit\n0.0,1.0,volts\n")
    with pytest.raises(ValueError, match="2 samples"):
        read_waveform_csv(path)
    path.write_text("time_s,value,unit\n0.0,1.0,volts\n0.001,2.0,volts\n0.005,3.0,volts\n")
    with pytest.raises(ValueError, match="uniform"):
        read_waveform_csv(path)
    path.write_text("time_s,value,unit\n0.0,1.0,volts\n0.001,2.0,pascals\n")
    with pytest.raises(ValueError, match="units"):
        read_waveform_csv(path)


# ---------------------------------------------------------------------------
# spectrum / response JSON
# ---------------------------------------------------------------------------

def test_spectrum_json_round_trip(tmp_path):
    s = HarmonicSpectrum(
        0.8,
        (
            HarmonicComponent(1, 0.123456789012345, 1.5),
            HarmonicComponent(3, 2.0, math.pi),
        ),
    )
    path = tmp_path / "s.json"
    write_spectrum_json(path, s)
    back = read_spectrum_json(path)
    assert back.f0 == s.f0
    for a, b in zip(s.components, back.components):
        assert (a.k, a.magnitude, a.phase_rad) == (b.k, b.magnitude, b.phase_rad)


def test_response_json_round_trip_and_usable_default(tmp_path):
    resp = FrequencyResponse(
        0.8,
        (
            ResponseEntry(1, 0.5, 0.1),
            ResponseEntry(2, 0.0, 0.0, usable=False),
        ),
    )
    path = tmp_path / "r.json"
    write_response_json(path, resp)
    doc = json.loads(path.read_text())
    # usable is serialized only for flagged entries
    assert "usable" not in doc["entries"][0]
    assert doc["entries"][1]["usable"] is False
    back = read_response_json(path)
    assert back.entries[0].usable is True
    assert back.entries[1].usable is False
    assert back.entries[0].gain == 0.5


# ---------------------------------------------------------------------------
# bode CSV
# ---------------------------------------------------------------------------

def test_bode_csv_layout():
    table = BodeTable((BodeRow(1, 0.8, -6.02, 13.5), BodeRow(2, 1.6, -6.6, 24.0)))
    text = bode_to_csv(table)
    lines = text.strip().split("\n")
    assert lines[0] == "k,f_hz,gain_db,phase_deg"
    assert lines[1] == "1,0.8,-6.02,13.5"
    assert len(lines) == 3


# ---------------------------------------------------------------------------
# sweep record directory
# ---------------------------------------------------------------------------

def _tiny_record(error=None, failed_at_v=None):
    steps = tuple(
        SweepStep(
            v,
            Waveform(np.full(20, 10.0 + v), 100.0, "pascals"),
            Waveform(np.full(20, 20.0 - v), 100.0, "liters_per_second"),
        )
        for v in (-1.0, 0.0, 1.0)
    )
    return SweepRecord(steps, 0.2, error=error, failed_at_v=failed_at_v)


def test_sweep_record_round_trip(tmp_path):
    rec = _tiny_record()
    write_sweep_record(tmp_path / "rec", rec)
    index = json.loads((tmp_path / "rec" / "index.json").read_text())
    assert [s["v"] for s in index["steps"]] == [-1.0, 0.0, 1.0]
    assert index["hold_s"] == 0.2
    assert "error" not in index
    back = read_sweep_record(tmp_path / "rec")
    assert [s.v for s in back.steps] == [-1.0, 0.0, 1.0]
    assert np.array_equal(back.steps[1].pressure.samples, rec.steps[1].pressure.samples)
    assert back.steps[2].flow.unit == "liters_per_second"


def test_sweep_record_preserves_abort_marker(tmp_path):
    rec = _tiny_record(error="valve jammed", failed_at_v=1.5)
    write_sweep_record(tmp_path / "rec", rec)
    back = read_sweep_record(tmp_path / "rec")
    assert back.error == "valve jammed"
    assert back.failed_at_v == 1.5


# ---------------------------------------------------------------------------
# report JSON
# ---------------------------------------------------------------------------

def test_report_json_round_trip(tmp_path):
    rep = ReproductionReport(0.0123, 0.02, 0.149, 77.4, 14, True)
    path = tmp_path / "rep.json"
    write_report_json(path, rep)
    doc = json.loads(path.read_text())
    assert set(doc) == {
        "rms_rel_err",
        "peak_rel_err",
        "peak_pa",
        "peak_db",
        "periods_compared",
        "within_setback_range",
    }
    assert read_report_json(path) == rep


# ---------------------------------------------------------------------------
# chamber config
# ---------------------------------------------------------------------------

def test_empty_config_is_the_default_chamber():
    model = chamber_from_dict({})
    ref = default_chamber()
    assert model == ref


def test_chamber_config_round_trip(tmp_path):
    model = default_chamber()
    path = tmp_path / "chamber.json"
    write_chamber_config(path, model)
    assert read_chamber_config(path) == model


def test_chamber_config_overrides_and_tabulated_fan():
    model = chamber_from_dict(
        {
            "volume_m3": 2.0,
            "fan": {"table": [[0.0, 100.0], [10.0, 50.0], [20.0, 0.0]]},
            "valve": {"points": [[-5.0, 3e-3], [5.0, 1e-3]]},
        }
    )
    assert model.volume_m3 == 2.0
    assert isinstance(model.fan, FanCurve) and model.fan.table is not None
    assert isinstance(model.valve, ValveMap)
    assert model.rho == default_chamber().rho  # untouched fields fall back


def test_chamber_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown chamber config"):
        chamber_from_dict({"volume": 2.0})
    with pytest.raises(ValueError, match="fan config"):
        chamber_from_dict({"fan": {"p_max_pa": 100.0, "q_max_lps": 20.0, "spin": 3}})
    with pytest.raises(ValueError, match="points"):
        chamber_from_dict({"valve": {"pts": []}})
