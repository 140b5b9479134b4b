"""File formats: waveform/bode CSVs, spectrum/response/report/config JSON,
and the sweep-record directory layout.

All writers are atomic (temp file in the target directory, then rename) and
byte-deterministic: floats are serialized with repr, the shortest exact
round-trip form, so written values survive read-back bit-identically.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .chamber import ChamberModel, FanCurve, ValveMap, default_chamber
from .compensation import ReproductionReport
from .signals import (
    FrequencyResponse,
    HarmonicComponent,
    HarmonicSpectrum,
    ResponseEntry,
    Waveform,
)
from .sysid import BodeTable, SweepRecord, SweepStep

WAVEFORM_HEADER = ["time_s", "value", "unit"]


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text so readers never observe a half-written file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# waveform CSV
# ---------------------------------------------------------------------------

def waveform_to_csv(wave: Waveform) -> str:
    lines = [",".join(WAVEFORM_HEADER)]
    rate = wave.sample_rate
    unit = wave.unit
    for i, v in enumerate(wave.samples):
        lines.append(f"{i / rate!r},{float(v)!r},{unit}")
    return "\n".join(lines) + "\n"


def write_waveform_csv(path: str | Path, wave: Waveform) -> None:
    atomic_write_text(path, waveform_to_csv(wave))


def read_waveform_csv(path: str | Path) -> Waveform:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != WAVEFORM_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(WAVEFORM_HEADER)!r}, got {header}"
            )
        times: list[float] = []
        values: list[float] = []
        units: set[str] = set()
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: malformed row {row}")
            times.append(float(row[0]))
            values.append(float(row[1]))
            units.add(row[2])
    if len(times) < 2:
        raise ValueError(f"{path}: need at least 2 samples to infer the sample rate")
    if len(units) != 1:
        raise ValueError(f"{path}: inconsistent units {sorted(units)}")
    t = np.asarray(times)
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if not dt > 0:
        raise ValueError(f"{path}: time column must be strictly increasing")
    if np.max(np.abs(np.diff(t) - dt)) > 1e-6 * dt:
        raise ValueError(f"{path}: time column is not uniformly sampled")
    rate = 1.0 / dt
    if abs(rate - round(rate)) < 1e-9 * rate:
        rate = float(round(rate))
    return Waveform(np.asarray(values), rate, units.pop())


# ---------------------------------------------------------------------------
# spectrum / response JSON
# ---------------------------------------------------------------------------

def spectrum_to_dict(spectrum: HarmonicSpectrum) -> dict:
    return {
        "f0_hz": spectrum.f0,
        "components": [
            {"k": c.k, "magnitude": c.magnitude, "phase_rad": c.phase_rad}
            for c in spectrum.components
        ],
    }


def spectrum_from_dict(d: dict) -> HarmonicSpectrum:
    return HarmonicSpectrum(
        float(d["f0_hz"]),
        tuple(
            HarmonicComponent(int(c["k"]), float(c["magnitude"]), float(c["phase_rad"]))
            for c in d["components"]
        ),
    )


def write_spectrum_json(path: str | Path, spectrum: HarmonicSpectrum) -> None:
    atomic_write_text(path, json.dumps(spectrum_to_dict(spectrum), indent=2) + "\n")


def read_spectrum_json(path: str | Path) -> HarmonicSpectrum:
    return spectrum_from_dict(json.loads(Path(path).read_text()))


def response_to_dict(resp: FrequencyResponse) -> dict:
    entries = []
    for e in resp.entries:
        row = {"k": e.k, "gain": e.gain, "phase_delay_rad": e.phase_delay_rad}
        if not e.usable:
            row["usable"] = False
        entries.append(row)
    return {"f0_hz": resp.f0, "entries": entries}


def response_from_dict(d: dict) -> FrequencyResponse:
    return FrequencyResponse(
        float(d["f0_hz"]),
        tuple(
            ResponseEntry(
                int(e["k"]),
                float(e["gain"]),
                float(e["phase_delay_rad"]),
                bool(e.get("usable", True)),
            )
            for e in d["entries"]
        ),
    )


def write_response_json(path: str | Path, resp: FrequencyResponse) -> None:
    atomic_write_text(path, json.dumps(response_to_dict(resp), indent=2) + "\n")


def read_response_json(path: str | Path) -> FrequencyResponse:
    return response_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# bode CSV
# ---------------------------------------------------------------------------

def bode_to_csv(table: BodeTable) -> str:
    lines = ["k,f_hz,gain_db,phase_deg"]
    for r in table.rows:
        lines.append(f"{r.k},{r.f_hz!r},{r.gain_db!r},{r.phase_deg!r}")
    return "\n".join(lines) + "\n"


def write_bode_csv(path: str | Path, table: BodeTable) -> None:
    atomic_write_text(path, bode_to_csv(table))


# ---------------------------------------------------------------------------
# sweep record directory
# ---------------------------------------------------------------------------

def write_sweep_record(dir_path: str | Path, record: SweepRecord) -> Path:
    """Write one CSV pair per step plus an index JSON; returns the index path."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    index: dict = {"steps": [], "hold_s": record.hold_s}
    for i, step in enumerate(record.steps):
        pressure_file = f"step_{i:02d}_pressure.csv"
        flow_file = f"step_{i:02d}_flow.csv"
        write_waveform_csv(dir_path / pressure_file, step.pressure)
        write_waveform_csv(dir_path / flow_file, step.flow)
        index["steps"].append(
            {"v": step.v, "pressure_file": pressure_file, "flow_file": flow_file}
        )
    if record.error is not None:
        index["error"] = record.error
        index["failed_at_v"] = record.failed_at_v
    index_path = dir_path / "index.json"
    atomic_write_text(index_path, json.dumps(index, indent=2) + "\n")
    return index_path


def read_sweep_record(dir_path: str | Path) -> SweepRecord:
    dir_path = Path(dir_path)
    index = json.loads((dir_path / "index.json").read_text())
    steps = tuple(
        SweepStep(
            float(s["v"]),
            read_waveform_csv(dir_path / s["pressure_file"]),
            read_waveform_csv(dir_path / s["flow_file"]),
        )
        for s in index["steps"]
    )
    return SweepRecord(
        steps,
        float(index["hold_s"]),
        error=index.get("error"),
        failed_at_v=index.get("failed_at_v"),
    )


# ---------------------------------------------------------------------------
# reproduction report JSON
# ---------------------------------------------------------------------------

def report_to_dict(report: ReproductionReport) -> dict:
    return {
        "rms_rel_err": report.rms_rel_err,
        "peak_rel_err": report.peak_rel_err,
        "peak_pa": report.peak_pa,
        "peak_db": report.peak_db,
        "periods_compared": report.periods_compared,
        "within_setback_range": report.within_setback_range,
    }


def write_report_json(path: str | Path, report: ReproductionReport) -> None:
    atomic_write_text(path, json.dumps(report_to_dict(report), indent=2) + "\n")


def read_report_json(path: str | Path) -> ReproductionReport:
    d = json.loads(Path(path).read_text())
    return ReproductionReport(
        rms_rel_err=float(d["rms_rel_err"]),
        peak_rel_err=float(d["peak_rel_err"]),
        peak_pa=float(d["peak_pa"]),
        peak_db=float(d["peak_db"]),
        periods_compared=int(d["periods_compared"]),
        within_setback_range=bool(d["within_setback_range"]),
    )


# ---------------------------------------------------------------------------
# chamber configuration JSON
# ---------------------------------------------------------------------------

def chamber_from_dict(config: dict) -> ChamberModel:
    """Build a ChamberModel from a config mapping.

    Every key is optional; omissions fall back to the default calibrated
    model's fan, valve, and properties, so {} yields default_chamber().
    Fan form: {"p_max_pa":, "q_max_lps":, "exponent"?:} or
    {"table": [[q_lps, p_pa], ...]}; valve form: {"points": [[v, area_m2], ...]}.
    """
    base = default_chamber()
    known = {
        "volume_m3", "rho", "gamma_p0", "inlet_diameter_m", "baratron_pa_per_volt",
        "fan", "valve",
    }
    unknown = set(config) - known
    if unknown:
        raise ValueError(f"unknown chamber config keys: {sorted(unknown)}")

    fan = base.fan
    if "fan" in config:
        f = config["fan"]
        if "table" in f:
            extra = set(f) - {"table"}
            if extra:
                raise ValueError(f"tabulated fan config takes only 'table', got {sorted(extra)}")
            fan = FanCurve.tabulated([(float(q), float(p)) for q, p in f["table"]])
        else:
            extra = set(f) - {"p_max_pa", "q_max_lps", "exponent"}
            if extra:
                raise ValueError(f"unknown fan config keys: {sorted(extra)}")
            fan = FanCurve.parametric(
                float(f["p_max_pa"]), float(f["q_max_lps"]), float(f.get("exponent", 2.0))
            )

    valve = base.valve
    if "valve" in config:
        v = config["valve"]
        extra = set(v) - {"points"}
        if extra:
            raise ValueError(f"valve config takes only 'points', got {sorted(extra)}")
        valve = ValveMap(tuple((float(vv), float(a)) for vv, a in v["points"]))

    return ChamberModel(
        fan=fan,
        valve=valve,
        volume_m3=float(config.get("volume_m3", base.volume_m3)),
        rho=float(config.get("rho", base.rho)),
        gamma_p0=float(config.get("gamma_p0", base.gamma_p0)),
        inlet_diameter_m=float(config.get("inlet_diameter_m", base.inlet_diameter_m)),
        baratron_pa_per_volt=float(
            config.get("baratron_pa_per_volt", base.baratron_pa_per_volt)
        ),
    )


def chamber_to_dict(model: ChamberModel) -> dict:
    if model.fan.table is not None:
        fan: dict = {"table": [[q, p] for q, p in model.fan.table]}
    else:
        fan = {
            "p_max_pa": model.fan.p_max_pa,
            "q_max_lps": model.fan.q_max_lps,
            "exponent": model.fan.exponent,
        }
    return {
        "volume_m3": model.volume_m3,
        "rho": model.rho,
        "gamma_p0": model.gamma_p0,
        "inlet_diameter_m": model.inlet_diameter_m,
        "baratron_pa_per_volt": model.baratron_pa_per_volt,
        "fan": fan,
        "valve": {"points": [[v, a] for v, a in model.valve.points]},
    }


def read_chamber_config(path: str | Path) -> ChamberModel:
    return chamber_from_dict(json.loads(Path(path).read_text()))


def write_chamber_config(path: str | Path, model: ChamberModel) -> None:
    atomic_write_text(path, json.dumps(chamber_to_dict(model), indent=2) + "\n")
