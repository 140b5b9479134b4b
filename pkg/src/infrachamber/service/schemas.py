"""Request/response models for the experiment service.

The wire shapes mirror the package's file formats (chamber config JSON,
spectrum/response JSON, report JSON) so payloads and files stay
interchangeable.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..chamber import ChamberModel
from ..compensation import ReproductionReport
from ..io import chamber_from_dict
from ..signals import FrequencyResponse, HarmonicSpectrum, Waveform
from ..sysid import BodeTable


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FanConfig(Strict):
    """Parametric (p_max_pa + q_max_lps) or tabulated (table) fan curve."""

    p_max_pa: float | None = None
    q_max_lps: float | None = None
    exponent: float | None = None
    table: list[tuple[float, float]] | None = None


class ValveConfig(Strict):
    points: list[tuple[float, float]]


class ChamberConfig(Strict):
    """Chamber description; omitted fields use the default calibrated model."""

    volume_m3: float | None = None
    rho: float | None = None
    gamma_p0: float | None = None
    inlet_diameter_m: float | None = None
    baratron_pa_per_volt: float | None = None
    fan: FanConfig | None = None
    valve: ValveConfig | None = None

    def to_model(self) -> ChamberModel:
        config = self.model_dump(exclude_none=True)
        if "fan" in config:
            fan = config["fan"]
            if "table" in fan:
                fan["table"] = [list(p) for p in fan["table"]]
        if "valve" in config:
            config["valve"]["points"] = [list(p) for p in config["valve"]["points"]]
        return chamber_from_dict(config)


def build_model(chamber: ChamberConfig | None) -> ChamberModel:
    from ..chamber import default_chamber

    return chamber.to_model() if chamber is not None else default_chamber()


class WaveformModel(Strict):
    samples: list[float]
    sample_rate: float
    unit: str = "dimensionless"

    @classmethod
    def from_waveform(cls, wave: Waveform) -> WaveformModel:
        return cls(samples=wave.samples.tolist(), sample_rate=wave.sample_rate, unit=wave.unit)

    def to_waveform(self) -> Waveform:
        return Waveform(self.samples, self.sample_rate, self.unit)


class SpectrumComponentModel(Strict):
    k: int
    magnitude: float
    phase_rad: float


class SpectrumModel(Strict):
    f0_hz: float
    components: list[SpectrumComponentModel]

    @classmethod
    def from_spectrum(cls, s: HarmonicSpectrum) -> SpectrumModel:
        return cls(
            f0_hz=s.f0,
            components=[
                SpectrumComponentModel(k=c.k, magnitude=c.magnitude, phase_rad=c.phase_rad)
                for c in s.components
            ],
        )


class ResponseEntryModel(Strict):
    k: int
    gain: float
    phase_delay_rad: float
    usable: bool = True


class ResponseModel(Strict):
    f0_hz: float
    entries: list[ResponseEntryModel]

    @classmethod
    def from_response(cls, r: FrequencyResponse) -> ResponseModel:
        return cls(
            f0_hz=r.f0,
            entries=[
                ResponseEntryModel(
                    k=e.k, gain=e.gain, phase_delay_rad=e.phase_delay_rad, usable=e.usable
                )
                for e in r.entries
            ],
        )


class BodeRowModel(Strict):
    k: int
    f_hz: float
    gain_db: float
    phase_deg: float


class BodeTableModel(Strict):
    rows: list[BodeRowModel]
    unwrapped: bool
    excluded_ks: list[int]

    @classmethod
    def from_table(cls, t: BodeTable) -> BodeTableModel:
        return cls(
            rows=[
                BodeRowModel(k=r.k, f_hz=r.f_hz, gain_db=r.gain_db, phase_deg=r.phase_deg)
                for r in t.rows
            ],
            unwrapped=t.unwrapped,
            excluded_ks=list(t.excluded_ks),
        )


class ReportModel(Strict):
    rms_rel_err: float
    peak_rel_err: float
    peak_pa: float
    peak_db: float
    periods_compared: int
    within_setback_range: bool

    @classmethod
    def from_report(cls, r: ReproductionReport) -> ReportModel:
        return cls(
            rms_rel_err=r.rms_rel_err,
            peak_rel_err=r.peak_rel_err,
            peak_pa=r.peak_pa,
            peak_db=r.peak_db,
            periods_compared=r.periods_compared,
            within_setback_range=r.within_setback_range,
        )


# ---------------------------------------------------------------------------
# requests
# ---------------------------------------------------------------------------

class SweepRequest(Strict):
    chamber: ChamberConfig | None = None
    sample_rate: float = Field(default=1000.0, gt=0)
    v_start: float = -5.0
    v_end: float = 5.0
    step: float = Field(default=0.5, gt=0)
    hold_s: float = Field(default=10.0, gt=0)


class BodeRequest(Strict):
    chamber: ChamberConfig | None = None
    sample_rate: float = Field(default=1000.0, gt=0)
    f0: float = Field(default=0.8, gt=0)
    max_k: int = Field(default=25, ge=1)
    amplitude_v: float = Field(default=0.5, gt=0)
    offset_v: float = 1.0
    reference_gain: float = Field(default=1.0, gt=0)


class ToneRequest(Strict):
    chamber: ChamberConfig | None = None
    sample_rate: float = Field(default=1000.0, gt=0)
    freq_hz: float = Field(gt=0)
    cycles: int = Field(default=20, ge=1)
    taper_cycles: int = Field(default=2, ge=0)
    amplitude_v: float = Field(default=0.5, ge=0)
    offset_v: float = 1.0


class PulseSource(Strict):
    """Reference synthetic pulse by default; supply a waveform to analyze a
    measured pulse instead."""

    f0: float = Field(default=0.8, gt=0)
    n_harmonics: int = Field(default=12, ge=3)
    peak_pa: float = Field(default=0.15, gt=0)
    waveform: WaveformModel | None = None


class ReplicateRequest(Strict):
    chamber: ChamberConfig | None = None
    sample_rate: float = Field(default=1000.0, gt=0)
    pulse: PulseSource = Field(default_factory=PulseSource)
    compensate: bool = True
    drive_scale: float = Field(default=0.02, gt=0)
    n_periods: int = Field(default=20, ge=7)
    offset_v: float = 1.0
    bode_amplitude_v: float = Field(default=0.5, gt=0)


# ---------------------------------------------------------------------------
# responses
# ---------------------------------------------------------------------------

class HealthResponse(Strict):
    status: str
    version: str


class SweepStepModel(Strict):
    v: float
    pressure: WaveformModel
    flow: WaveformModel


class SweepResponse(Strict):
    steps: list[SweepStepModel]
    hold_s: float
    error: str | None = None
    failed_at_v: float | None = None
    operating_curve: list[tuple[float, float]]  # (flow L/s, pressure Pa), by flow


class BodeResponse(Strict):
    response: ResponseModel
    table: BodeTableModel


class ToneResponse(Strict):
    drive: WaveformModel
    output: WaveformModel  # chamber pressure, Pa
    amplitude_pa: float    # fitted modulation amplitude over the clean cycles
    mean_pa: float


class ReplicateResponse(Strict):
    report: ReportModel
    response: ResponseModel
    compensated: SpectrumModel | None
    drive: WaveformModel
    target: WaveformModel    # retained periods of the target pulse train
    achieved: WaveformModel  # sensor-referred reconstruction on the same window
