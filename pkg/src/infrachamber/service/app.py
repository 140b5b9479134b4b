"""FastAPI app exposing the experiment pipeline.

Endpoints are pure compute: JSON in, JSON out, no filesystem access. Domain
validation errors (bad configs, impossible drives) surface as HTTP 400 with
the original message; payload shape errors are FastAPI's usual 422.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..chamber import SimulatedChamber, simulate
from ..compensation import (
    pulse_from_waveform,
    precompensate,
    reference_turbine_pulse,
    roundtrip_traces,
)
from ..signals import stepped_sine
from ..sysid import (
    SETTLE_CYCLES,
    bode_export,
    fit_tone,
    measure_frequency_response,
    pool_operating_curve,
    static_sweep,
)
from .schemas import (
    BodeRequest,
    BodeResponse,
    BodeTableModel,
    HealthResponse,
    ReplicateRequest,
    ReplicateResponse,
    ReportModel,
    ResponseModel,
    SpectrumModel,
    SweepRequest,
    SweepResponse,
    SweepStepModel,
    ToneRequest,
    ToneResponse,
    WaveformModel,
    build_model,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="infrachamber service",
        version=__version__,
        description="Simulated infrasound test chamber: static sweeps, stepped-sine "
        "frequency response, tone bursts, and closed-loop pulse replication.",
    )

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/api/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        try:
            model = build_model(req.chamber)
            bench = SimulatedChamber(model, req.sample_rate)
            record = static_sweep(bench, req.v_start, req.v_end, req.step, req.hold_s)
            curve = pool_operating_curve(record) if record.steps else []
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return SweepResponse(
            steps=[
                SweepStepModel(
                    v=s.v,
                    pressure=WaveformModel.from_waveform(s.pressure),
                    flow=WaveformModel.from_waveform(s.flow),
                )
                for s in record.steps
            ],
            hold_s=record.hold_s,
            error=record.error,
            failed_at_v=record.failed_at_v,
            operating_curve=[(q, p) for q, p in curve],
        )

    @app.post("/api/bode", response_model=BodeResponse)
    def bode(req: BodeRequest) -> BodeResponse:
        try:
            model = build_model(req.chamber)
            bench = SimulatedChamber(model, req.sample_rate)
            resp = measure_frequency_response(
                bench,
                f0=req.f0,
                max_k=req.max_k,
                amplitude=req.amplitude_v,
                offset=req.offset_v,
                sample_rate=req.sample_rate,
            )
            table = bode_export(resp, req.reference_gain)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return BodeResponse(
            response=ResponseModel.from_response(resp),
            table=BodeTableModel.from_table(table),
        )

    @app.post("/api/tone", response_model=ToneResponse)
    def tone(req: ToneRequest) -> ToneResponse:
        try:
            model = build_model(req.chamber)
            drive = stepped_sine(
                req.freq_hz,
                req.cycles,
                req.amplitude_v,
                req.offset_v,
                req.sample_rate,
                req.taper_cycles,
            )
            pressure = simulate(model, drive)
            guard = req.taper_cycles + SETTLE_CYCLES
            start_s = guard / req.freq_hz
            end_s = (req.cycles - req.taper_cycles) / req.freq_hz
            if req.cycles > guard + req.taper_cycles:
                amplitude_pa, _ = fit_tone(pressure, req.freq_hz, start_s, end_s)
            else:
                amplitude_pa, _ = fit_tone(pressure, req.freq_hz, 0.0, pressure.duration)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return ToneResponse(
            drive=WaveformModel.from_waveform(drive),
            output=WaveformModel.from_waveform(pressure),
            amplitude_pa=amplitude_pa,
            mean_pa=float(pressure.samples.mean()),
        )

    @app.post("/api/replicate", response_model=ReplicateResponse)
    def replicate(req: ReplicateRequest) -> ReplicateResponse:
        try:
            model = build_model(req.chamber)
            if req.pulse.waveform is not None:
                pulse = pulse_from_waveform(
                    req.pulse.waveform.to_waveform(), req.pulse.f0, req.pulse.n_harmonics
                )
            else:
                pulse = reference_turbine_pulse(
                    req.pulse.f0, req.pulse.peak_pa, req.pulse.n_harmonics
                )
            bench = SimulatedChamber(model, req.sample_rate)
            resp = measure_frequency_response(
                bench,
                f0=pulse.f0,
                max_k=pulse.spectrum.max_k(),
                amplitude=req.bode_amplitude_v,
                offset=req.offset_v,
                sample_rate=req.sample_rate,
            )
            compensated = precompensate(pulse, resp) if req.compensate else None
            report, drive, target, achieved = roundtrip_traces(
                pulse,
                model,
                resp,
                req.drive_scale,
                compensate=req.compensate,
                n_periods=req.n_periods,
                offset=req.offset_v,
                sample_rate=req.sample_rate,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return ReplicateResponse(
            report=ReportModel.from_report(report),
            response=ResponseModel.from_response(resp),
            compensated=SpectrumModel.from_spectrum(compensated) if compensated else None,
            drive=WaveformModel.from_waveform(drive),
            target=WaveformModel.from_waveform(target),
            achieved=WaveformModel.from_waveform(achieved),
        )

    return app
