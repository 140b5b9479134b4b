"""Infrasound test-chamber toolkit.

A lumped-element simulator of a fan-pressurized chamber with a speaker-valve
modulator, plus the measurement pipeline that goes with it: static sweeps,
stepped-sine system identification, harmonic analysis of turbine-style
pressure pulses, and inverse-filter pre-compensation that reproduces a target
pulse inside the simulated chamber.
"""

from .signals import (
    Waveform,
    HarmonicComponent,
    HarmonicSpectrum,
    ResponseEntry,
    FrequencyResponse,
    wrap_phase,
    synthesize_harmonics,
    analyze_harmonics,
    taper_cosine,
    stepped_sine,
    pa_to_db,
    db_to_pa,
)
from .chamber import (
    FanCurve,
    ValveMap,
    ChamberModel,
    OperatingPoint,
    SimulatedChamber,
    load_pressure,
    pitot_speed,
    flow_from_speed,
    solve_operating_point,
    local_resistance,
    simulate,
    calibrate_valve_map,
    default_fan_curve,
    default_valve_map,
    default_chamber,
)
from .sysid import (
    SweepStep,
    SweepRecord,
    BodeRow,
    BodeTable,
    static_sweep,
    pool_operating_curve,
    measure_frequency_response,
    bode_export,
)
from .compensation import (
    PulseSpec,
    ReproductionReport,
    reference_turbine_pulse,
    load_pulse,
    precompensate,
    apply_response,
    generate_drive,
    verify_roundtrip,
)

__version__ = "0.1.0"

__all__ = [
    "Waveform",
    "HarmonicComponent",
    "HarmonicSpectrum",
    "ResponseEntry",
    "FrequencyResponse",
    "wrap_phase",
    "synthesize_harmonics",
    "analyze_harmonics",
    "taper_cosine",
    "stepped_sine",
    "pa_to_db",
    "db_to_pa",
    "FanCurve",
    "ValveMap",
    "ChamberModel",
    "OperatingPoint",
    "SimulatedChamber",
    "load_pressure",
    "pitot_speed",
    "flow_from_speed",
    "solve_operating_point",
    "local_resistance",
    "simulate",
    "calibrate_valve_map",
    "default_fan_curve",
    "default_valve_map",
    "default_chamber",
    "SweepStep",
    "SweepRecord",
    "BodeRow",
    "BodeTable",
    "static_sweep",
    "pool_operating_curve",
    "measure_frequency_response",
    "bode_export",
    "PulseSpec",
    "ReproductionReport",
    "reference_turbine_pulse",
    "load_pulse",
    "precompensate",
    "apply_response",
    "generate_drive",
    "verify_roundtrip",
    "__version__",
]
