"""System identification against a voltage-in black box.

Two bench procedures: a static staircase sweep (steady pressure/flow per
drive level) and stepped-sine frequency response measurement (tapered sine
bursts, one per harmonic, projected onto the test frequency).

The black box is anything implementing the small protocols below; the
simulator's adapter (chamber.SimulatedChamber) is the usual subject, but
recorded hardware data wrapped in the same interface works identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .signals import (
    FrequencyResponse,
    ResponseEntry,
    Waveform,
    stepped_sine,
    wrap_phase,
)

NOISE_FLOOR = 1e-9  # output projections below this are unusable

# Burst protocol: 20 cycles, 2 tapered at each end, and 2 more sacrificed at
# the head for settling; cycles 5 through 18 are analyzed.
DEFAULT_CYCLES = 20
DEFAULT_TAPER_CYCLES = 2
SETTLE_CYCLES = 2


class SweepSystem(Protocol):
    def hold(self, v: float, duration_s: float) -> tuple[Waveform, Waveform]:
        """Hold a constant drive; return (pressure Pa, flow L/s) traces."""
        ...


class DriveSystem(Protocol):
    def respond(self, drive: Waveform) -> Waveform:
        """Play a drive waveform; return the system output trace."""
        ...


@dataclass(frozen=True)
class SweepStep:
    v: float
    pressure: Waveform
    flow: Waveform


@dataclass(frozen=True)
class SweepRecord:
    """Staircase sweep result; error/failed_at_v mark an aborted sweep."""

    steps: tuple[SweepStep, ...]
    hold_s: float
    error: str | None = None
    failed_at_v: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        vs = [s.v for s in self.steps]
        if any(b <= a for a, b in zip(vs, vs[1:])):
            raise ValueError(f"sweep steps must be ordered by increasing v, got {vs}")
        rates = {s.pressure.sample_rate for s in self.steps} | {
            s.flow.sample_rate for s in self.steps
        }
        if len(rates) > 1:
            raise ValueError(f"all sweep traces must share one sample rate, got {sorted(rates)}")


@dataclass(frozen=True)
class BodeRow:
    k: int
    f_hz: float
    gain_db: float
    phase_deg: float


@dataclass(frozen=True)
class BodeTable:
    rows: tuple[BodeRow, ...]
    unwrapped: bool = True
    excluded_ks: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "excluded_ks", tuple(self.excluded_ks))
        ks = [r.k for r in self.rows]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError(f"bode rows must be ordered by increasing k, got {ks}")


# ---------------------------------------------------------------------------
# static sweep
# ---------------------------------------------------------------------------

def static_sweep(
    system: SweepSystem,
    v_start: float = -5.0,
    v_end: float = 5.0,
    step: float = 0.5,
    hold_s: float = 10.0,
) -> SweepRecord:
    """Staircase the drive from v_start to v_end, holding each level.

    If the system rejects a voltage (raises ValueError), the sweep aborts and
    the partial record carries the error text and the offending level.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if v_end < v_start:
        raise ValueError(f"v_end ({v_end}) must be >= v_start ({v_start})")
    if not hold_s > 0:
        raise ValueError(f"hold_s must be positive, got {hold_s}")
    n_whole = int(math.floor((v_end - v_start) / step + 1e-9))
    voltages = [min(v_start + i * step, v_end) for i in range(n_whole + 1)]
    if voltages[-1] < v_end - 1e-9 * max(1.0, abs(v_end)):
        voltages.append(v_end)  # non-divisible span still ends on v_end
    steps: list[SweepStep] = []
    for v in voltages:
        try:
            pressure, flow = system.hold(v, hold_s)
        except ValueError as exc:
            return SweepRecord(tuple(steps), hold_s, error=str(exc), failed_at_v=v)
        steps.append(SweepStep(v, pressure, flow))
    return SweepRecord(tuple(steps), hold_s)


def _steady(wave: Waveform) -> float:
    """Steady value of a hold trace: mean over the final 50% of the window."""
    n = wave.samples.size
    return float(wave.samples[n // 2:].mean())


def steady_values(record: SweepRecord) -> list[tuple[float, float, float]]:
    """Per-step (v, steady pressure Pa, steady flow L/s)."""
    return [(s.v, _steady(s.pressure), _steady(s.flow)) for s in record.steps]


def pool_operating_curve(record: SweepRecord) -> list[tuple[float, float]]:
    """Pool the sweep's steady states into one (flow, pressure) curve.

    Returns one (q L/s, p Pa) point per step, ordered by flow: the measured
    capability curve of the air source, suitable for FanCurve.tabulated once
    extended to its endpoints.
    """
    if not record.steps:
        raise ValueError("cannot pool an empty sweep record")
    points = [(q, p) for _, p, q in steady_values(record)]
    return sorted(points)


# ---------------------------------------------------------------------------
# stepped-sine frequency response
# ---------------------------------------------------------------------------

def fit_tone(wave: Waveform, f: float, start_s: float, end_s: float) -> tuple[float, float]:
    """Least-squares fit of a sin(2 pi f t + phi) + c over [start_s, end_s).

    Returns (a, phi). The constant term absorbs any DC level; the fit is
    exact for a pure in-window sinusoid regardless of window alignment, which
    a plain single-bin correlation only achieves over integer periods.
    """
    i0 = int(round(start_s * wave.sample_rate))
    i1 = int(round(end_s * wave.sample_rate))
    if not (0 <= i0 < i1 <= wave.samples.size):
        raise ValueError(
            f"analysis window [{start_s}, {end_s}) s outside waveform of "
            f"{wave.duration} s"
        )
    t = np.arange(i0, i1, dtype=np.float64) / wave.sample_rate
    w = 2.0 * np.pi * f * t
    basis = np.column_stack([np.sin(w), np.cos(w), np.ones(t.size)])
    coef, *_ = np.linalg.lstsq(basis, wave.samples[i0:i1], rcond=None)
    return math.hypot(coef[0], coef[1]), math.atan2(coef[1], coef[0])


def measure_frequency_response(
    system: DriveSystem,
    f0: float = 0.8,
    max_k: int = 25,
    amplitude: float = 0.5,
    offset: float = 1.0,
    sample_rate: float = 1000.0,
    cycles: int = DEFAULT_CYCLES,
    taper_cycles: int = DEFAULT_TAPER_CYCLES,
) -> FrequencyResponse:
    """Stepped-sine identification at every harmonic k*f0, k = 1..max_k.

    Per harmonic: drive a tapered sine burst, record the output, discard the
    tapered cycles plus SETTLE_CYCLES more at the head, and project drive and
    output onto the test frequency. Stored per entry: gain b_k = |out|/|in|
    (output in sensor volts per drive volt) and phase delay theta_k =
    phi_in - phi_out, wrapped, so theta_k > 0 means the output lags. Entries
    whose output projection sits below NOISE_FLOOR are flagged unusable.
    """
    if not f0 > 0:
        raise ValueError(f"f0 must be positive, got {f0}")
    if max_k < 1:
        raise ValueError(f"max_k must be >= 1, got {max_k}")
    guard_head = taper_cycles + SETTLE_CYCLES
    if cycles <= guard_head + taper_cycles:
        raise ValueError(
            f"cycles ({cycles}) leaves no analysis window after guards "
            f"({guard_head} head + {taper_cycles} tail)"
        )
    entries = []
    for k in range(1, max_k + 1):
        f = k * f0
        drive = stepped_sine(f, cycles, amplitude, offset, sample_rate, taper_cycles)
        out = system.respond(drive)
        if out.samples.size != drive.samples.size or out.sample_rate != drive.sample_rate:
            raise ValueError(
                f"system output shape mismatch at k={k}: "
                f"{out.samples.size}@{out.sample_rate} vs "
                f"{drive.samples.size}@{drive.sample_rate}"
            )
        start_s = guard_head / f
        end_s = (cycles - taper_cycles) / f
        a_in, phi_in = fit_tone(drive, f, start_s, end_s)
        a_out, phi_out = fit_tone(out, f, start_s, end_s)
        usable = a_out >= NOISE_FLOOR
        entries.append(
            ResponseEntry(k, a_out / a_in, wrap_phase(phi_in - phi_out), usable)
        )
    return FrequencyResponse(f0, tuple(entries))


def bode_export(resp: FrequencyResponse, reference_gain: float = 1.0) -> BodeTable:
    """Convert a response to plot-ready rows.

    gain_db = 20 log10(b_k / reference_gain); phases in degrees, unwrapped by
    placing each successive value within +-180 deg of its predecessor.
    Unusable entries are excluded and noted in excluded_ks.
    """
    if not reference_gain > 0:
        raise ValueError(f"reference_gain must be positive, got {reference_gain}")
    rows = []
    excluded = []
    prev_deg: float | None = None
    for e in resp.entries:
        if not e.usable:
            excluded.append(e.k)
            continue
        raw_deg = math.degrees(e.phase_delay_rad)
        if prev_deg is None:
            deg = raw_deg
        else:
            deg = raw_deg + 360.0 * round((prev_deg - raw_deg) / 360.0)
        prev_deg = deg
        rows.append(
            BodeRow(e.k, e.k * resp.f0, 20.0 * math.log10(e.gain / reference_gain), deg)
        )
    return BodeTable(tuple(rows), unwrapped=True, excluded_ks=tuple(excluded))
