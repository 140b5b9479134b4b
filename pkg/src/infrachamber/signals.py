"""Waveform and spectrum primitives.

Sampling, harmonic synthesis/analysis, cosine tapering, and pressure/decibel
conversions. Everything here is a pure function; the dataclasses are frozen.

Phase convention used throughout the package: sine phase. A component
(k, a, phi) of a spectrum with fundamental f0 contributes

    a * sin(2*pi*f0*k*t + phi)

and phases are stored wrapped to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

P_REF_PA = 20e-6  # hearing-threshold reference pressure

Unit = Literal["volts", "pascals", "liters_per_second", "dimensionless"]

_UNITS = ("volts", "pascals", "liters_per_second", "dimensionless")


def wrap_phase(phi: float) -> float:
    """Wrap an angle in radians to the interval (-pi, pi].

    In-range values pass through bit-exactly; out-of-range values are reduced
    with IEEE remainder (exact), so wrapped phase arithmetic loses no
    precision beyond the additions the caller already performed.
    """
    if -math.pi < phi <= math.pi:
        return float(phi)
    w = math.remainder(phi, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled real signal with a unit tag.

    meta carries non-signal annotations (e.g. clamp counts from the
    simulator) and never participates in comparisons or file formats.
    """

    samples: np.ndarray
    sample_rate: float
    unit: Unit = "dimensionless"
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size == 0:
            raise ValueError("samples must be non-empty")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.unit not in _UNITS:
            raise ValueError(f"unknown unit {self.unit!r}, expected one of {_UNITS}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size, dtype=np.float64) / self.sample_rate


@dataclass(frozen=True)
class HarmonicComponent:
    k: int
    magnitude: float
    phase_rad: float

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"harmonic index must be >= 1, got {self.k}")
        if self.magnitude < 0:
            raise ValueError(f"magnitude must be >= 0, got {self.magnitude}")
        if not (-math.pi < self.phase_rad <= math.pi):
            raise ValueError(
                f"phase {self.phase_rad} outside (-pi, pi]; wrap with wrap_phase()"
            )


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Fundamental frequency plus per-harmonic (magnitude, phase) pairs."""

    f0: float
    components: tuple[HarmonicComponent, ...]

    def __post_init__(self) -> None:
        if not self.f0 > 0:
            raise ValueError(f"f0 must be positive, got {self.f0}")
        ks = [c.k for c in self.components]
        if any(k2 <= k1 for k1, k2 in zip(ks, ks[1:])):
            raise ValueError(f"harmonic indices must be strictly increasing, got {ks}")
        object.__setattr__(self, "components", tuple(self.components))

    def max_k(self) -> int:
        return self.components[-1].k if self.components else 0


@dataclass(frozen=True)
class ResponseEntry:
    """One measured harmonic of a system response.

    gain is dimensionless output/input; phase_delay_rad > 0 means the output
    lags the input. Entries whose output projection fell below the noise
    floor are kept but flagged unusable.
    """

    k: int
    gain: float
    phase_delay_rad: float
    usable: bool = True

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"harmonic index must be >= 1, got {self.k}")
        if self.usable and not self.gain > 0:
            raise ValueError(f"usable entry k={self.k} requires gain > 0, got {self.gain}")
        if self.gain < 0:
            raise ValueError(f"gain must be >= 0, got {self.gain}")


@dataclass(frozen=True)
class FrequencyResponse:
    f0: float
    entries: tuple[ResponseEntry, ...]

    def __post_init__(self) -> None:
        if not self.f0 > 0:
            raise ValueError(f"f0 must be positive, got {self.f0}")
        ks = [e.k for e in self.entries]
        if any(k2 <= k1 for k1, k2 in zip(ks, ks[1:])):
            raise ValueError(f"entry indices must be strictly increasing, got {ks}")
        object.__setattr__(self, "entries", tuple(self.entries))

    def entry_for(self, k: int) -> ResponseEntry | None:
        for e in self.entries:
            if e.k == k:
                return e
        return None


# ---------------------------------------------------------------------------
# synthesis / analysis
# ---------------------------------------------------------------------------

def synthesize_harmonics(
    spectrum: HarmonicSpectrum,
    duration: float,
    sample_rate: float,
    offset: float = 0.0,
    unit: Unit = "dimensionless",
) -> Waveform:
    """Sample offset + sum over components of a_k*sin(2*pi*f0*k*t + phi_k).

    The highest harmonic must sit below Nyquist.
    """
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if not sample_rate > 0:
        raise ValueError(f"sample_rate must be positive, got {sample_rate}")
    for c in spectrum.components:
        if 2.0 * spectrum.f0 * c.k >= sample_rate:
            raise ValueError(
                f"harmonic k={c.k} at {spectrum.f0 * c.k} Hz violates Nyquist "
                f"for sample_rate {sample_rate} Hz"
            )
    n = int(round(duration * sample_rate))
    t = np.arange(n, dtype=np.float64) / sample_rate
    x = np.full(n, float(offset), dtype=np.float64)
    for c in spectrum.components:
        x += c.magnitude * np.sin(2.0 * np.pi * spectrum.f0 * c.k * t + c.phase_rad)
    return Waveform(x, sample_rate, unit)


def analyze_harmonics(wave: Waveform, f0: float, max_k: int) -> HarmonicSpectrum:
    """Single-bin projection of the mean-removed waveform onto each harmonic.

    Requires an integer number of f0 periods (within one sample), which makes
    the projection leakage-free. The DC level is deliberately not folded into
    the components; it is the waveform mean, available to any caller.
    """
    if not f0 > 0:
        raise ValueError(f"f0 must be positive, got {f0}")
    if max_k < 1:
        raise ValueError(f"max_k must be >= 1, got {max_k}")
    if 2.0 * f0 * max_k >= wave.sample_rate:
        raise ValueError(
            f"harmonic k={max_k} at {f0 * max_k} Hz violates Nyquist "
            f"for sample_rate {wave.sample_rate} Hz"
        )
    n = wave.samples.size
    periods = n * f0 / wave.sample_rate
    n_ideal = round(periods) * wave.sample_rate / f0
    if round(periods) < 1 or abs(n - n_ideal) > 1.0:
        raise ValueError(
            f"waveform spans {periods:.6f} periods of {f0} Hz; an integer period "
            f"count is required to avoid spectral leakage"
        )
    x = wave.samples - wave.samples.mean()
    t = wave.times()
    comps = []
    for k in range(1, max_k + 1):
        w = 2.0 * np.pi * f0 * k * t
        c = 2.0 / n * float(np.dot(x, np.sin(w)))
        s = 2.0 / n * float(np.dot(x, np.cos(w)))
        comps.append(HarmonicComponent(k, math.hypot(c, s), wrap_phase(math.atan2(s, c))))
    return HarmonicSpectrum(f0, tuple(comps))


# ---------------------------------------------------------------------------
# tapering and test tones
# ---------------------------------------------------------------------------

def taper_cosine(wave: Waveform, f: float, taper_cycles: int) -> Waveform:
    """Raised-cosine ramp over the first and last taper_cycles/f seconds.

    The ramp acts about the waveform's mean level, so the endpoints land
    exactly on the mean. Interior samples are copied bit-identically.
    """
    if not f > 0:
        raise ValueError(f"f must be positive, got {f}")
    if taper_cycles < 0:
        raise ValueError(f"taper_cycles must be >= 0, got {taper_cycles}")
    if taper_cycles == 0:
        return Waveform(wave.samples.copy(), wave.sample_rate, wave.unit)
    n = wave.samples.size
    n_ramp = int(round(taper_cycles / f * wave.sample_rate))
    if 2 * n_ramp > n:
        raise ValueError(
            f"taper of {taper_cycles} cycles ({n_ramp} samples per end) exceeds "
            f"half the waveform length ({n} samples)"
        )
    mean = float(wave.samples.mean())
    ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(n_ramp, dtype=np.float64) / n_ramp))
    x = wave.samples.copy()
    x[:n_ramp] = mean + (x[:n_ramp] - mean) * ramp
    x[n - n_ramp:] = mean + (x[n - n_ramp:] - mean) * ramp[::-1]
    return Waveform(x, wave.sample_rate, wave.unit)


def stepped_sine(
    f: float,
    cycles: int = 20,
    amplitude: float = 0.5,
    offset: float = 1.0,
    sample_rate: float = 1000.0,
    taper_cycles: int = 2,
) -> Waveform:
    """Tapered sine burst: offset + amplitude*sin(2*pi*f*t) over cycles/f seconds."""
    if not f > 0:
        raise ValueError(f"f must be positive, got {f}")
    if cycles <= 2 * taper_cycles:
        raise ValueError(
            f"cycles ({cycles}) must exceed twice taper_cycles ({taper_cycles})"
        )
    n = int(round(cycles / f * sample_rate))
    t = np.arange(n, dtype=np.float64) / sample_rate
    x = offset + amplitude * np.sin(2.0 * np.pi * f * t)
    return taper_cosine(Waveform(x, sample_rate, "volts"), f, taper_cycles)


# ---------------------------------------------------------------------------
# decibel conversions
# ---------------------------------------------------------------------------

def pa_to_db(p: float) -> float:
    """Sound pressure level: 20*log10(p / 20e-6 Pa)."""
    if not p > 0:
        raise ValueError(f"pressure must be positive, got {p}")
    return 20.0 * math.log10(p / P_REF_PA)


def db_to_pa(level_db: float) -> float:
    return P_REF_PA * 10.0 ** (level_db / 20.0)
