"""Waveform container, harmonic analysis/synthesis, tapering, dB math."""

from __future__ import annotations

import math

import numpy as np
import pytest

from infrachamber.signals import (
    HarmonicComponent,
    HarmonicSpectrum,
    ResponseEntry,
    FrequencyResponse,
    Waveform,
    analyze_harmonics,
    db_to_pa,
    pa_to_db,
    stepped_sine,
    synthesize_harmonics,
    taper_cosine,
    wrap_phase,
)


# ---------------------------------------------------------------------------
# wrap_phase
# ---------------------------------------------------------------------------

def test_wrap_phase_identities():
    assert wrap_phase(0.0) == 0.0
    assert wrap_phase(math.pi) == math.pi
    # -pi folds to +pi: range is (-pi, pi]
    assert wrap_phase(-math.pi) == math.pi
    assert wrap_phase(2 * math.pi) == pytest.approx(0.0, abs=1e-15)
    assert wrap_phase(3 * math.pi / 2) == pytest.approx(-math.pi / 2, abs=1e-15)


def test_wrap_phase_in_range_is_passthrough():
    rng = np.random.default_rng(11)
    for phi in rng.uniform(-math.pi + 1e-9, math.pi, 200):
        assert wrap_phase(float(phi)) == float(phi)


def test_wrap_phase_preserves_angle():
    rng = np.random.default_rng(12)
    for phi in rng.uniform(-50.0, 50.0, 500):
        w = wrap_phase(float(phi))
        assert -math.pi < w <= math.pi
        assert math.sin(w) == pytest.approx(math.sin(phi), abs=1e-12)
        assert math.cos(w) == pytest.approx(math.cos(phi), abs=1e-12)


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------

def test_waveform_validation():
    with pytest.raises(ValueError, match="1-D"):
        Waveform(np.zeros((2, 2)), 100.0)
    with pytest.raises(ValueError, match="non-empty"):
        Waveform(np.array([]), 100.0)
    with pytest.raises(ValueError, match="sample_rate"):
        Waveform(np.zeros(4), 0.0)
    with pytest.raises(ValueError, match="unit"):
        Waveform(np.zeros(4), 100.0, "furlongs")


def test_waveform_duration_and_times():
    w = Waveform([0.0, 1.0, 2.0, 3.0], 2.0, "volts")
    assert w.duration == 2.0
    assert np.array_equal(w.times(), [0.0, 0.5, 1.0, 1.5])
    assert w.samples.dtype == np.float64


def test_harmonic_component_validation():
    HarmonicComponent(1, 0.5, math.pi)  # +pi is in range
    with pytest.raises(ValueError):
        HarmonicComponent(0, 0.5, 0.0)
    with pytest.raises(ValueError):
        HarmonicComponent(1, -0.1, 0.0)
    with pytest.raises(ValueError):
        HarmonicComponent(1, 0.5, -math.pi)  # -pi is out of range
    with pytest.raises(ValueError):
        HarmonicComponent(1, 0.5, 4.0)


def test_spectrum_requires_increasing_harmonics():
    c1 = HarmonicComponent(1, 1.0, 0.0)
    c2 = HarmonicComponent(2, 0.5, 0.1)
    s = HarmonicSpectrum(0.8, (c1, c2))
    assert s.max_k() == 2
    with pytest.raises(ValueError, match="increasing"):
        HarmonicSpectrum(0.8, (c2, c1))
    with pytest.raises(ValueError, match="f0"):
        HarmonicSpectrum(0.0, (c1,))


def test_response_entry_usable_requires_positive_gain():
    ResponseEntry(1, 0.5, 0.1)
    ResponseEntry(2, 0.0, 0.0, usable=False)  # dead channel is representable
    with pytest.raises(ValueError):
        ResponseEntry(1, 0.0, 0.1, usable=True)


def test_frequency_response_lookup():
    resp = FrequencyResponse(
        0.8, (ResponseEntry(1, 0.5, 0.1), ResponseEntry(3, 0.2, 0.3))
    )
    assert resp.entry_for(3).gain == 0.2
    assert resp.entry_for(2) is None


# ---------------------------------------------------------------------------
# synthesis / analysis round trip
# ---------------------------------------------------------------------------

def _random_spectrum(rng: np.random.Generator, f0: float, max_k: int) -> HarmonicSpectrum:
    ks = sorted(rng.choice(np.arange(1, max_k + 1), size=rng.integers(1, max_k + 1), replace=False))
    comps = tuple(
        HarmonicComponent(
            int(k),
            float(rng.uniform(0.01, 2.0)),
            wrap_phase(float(rng.uniform(-math.pi, math.pi))),
        )
        for k in ks
    )
    return HarmonicSpectrum(f0, comps)


def test_analyze_recovers_synthesized_spectrum():
    rng = np.random.default_rng(21)
    for _ in range(20):
        f0 = float(rng.choice([0.5, 0.8, 1.0, 2.0, 4.0]))
        rate = float(rng.choice([500.0, 1000.0, 2000.0]))
        periods = int(rng.integers(1, 6))
        spectrum = _random_spectrum(rng, f0, 10)
        wave = synthesize_harmonics(
            spectrum, periods / f0, rate, offset=float(rng.uniform(-3, 3))
        )
        got = analyze_harmonics(wave, f0, 10)
        by_k = {c.k: c for c in got.components}
        for c in spectrum.components:
            assert by_k[c.k].magnitude == pytest.approx(c.magnitude, abs=1e-9)
            assert wrap_phase(by_k[c.k].phase_rad - c.phase_rad) == pytest.approx(0.0, abs=1e-9)
        absent = set(range(1, 11)) - {c.k for c in spectrum.components}
        for k in absent:
            assert by_k[k].magnitude < 1e-9


def test_analyze_rejects_partial_periods():
    wave = Waveform(np.zeros(1500), 1000.0)  # 1.2 periods of 0.8 Hz
    with pytest.raises(ValueError, match="integer period"):
        analyze_harmonics(wave, 0.8, 3)


def test_synthesize_rejects_nyquist_violation():
    s = HarmonicSpectrum(10.0, (HarmonicComponent(6, 1.0, 0.0),))
    with pytest.raises(ValueError, match="k=6"):
        synthesize_harmonics(s, 1.0, 100.0)  # 60 Hz harmonic at 100 Hz rate
    wave = Waveform(np.zeros(100), 100.0)
    with pytest.raises(ValueError, match="Nyquist"):
        analyze_harmonics(wave, 10.0, 6)


def test_analyzer_ignores_dc():
    s = HarmonicSpectrum(1.0, (HarmonicComponent(2, 0.7, 1.0),))
    wave = synthesize_harmonics(s, 3.0, 600.0, offset=42.0)
    got = analyze_harmonics(wave, 1.0, 2)
    assert got.components[1].magnitude == pytest.approx(0.7, abs=1e-12)


# ---------------------------------------------------------------------------
# taper / stepped sine
# ---------------------------------------------------------------------------

def test_taper_preserves_interior_exactly():
    rng = np.random.default_rng(31)
    x = rng.normal(2.0, 1.0, 1000)
    wave = Waveform(x, 100.0, "volts")
    tapered = taper_cosine(wave, 1.0, 2)  # 200-sample ramps
    assert np.array_equal(tapered.samples[200:800], x[200:800])
    mean = x.mean()
    assert tapered.samples[0] == pytest.approx(mean)
    # ramp is monotone in deviation from the mean for a one-sided signal
    assert abs(tapered.samples[0] - mean) <= abs(x[0] - mean) + 1e-12


def test_taper_zero_cycles_copies():
    wave = Waveform([1.0, 2.0, 3.0], 10.0)
    out = taper_cosine(wave, 1.0, 0)
    assert np.array_equal(out.samples, wave.samples)
    assert out.samples is not wave.samples


def test_taper_too_long_rejected():
    wave = Waveform(np.ones(100), 100.0)
    with pytest.raises(ValueError, match="exceeds"):
        taper_cosine(wave, 1.0, 1)  # 100-sample ramp per end into 100 samples


def test_stepped_sine_shape():
    w = stepped_sine(2.0, cycles=10, amplitude=0.5, offset=1.0, sample_rate=1000.0)
    assert w.unit == "volts"
    assert w.samples.size == 5000
    assert w.samples[0] == pytest.approx(1.0)  # taper starts on the mean
    assert w.samples.max() <= 1.5 + 1e-12
    assert w.samples.min() >= 0.5 - 1e-12
    # interior reaches full amplitude
    assert w.samples.max() == pytest.approx(1.5, abs=1e-3)


def test_stepped_sine_needs_room_for_tapers():
    with pytest.raises(ValueError, match="taper"):
        stepped_sine(1.0, cycles=4, taper_cycles=2)


# ---------------------------------------------------------------------------
# dB conversions
# ---------------------------------------------------------------------------

def test_db_reference_level():
    assert pa_to_db(20e-6) == pytest.approx(0.0, abs=1e-12)


def test_db_round_trip():
    rng = np.random.default_rng(41)
    for p in rng.uniform(1e-5, 1e3, 100):
        assert db_to_pa(pa_to_db(float(p))) == pytest.approx(float(p), rel=1e-12)


def test_db_rejects_nonpositive():
    with pytest.raises(ValueError):
        pa_to_db(0.0)
    with pytest.raises(ValueError):
        pa_to_db(-1.0)
