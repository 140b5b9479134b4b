"""HTTP facade: JSON in, JSON out, domain errors as 400, shape errors as 422."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from infrachamber import __version__
from infrachamber.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/api/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": __version__}


def test_sweep_endpoint(client):
    r = client.post("/api/sweep", json={"hold_s": 0.1, "step": 1.0})
    assert r.status_code == 200
    body = r.json()
    assert len(body["steps"]) == 11
    assert body["error"] is None
    assert body["steps"][0]["v"] == -5.0
    assert body["steps"][0]["pressure"]["unit"] == "pascals"
    qs = [q for q, _ in body["operating_curve"]]
    assert qs == sorted(qs)
    assert len(qs) == 11


def test_sweep_rejects_domain_error(client):
    # non-monotone valve map is a config error, not a crash
    bad = {"valve": {"points": [[-5.0, 1e-3], [0.0, 2e-3], [5.0, 5e-4]]}}
    r = client.post("/api/sweep", json={"chamber": bad, "hold_s": 0.1})
    assert r.status_code == 400
    assert "area" in r.json()["detail"] or "valve" in r.json()["detail"]


def test_request_shape_errors_are_422(client):
    r = client.post("/api/sweep", json={"hold_s": 0.1, "bogus_knob": 3})
    assert r.status_code == 422
    r = client.post("/api/tone", json={"freq_hz": 0.0})
    assert r.status_code == 422


def test_bode_endpoint(client):
    r = client.post("/api/bode", json={"f0": 2.0, "max_k": 3})
    assert r.status_code == 200
    body = r.json()
    assert [e["k"] for e in body["response"]["entries"]] == [1, 2, 3]
    assert [row["f_hz"] for row in body["table"]["rows"]] == [2.0, 4.0, 6.0]
    assert body["table"]["unwrapped"] is True
    assert body["table"]["excluded_ks"] == []
    gains = [e["gain"] for e in body["response"]["entries"]]
    assert gains[0] > gains[-1]


def test_tone_endpoint(client):
    r = client.post("/api/tone", json={"freq_hz": 0.8})
    assert r.status_code == 200
    body = r.json()
    assert body["drive"]["unit"] == "volts"
    assert body["output"]["unit"] == "pascals"
    assert len(body["output"]["samples"]) == len(body["drive"]["samples"]) == 25000
    assert body["amplitude_pa"] == pytest.approx(12.6, abs=0.5)
    assert body["mean_pa"] == pytest.approx(50.0, abs=3.0)


def test_replicate_endpoint_compensated(client):
    r = client.post(
        "/api/replicate",
        json={"pulse": {"n_harmonics": 8}, "n_periods": 8},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["report"]["periods_compared"] == 2
    assert body["report"]["rms_rel_err"] < 0.05
    assert body["compensated"] is not None
    assert len(body["compensated"]["components"]) == 8
    assert body["target"]["unit"] == "pascals"
    assert len(body["target"]["samples"]) == len(body["achieved"]["samples"])


def test_replicate_endpoint_uncompensated_control(client):
    r = client.post(
        "/api/replicate",
        json={"pulse": {"n_harmonics": 8}, "n_periods": 8, "compensate": False},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["compensated"] is None
    assert body["report"]["rms_rel_err"] > 0.05


def test_replicate_accepts_measured_waveform(client):
    # build a 2-period pulse train via the reference spectrum, feed it back in
    from infrachamber.compensation import reference_turbine_pulse
    from infrachamber.signals import synthesize_harmonics

    pulse = reference_turbine_pulse(n_harmonics=6)
    wave = synthesize_harmonics(pulse.spectrum, 2 / 0.8, 1000.0, unit="pascals")
    r = client.post(
        "/api/replicate",
        json={
            "pulse": {
                "n_harmonics": 6,
                "waveform": {
                    "samples": wave.samples.tolist(),
                    "sample_rate": 1000.0,
                    "unit": "pascals",
                },
            },
            "n_periods": 8,
        },
    )
    assert r.status_code == 200
    assert r.json()["report"]["rms_rel_err"] < 0.05


def test_replicate_domain_error_is_400(client):
    # drive_scale far too large pushes the drive out of the valve range
    r = client.post("/api/replicate", json={"drive_scale": 50.0, "n_periods": 8})
    assert r.status_code == 400
    assert "drive" in r.json()["detail"]
