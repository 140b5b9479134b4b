"""Command-line client for the experiment service.

Each subcommand posts one request to the service (in-process by default,
or a remote instance via --server) and writes the results to --out as
CSV/JSON/SVG. Outputs are byte-deterministic for identical inputs: no
timestamps, repr-serialized floats, deterministic plots.

Exit codes: 0 success, 1 verification failure (report still written),
2 configuration/IO/service error (nothing written on config errors).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from . import __version__
from .io import (
    atomic_write_text,
    chamber_from_dict,
    read_waveform_csv,
    response_from_dict,
    spectrum_from_dict,
    write_bode_csv,
    write_report_json,
    write_response_json,
    write_spectrum_json,
    write_sweep_record,
    write_waveform_csv,
)
from .plots import Panel, Series, render_svg
from .signals import Waveform
from .sysid import BodeRow, BodeTable, SweepRecord, SweepStep, steady_values

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2

VERIFY_RMS_LIMIT = 0.05  # replicate fails verification above this relative RMS error


class CliError(Exception):
    """Configuration, IO, or service error; maps to exit code 2."""


# ---------------------------------------------------------------------------
# service client
# ---------------------------------------------------------------------------

async def _post_in_process(path: str, payload: dict) -> tuple[int, str]:
    from .service.app import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(transport=transport, base_url="http://service.local") as client:
        resp = await client.post(path, json=payload, timeout=None)
        return resp.status_code, resp.text


def _describe_error(status: int, body: str) -> str:
    try:
        detail = json.loads(body).get("detail")
    except (json.JSONDecodeError, AttributeError):
        detail = None
    if isinstance(detail, str):
        return detail
    if isinstance(detail, list):  # pydantic validation errors
        parts = []
        for item in detail:
            loc = ".".join(str(x) for x in item.get("loc", []) if x != "body")
            msg = item.get("msg", "invalid")
            parts.append(f"{loc}: {msg}" if loc else msg)
        return "invalid request: " + "; ".join(parts)
    return f"service error (HTTP {status})"


def post_request(server: str | None, path: str, payload: dict) -> dict:
    """POST to the experiment service; in-process app when server is None."""
    try:
        if server is None:
            status, body = asyncio.run(_post_in_process(path, payload))
        else:
            resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
            status, body = resp.status_code, resp.text
    except httpx.HTTPError as exc:
        raise CliError(f"service request failed: {exc}") from exc
    if status != 200:
        raise CliError(_describe_error(status, body))
    return json.loads(body)


# ---------------------------------------------------------------------------
# payload <-> domain plumbing
# ---------------------------------------------------------------------------

def load_chamber_config(path: str | None) -> dict | None:
    """Read and validate the chamber config before anything is written."""
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise CliError(f"chamber config not found: {p}")
    try:
        config = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"chamber config {p} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise CliError(f"chamber config {p} must be a JSON object")
    try:
        chamber_from_dict(config)
    except ValueError as exc:
        raise CliError(f"chamber config {p}: {exc}") from exc
    return config


def _waveform_from_payload(d: dict) -> Waveform:
    return Waveform(d["samples"], float(d["sample_rate"]), d["unit"])


def _table_from_payload(d: dict) -> BodeTable:
    return BodeTable(
        tuple(
            BodeRow(int(r["k"]), float(r["f_hz"]), float(r["gain_db"]), float(r["phase_deg"]))
            for r in d["rows"]
        ),
        unwrapped=bool(d["unwrapped"]),
        excluded_ks=tuple(int(k) for k in d["excluded_ks"]),
    )


def _record_from_payload(d: dict) -> SweepRecord:
    return SweepRecord(
        tuple(
            SweepStep(
                float(s["v"]),
                _waveform_from_payload(s["pressure"]),
                _waveform_from_payload(s["flow"]),
            )
            for s in d["steps"]
        ),
        float(d["hold_s"]),
        error=d.get("error"),
        failed_at_v=d.get("failed_at_v"),
    )


def _write_run_json(
    path: Path,
    experiment: str,
    command: str,
    parameters: dict,
    results: dict,
    outputs: list[str],
) -> None:
    doc = {
        "experiment": experiment,
        "command": command,
        "tool_version": __version__,
        "parameters": parameters,
        "results": results,
        "outputs": outputs,
    }
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def _prepare_out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _run_sweep(args: argparse.Namespace) -> int:
    chamber = load_chamber_config(args.config)
    payload = {
        "chamber": chamber,
        "sample_rate": args.sample_rate,
        "v_start": args.v_start,
        "v_end": args.v_end,
        "step": args.step,
        "hold_s": args.hold,
    }
    result = post_request(args.server, "/api/sweep", payload)
    record = _record_from_payload(result)
    curve = [(float(q), float(p)) for q, p in result["operating_curve"]]

    out = _prepare_out_dir(args.out)
    write_sweep_record(out / "steps", record)
    outputs = ["steps/index.json"]
    if curve:
        lines = ["flow_lps,pressure_pa"]
        for q, p in curve:
            lines.append(f"{q!r},{p!r}")
        atomic_write_text(out / "operating_curve.csv", "\n".join(lines) + "\n")
        outputs.append("operating_curve.csv")

        levels = steady_values(record)
        panels = [
            Panel(
                series=(
                    Series(
                        [v for v, _, _ in levels],
                        [p for _, p, _ in levels],
                        "steady pressure",
                    ),
                ),
                x_label="drive (V)",
                y_label="pressure (Pa)",
                title="Steady chamber pressure vs valve drive",
            ),
            Panel(
                series=(
                    Series([q for q, _ in curve], [p for _, p in curve], "operating curve"),
                ),
                x_label="flow (L/s)",
                y_label="pressure (Pa)",
                title="Pooled fan operating curve",
            ),
        ]
        atomic_write_text(out / "operating_curve.svg", render_svg(panels))
        outputs.append("operating_curve.svg")

    _write_run_json(
        out / "run.json",
        experiment="static valve sweep pooling steady states into the fan operating curve",
        command="sweep",
        parameters={
            "chamber_config": args.config,
            "sample_rate": args.sample_rate,
            "v_start": args.v_start,
            "v_end": args.v_end,
            "step": args.step,
            "hold_s": args.hold,
        },
        results={
            "n_steps": len(record.steps),
            "error": record.error,
            "failed_at_v": record.failed_at_v,
        },
        outputs=outputs + ["run.json"],
    )

    if record.error is not None:
        print(
            f"sweep aborted at {record.failed_at_v} V: {record.error} "
            f"({len(record.steps)} steps kept)",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    print(f"sweep: {len(record.steps)} levels held for {record.hold_s} s each")
    print(f"wrote {out}/steps, operating_curve.csv, operating_curve.svg, run.json")
    return EXIT_OK


def _run_bode(args: argparse.Namespace) -> int:
    chamber = load_chamber_config(args.config)
    payload = {
        "chamber": chamber,
        "sample_rate": args.sample_rate,
        "f0": args.f0,
        "max_k": args.max_k,
        "amplitude_v": args.amplitude,
        "offset_v": args.offset,
        "reference_gain": args.reference_gain,
    }
    result = post_request(args.server, "/api/bode", payload)
    resp = response_from_dict(result["response"])
    table = _table_from_payload(result["table"])

    out = _prepare_out_dir(args.out)
    write_bode_csv(out / "bode.csv", table)
    write_response_json(out / "response.json", resp)
    outputs = ["bode.csv", "response.json"]
    if table.rows:
        f = [r.f_hz for r in table.rows]
        panels = [
            Panel(
                series=(Series(f, [r.gain_db for r in table.rows], "gain"),),
                x_label="frequency (Hz)",
                y_label="gain (dB)",
                title="Measured frequency response: gain",
            ),
            Panel(
                series=(Series(f, [r.phase_deg for r in table.rows], "phase delay"),),
                x_label="frequency (Hz)",
                y_label="phase delay (deg)",
                title="Measured frequency response: phase",
            ),
        ]
        atomic_write_text(out / "bode.svg", render_svg(panels))
        outputs.append("bode.svg")

    _write_run_json(
        out / "run.json",
        experiment="stepped-sine frequency response of the chamber (gain and phase per harmonic)",
        command="bode",
        parameters={
            "chamber_config": args.config,
            "sample_rate": args.sample_rate,
            "f0": args.f0,
            "max_k": args.max_k,
            "amplitude_v": args.amplitude,
            "offset_v": args.offset,
            "reference_gain": args.reference_gain,
        },
        results={
            "n_rows": len(table.rows),
            "excluded_ks": list(table.excluded_ks),
        },
        outputs=outputs + ["run.json"],
    )
    print(f"bode: {len(table.rows)} harmonics of {args.f0} Hz")
    print(f"wrote {out}/bode.csv, response.json, bode.svg, run.json")
    return EXIT_OK


def _run_tone(args: argparse.Namespace) -> int:
    chamber = load_chamber_config(args.config)
    payload = {
        "chamber": chamber,
        "sample_rate": args.sample_rate,
        "freq_hz": args.freq,
        "cycles": args.cycles,
        "taper_cycles": args.taper_cycles,
        "amplitude_v": args.amplitude,
        "offset_v": args.offset,
    }
    result = post_request(args.server, "/api/tone", payload)
    drive = _waveform_from_payload(result["drive"])
    output = _waveform_from_payload(result["output"])

    out = _prepare_out_dir(args.out)
    write_waveform_csv(out / "tone_drive.csv", drive)
    write_waveform_csv(out / "tone_output.csv", output)
    panels = [
        Panel(
            series=(Series(drive.times(), drive.samples, "drive"),),
            x_label="time (s)",
            y_label="drive (V)",
            title=f"Valve drive, {args.freq} Hz burst",
        ),
        Panel(
            series=(Series(output.times(), output.samples, "chamber pressure"),),
            x_label="time (s)",
            y_label="pressure (Pa)",
            title="Chamber pressure response",
        ),
    ]
    atomic_write_text(out / "tone.svg", render_svg(panels))

    _write_run_json(
        out / "run.json",
        experiment=f"single stepped-sine burst at {args.freq} Hz through the chamber",
        command="tone",
        parameters={
            "chamber_config": args.config,
            "sample_rate": args.sample_rate,
            "freq_hz": args.freq,
            "cycles": args.cycles,
            "taper_cycles": args.taper_cycles,
            "amplitude_v": args.amplitude,
            "offset_v": args.offset,
        },
        results={
            "amplitude_pa": result["amplitude_pa"],
            "mean_pa": result["mean_pa"],
        },
        outputs=["tone_drive.csv", "tone_output.csv", "tone.svg", "run.json"],
    )
    print(
        f"tone: {args.freq} Hz -> modulation amplitude "
        f"{result['amplitude_pa']:.3f} Pa about {result['mean_pa']:.2f} Pa"
    )
    print(f"wrote {out}/tone_drive.csv, tone_output.csv, tone.svg, run.json")
    return EXIT_OK


def _run_replicate(args: argparse.Namespace) -> int:
    chamber = load_chamber_config(args.config)
    pulse: dict = {
        "f0": args.f0,
        "n_harmonics": args.n_harmonics,
        "peak_pa": args.peak_pa,
    }
    if args.pulse is not None:
        path = Path(args.pulse)
        if not path.is_file():
            raise CliError(f"pulse waveform not found: {path}")
        try:
            wave = read_waveform_csv(path)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        pulse["waveform"] = {
            "samples": wave.samples.tolist(),
            "sample_rate": wave.sample_rate,
            "unit": wave.unit,
        }
    payload = {
        "chamber": chamber,
        "sample_rate": args.sample_rate,
        "pulse": pulse,
        "compensate": not args.no_compensate,
        "drive_scale": args.drive_scale,
        "n_periods": args.n_periods,
        "offset_v": args.offset,
        "bode_amplitude_v": args.amplitude,
    }
    result = post_request(args.server, "/api/replicate", payload)
    report = result["report"]
    resp = response_from_dict(result["response"])
    drive = _waveform_from_payload(result["drive"])
    target = _waveform_from_payload(result["target"])
    achieved = _waveform_from_payload(result["achieved"])

    out = _prepare_out_dir(args.out)
    atomic_write_text(out / "report.json", json.dumps(report, indent=2) + "\n")
    write_response_json(out / "response.json", resp)
    write_waveform_csv(out / "drive.csv", drive)
    write_waveform_csv(out / "target.csv", target)
    write_waveform_csv(out / "achieved.csv", achieved)
    outputs = ["report.json", "response.json", "drive.csv", "target.csv", "achieved.csv"]
    if result["compensated"] is not None:
        write_spectrum_json(
            out / "compensated_spectrum.json", spectrum_from_dict(result["compensated"])
        )
        outputs.append("compensated_spectrum.json")

    rate = target.sample_rate
    lines = ["time_s,target_pa,achieved_pa"]
    for i, (t, a) in enumerate(zip(target.samples, achieved.samples)):
        lines.append(f"{i / rate!r},{float(t)!r},{float(a)!r}")
    atomic_write_text(out / "overlay.csv", "\n".join(lines) + "\n")
    outputs.append("overlay.csv")

    panel = Panel(
        series=(
            Series(target.times(), target.samples, "target"),
            Series(achieved.times(), achieved.samples, "achieved"),
        ),
        x_label="time (s)",
        y_label="pressure (Pa)",
        title="Pulse replication: target vs achieved (retained periods)",
    )
    atomic_write_text(out / "overlay.svg", render_svg([panel]))
    outputs.append("overlay.svg")

    mode = "uncompensated" if args.no_compensate else "pre-compensated"
    _write_run_json(
        out / "run.json",
        experiment=f"{mode} pulse replication through the measured chamber response",
        command="replicate",
        parameters={
            "chamber_config": args.config,
            "sample_rate": args.sample_rate,
            "pulse_csv": args.pulse,
            "f0": args.f0,
            "n_harmonics": args.n_harmonics,
            "peak_pa": args.peak_pa,
            "compensate": not args.no_compensate,
            "drive_scale": args.drive_scale,
            "n_periods": args.n_periods,
            "offset_v": args.offset,
            "bode_amplitude_v": args.amplitude,
        },
        results=dict(report),
        outputs=outputs + ["run.json"],
    )

    print(
        f"replicate ({mode}): rms_rel_err={report['rms_rel_err']:.4f} "
        f"peak={report['peak_pa']:.4f} Pa ({report['peak_db']:.1f} dB SPL) "
        f"over {report['periods_compared']} periods"
    )
    print(f"wrote {out}/report.json and companion files")
    if report["rms_rel_err"] > VERIFY_RMS_LIMIT:
        print(
            f"verification failed: rms_rel_err {report['rms_rel_err']:.4f} > "
            f"{VERIFY_RMS_LIMIT} (report written)",
            file=sys.stderr,
        )
        return EXIT_VERIFICATION
    return EXIT_OK


def _run_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infrachamber",
        description="Simulated infrasound chamber experiments: sweep, bode, tone, replicate.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="JSON", help="chamber config JSON (default: built-in calibrated model)")
    common.add_argument("--out", metavar="DIR", help="output directory (default: <command>_out)")
    common.add_argument("--sample-rate", type=float, default=1000.0, metavar="HZ", help="simulator sample rate (default 1000)")
    common.add_argument("--server", metavar="URL", help="remote service URL (default: run in-process)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="static staircase sweep and pooled operating curve")
    p.add_argument("--v-start", type=float, default=-5.0, help="first drive level (default -5)")
    p.add_argument("--v-end", type=float, default=5.0, help="last drive level (default 5)")
    p.add_argument("--step", type=float, default=0.5, help="drive increment (default 0.5)")
    p.add_argument("--hold", type=float, default=10.0, metavar="S", help="hold per level, seconds (default 10)")
    p.set_defaults(handler=_run_sweep)

    p = sub.add_parser("bode", parents=[common], help="stepped-sine frequency response table and plot")
    p.add_argument("--f0", type=float, default=0.8, help="fundamental frequency, Hz (default 0.8)")
    p.add_argument("--max-k", type=int, default=25, help="highest harmonic (default 25)")
    p.add_argument("--amplitude", type=float, default=0.5, metavar="V", help="sine amplitude (default 0.5)")
    p.add_argument("--offset", type=float, default=1.0, metavar="V", help="drive offset (default 1.0)")
    p.add_argument("--reference-gain", type=float, default=1.0, help="0 dB reference gain (default 1.0)")
    p.set_defaults(handler=_run_bode)

    p = sub.add_parser("tone", parents=[common], help="single stepped-sine burst through the simulator")
    p.add_argument("--freq", type=float, required=True, metavar="HZ", help="burst frequency")
    p.add_argument("--cycles", type=int, default=20, help="burst length in cycles (default 20)")
    p.add_argument("--taper-cycles", type=int, default=2, help="raised-cosine taper cycles per end (default 2)")
    p.add_argument("--amplitude", type=float, default=0.5, metavar="V", help="sine amplitude (default 0.5)")
    p.add_argument("--offset", type=float, default=1.0, metavar="V", help="drive offset (default 1.0)")
    p.set_defaults(handler=_run_tone)

    p = sub.add_parser("replicate", parents=[common], help="measure response, pre-compensate a pulse, verify round trip")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--pulse", metavar="CSV", help="measured pulse waveform CSV (pascals)")
    source.add_argument("--reference", action="store_true", help="use the built-in reference pulse (default)")
    p.add_argument("--no-compensate", action="store_true", help="skip pre-compensation (control run)")
    p.add_argument("--drive-scale", type=float, default=0.02, metavar="V_PER_PA", help="drive volts per target pascal (default 0.02)")
    p.add_argument("--n-periods", type=int, default=20, help="pulse periods to drive (default 20)")
    p.add_argument("--f0", type=float, default=0.8, help="pulse repetition rate, Hz (default 0.8)")
    p.add_argument("--n-harmonics", type=int, default=12, help="harmonics analyzed/compensated (default 12)")
    p.add_argument("--peak-pa", type=float, default=0.15, help="reference pulse peak, Pa (default 0.15)")
    p.add_argument("--amplitude", type=float, default=0.5, metavar="V", help="response-measurement sine amplitude (default 0.5)")
    p.add_argument("--offset", type=float, default=1.0, metavar="V", help="drive offset (default 1.0)")
    p.set_defaults(handler=_run_replicate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=_run_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "out", None) is None and args.command != "serve":
        args.out = f"{args.command}_out"
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
