"""Lumped-element model of a fan-pressurized chamber with a modulation valve.

Steady state: the chamber operates where the fan curve (source capability,
pressure falling with flow) crosses the load curve (pressure required to push
flow through the valve orifice, quadratic in flow). Dynamics: the chamber
volume acts as a compliance,

    dp/dt = (S / V) * (q_in(p) - q_out(p, A(v(t))))

where S is the bulk stiffness of the enclosed air, q_in is the fan curve read
at the chamber pressure, and q_out = A * sqrt(2 p / rho) is orifice outflow.

Flows cross module boundaries in L/s (matching instrument readouts); all
internal physics is SI (m^3/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import Waveform

V_OPEN = -5.0   # modulator drive for valve fully open
V_CLOSED = 5.0  # modulator drive for valve fully closed

DEFAULT_RHO = 1.225                 # air density, kg/m^3
DEFAULT_VOLUME_M3 = 1.25
DEFAULT_INLET_DIAMETER_M = 0.0762   # 3 inch supply pipe
DEFAULT_SENSOR_PA_PER_VOLT = 50.0
ADIABATIC_BULK_STIFFNESS_PA = 141855.0  # gamma * P0 for air at sea level

DEFAULT_FAN_PMAX_PA = 175.0
DEFAULT_FAN_QMAX_LPS = 27.5

# Bulk stiffness of the default calibrated model. Softer than the adiabatic
# value of the air alone: the enclosure walls flex, adding series compliance.
# Tuned so the simulated low-frequency rolloff matches bench behaviour
# (modulation amplitude ratio ~2.5 between 0.8 Hz and 8 Hz).
EFFECTIVE_BULK_STIFFNESS_PA = 84_000.0

NEUTRAL_DRIVE_V = 1.0
NEUTRAL_PRESSURE_PA = 50.0

# Valve geometry of the default calibrated model. AREA_NEUTRAL_M2 puts the
# operating point at exactly (50 Pa, 23.2417 L/s) on the default fan curve;
# AREA_CLOSED_M2 puts the fully-closed endpoint at (161.98 Pa, 7.5 L/s).
# The map is linear through the neutral point up to a knee at +3 V (outside
# the modulation band, so small-signal behaviour stays linear), then runs to
# the closed endpoint.
AREA_NEUTRAL_M2 = 2.5723894534070847e-3
AREA_CLOSED_M2 = 4.6118902035933162e-4
VALVE_SLOPE_M2_PER_V = 9.2e-4
VALVE_KNEE_V = 3.0

_OPERATING_POINT_TOL_PA = 1e-6


# ---------------------------------------------------------------------------
# point relations
# ---------------------------------------------------------------------------

def load_pressure(q_lps: float, area_m2: float, rho: float = DEFAULT_RHO) -> float:
    """Pressure needed to push flow q through an orifice: 1/2 rho (q/A)^2."""
    if q_lps < 0:
        raise ValueError(f"flow must be >= 0, got {q_lps}")
    if area_m2 < 0:
        raise ValueError(f"area must be >= 0, got {area_m2}")
    if q_lps == 0.0:
        return 0.0
    if area_m2 == 0.0:
        raise ValueError("area 0 with non-zero flow implies infinite pressure")
    u = q_lps * 1e-3 / area_m2
    return 0.5 * rho * u * u


def pitot_speed(p_dyn_pa: float, rho: float = DEFAULT_RHO) -> float:
    """Airspeed from dynamic pressure: u = sqrt(2 p / rho)."""
    if p_dyn_pa < 0:
        raise ValueError(f"dynamic pressure must be >= 0, got {p_dyn_pa}")
    return math.sqrt(2.0 * p_dyn_pa / rho)


def flow_from_speed(u: float, pipe_diameter_m: float = DEFAULT_INLET_DIAMETER_M) -> float:
    """Volume flow in L/s through a round pipe at uniform speed u."""
    if u < 0:
        raise ValueError(f"speed must be >= 0, got {u}")
    if not pipe_diameter_m > 0:
        raise ValueError(f"pipe diameter must be positive, got {pipe_diameter_m}")
    return u * math.pi * (pipe_diameter_m / 2.0) ** 2 * 1000.0


# ---------------------------------------------------------------------------
# model types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FanCurve:
    """Source capability curve: pressure delivered versus flow.

    Either parametric, p(q) = p_max (1 - (q/q_max)^exponent), or tabulated as
    strictly decreasing (q, p) samples covering q = 0 (where p = p_max) down
    to p = 0 (at q = q_max).
    """

    p_max_pa: float
    q_max_lps: float
    exponent: float = 2.0
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.table is not None:
            object.__setattr__(
                self, "table", tuple((float(q), float(p)) for q, p in self.table)
            )
            qs = [q for q, _ in self.table]
            ps = [p for _, p in self.table]
            if len(qs) < 2:
                raise ValueError("tabulated fan curve needs at least 2 points")
            if any(b <= a for a, b in zip(qs, qs[1:])):
                raise ValueError(f"table flows must be strictly increasing, got {qs}")
            if any(b >= a for a, b in zip(ps, ps[1:])):
                raise ValueError(f"table pressures must be strictly decreasing, got {ps}")
            if qs[0] != 0.0:
                raise ValueError(f"table must start at q = 0 (got q = {qs[0]})")
            if ps[-1] != 0.0:
                raise ValueError(f"table must end at p = 0 (got p = {ps[-1]})")
        if not self.p_max_pa > 0:
            raise ValueError(f"p_max must be positive, got {self.p_max_pa}")
        if not self.q_max_lps > 0:
            raise ValueError(f"q_max must be positive, got {self.q_max_lps}")
        if not self.exponent > 0:
            raise ValueError(f"exponent must be positive, got {self.exponent}")

    @classmethod
    def parametric(cls, p_max_pa: float, q_max_lps: float, exponent: float = 2.0) -> FanCurve:
        return cls(p_max_pa, q_max_lps, exponent)

    @classmethod
    def tabulated(cls, points: list[tuple[float, float]] | tuple[tuple[float, float], ...]) -> FanCurve:
        points = tuple((float(q), float(p)) for q, p in points)
        if len(points) < 2:
            raise ValueError("tabulated fan curve needs at least 2 points")
        return cls(points[0][1], points[-1][0], 2.0, points)

    def pressure_at(self, q_lps):
        """Delivered pressure at flow q (L/s); clamped outside [0, q_max]."""
        if self.table is not None:
            qs = np.array([q for q, _ in self.table])
            ps = np.array([p for _, p in self.table])
            return np.interp(q_lps, qs, ps)
        q = np.clip(np.asarray(q_lps, dtype=np.float64), 0.0, self.q_max_lps)
        p = self.p_max_pa * (1.0 - (q / self.q_max_lps) ** self.exponent)
        return p if p.ndim else float(p)

    def flow_at(self, p_pa):
        """Inverse reading: flow the source supplies against back-pressure p."""
        if self.table is not None:
            ps = np.array([p for _, p in self.table])[::-1]
            qs = np.array([q for q, _ in self.table])[::-1]
            return np.interp(p_pa, ps, qs)
        p = np.clip(np.asarray(p_pa, dtype=np.float64), 0.0, self.p_max_pa)
        q = self.q_max_lps * (1.0 - p / self.p_max_pa) ** (1.0 / self.exponent)
        return q if q.ndim else float(q)


@dataclass(frozen=True)
class ValveMap:
    """Piecewise-linear modulator-voltage to orifice-area map on [-5, +5] V.

    Area strictly decreases with voltage (more positive drive closes the
    valve); only the fully-closed endpoint may reach zero area.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts = tuple((float(v), float(a)) for v, a in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("valve map needs at least 2 points")
        vs = [v for v, _ in pts]
        areas = [a for _, a in pts]
        if any(b <= a for a, b in zip(vs, vs[1:])):
            raise ValueError(f"valve voltages must be strictly increasing, got {vs}")
        if vs[0] != V_OPEN or vs[-1] != V_CLOSED:
            raise ValueError(
                f"valve map must span [{V_OPEN}, {V_CLOSED}] V, got [{vs[0]}, {vs[-1]}]"
            )
        if any(b >= a for a, b in zip(areas, areas[1:])):
            raise ValueError(f"valve areas must be strictly decreasing, got {areas}")
        if any(a <= 0 for a in areas[:-1]) or areas[-1] < 0:
            raise ValueError("valve areas must be positive (zero allowed only when fully closed)")

    def area_at(self, v):
        vs = np.array([v_ for v_, _ in self.points])
        areas = np.array([a for _, a in self.points])
        return np.interp(v, vs, areas)


@dataclass(frozen=True)
class ChamberModel:
    """Immutable chamber description; simulation is a pure function of it."""

    fan: FanCurve
    valve: ValveMap
    volume_m3: float = DEFAULT_VOLUME_M3
    rho: float = DEFAULT_RHO
    gamma_p0: float = ADIABATIC_BULK_STIFFNESS_PA  # bulk stiffness of the air volume, Pa
    inlet_diameter_m: float = DEFAULT_INLET_DIAMETER_M
    baratron_pa_per_volt: float = DEFAULT_SENSOR_PA_PER_VOLT

    def __post_init__(self) -> None:
        for name in ("volume_m3", "rho", "gamma_p0", "inlet_diameter_m", "baratron_pa_per_volt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class OperatingPoint:
    pressure_pa: float
    flow_lps: float


# ---------------------------------------------------------------------------
# steady state
# ---------------------------------------------------------------------------

def solve_operating_point(model: ChamberModel, v: float) -> OperatingPoint:
    """Intersection of the fan curve and the valve load curve at drive v.

    Bisection on flow over [0, q_max]; the difference fan(q) - load(q) is
    strictly decreasing, so the root is unique. Converged to within 1e-6 Pa.
    """
    if not (V_OPEN <= v <= V_CLOSED):
        raise ValueError(f"drive {v} V outside valve range [{V_OPEN}, {V_CLOSED}]")
    area = float(model.valve.area_at(v))
    if area == 0.0:
        return OperatingPoint(model.fan.p_max_pa, 0.0)
    lo, hi = 0.0, model.fan.q_max_lps
    q = 0.5 * (lo + hi)
    for _ in range(100):
        q = 0.5 * (lo + hi)
        diff = float(model.fan.pressure_at(q)) - load_pressure(q, area, model.rho)
        if abs(diff) <= _OPERATING_POINT_TOL_PA:
            break
        if diff > 0:
            lo = q
        else:
            hi = q
    else:
        raise RuntimeError(
            f"operating point did not converge at v={v} (residual {diff:.3e} Pa)"
        )
    return OperatingPoint(float(model.fan.pressure_at(q)), q)


def local_resistance(model: ChamberModel, op: OperatingPoint) -> float:
    """Magnitude of the fan-curve slope |dp/dq| at the operating point, Pa*s/m^3.

    Central finite difference with a relative step of 1e-4 of q_max; one-sided
    at the curve endpoints. This is the R of the local load-line model
    (p - p0) = -R (q - q0), the acoustic analogue of V = R I.
    """
    q0 = op.flow_lps
    q_max = model.fan.q_max_lps
    h = 1e-4 * q_max
    if q0 - h < 0.0:
        slope = (float(model.fan.pressure_at(q0 + h)) - float(model.fan.pressure_at(q0))) / h
    elif q0 + h > q_max:
        slope = (float(model.fan.pressure_at(q0)) - float(model.fan.pressure_at(q0 - h))) / h
    else:
        slope = (float(model.fan.pressure_at(q0 + h)) - float(model.fan.pressure_at(q0 - h))) / (2.0 * h)
    return abs(slope) * 1000.0  # Pa/(L/s) -> Pa*s/m^3


# ---------------------------------------------------------------------------
# time-domain simulation
# ---------------------------------------------------------------------------

def simulate(
    model: ChamberModel,
    drive: Waveform,
    output_unit: str = "pascals",
    p0: float | None = None,
) -> Waveform:
    """Integrate the chamber pressure ODE along a modulator drive waveform.

    Classical fixed-step RK4 at the drive sample rate, with the drive linearly
    interpolated at half steps. The initial pressure is the steady state of
    the first drive sample unless p0 overrides it (used by stateful bench
    adapters). Drive samples outside the valve range are clamped and counted
    in the result metadata, as are integration steps where the pressure had
    to be floored at zero.

    output_unit "pascals" returns chamber pressure; "volts" divides by the
    sensor sensitivity to emit what the pressure sensor would read.
    """
    if drive.unit != "volts":
        raise ValueError(f"drive must be in volts, got unit {drive.unit!r}")
    if output_unit not in ("pascals", "volts"):
        raise ValueError(f"output_unit must be 'pascals' or 'volts', got {output_unit!r}")

    v_raw = drive.samples
    v = np.clip(v_raw, V_OPEN, V_CLOSED)
    clamped = int(np.count_nonzero(v != v_raw))

    area = model.valve.area_at(v)
    a0 = np.asarray(area[:-1], dtype=np.float64).tolist()
    a1 = np.asarray(area[1:], dtype=np.float64).tolist()
    am = np.asarray(model.valve.area_at(0.5 * (v[:-1] + v[1:])), dtype=np.float64).tolist()

    fan = model.fan
    if fan.table is None:
        p_max = fan.p_max_pa
        q_max_si = fan.q_max_lps * 1e-3
        inv_e = 1.0 / fan.exponent

        def q_in_si(p: float) -> float:
            if p <= 0.0:
                return q_max_si
            if p >= p_max:
                return 0.0
            return q_max_si * (1.0 - p / p_max) ** inv_e
    else:
        ps_asc = np.array([p for _, p in fan.table])[::-1].copy()
        qs_asc = np.array([q * 1e-3 for q, _ in fan.table])[::-1].copy()

        def q_in_si(p: float) -> float:
            return float(np.interp(p, ps_asc, qs_asc))

    kappa = model.gamma_p0 / model.volume_m3
    c_out = math.sqrt(2.0 / model.rho)
    h = 1.0 / drive.sample_rate
    sqrt = math.sqrt

    if p0 is None:
        p = solve_operating_point(model, float(v[0])).pressure_pa
    else:
        p = float(p0)

    n = v.size
    out = np.empty(n, dtype=np.float64)
    out[0] = p
    floor_hits = 0
    for i in range(n - 1):
        aa0 = a0[i]
        aam = am[i]
        aa1 = a1[i]
        k1 = kappa * (q_in_si(p) - (aa0 * c_out * sqrt(p) if p > 0.0 else 0.0))
        p2 = p + 0.5 * h * k1
        k2 = kappa * (q_in_si(p2) - (aam * c_out * sqrt(p2) if p2 > 0.0 else 0.0))
        p3 = p + 0.5 * h * k2
        k3 = kappa * (q_in_si(p3) - (aam * c_out * sqrt(p3) if p3 > 0.0 else 0.0))
        p4 = p + h * k3
        k4 = kappa * (q_in_si(p4) - (aa1 * c_out * sqrt(p4) if p4 > 0.0 else 0.0))
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if p < 0.0:
            p = 0.0
            floor_hits += 1
        out[i + 1] = p

    meta = {"clamped_drive_samples": clamped, "pressure_floor_hits": floor_hits}
    if output_unit == "volts":
        return Waveform(out / model.baratron_pa_per_volt, drive.sample_rate, "volts", meta)
    return Waveform(out, drive.sample_rate, "pascals", meta)


# ---------------------------------------------------------------------------
# calibration and defaults
# ---------------------------------------------------------------------------

def calibrate_valve_map(
    targets: list[tuple[float, float, float]],
    rho: float = DEFAULT_RHO,
    end_slope_m2_per_v: float = VALVE_SLOPE_M2_PER_V,
) -> ValveMap:
    """Fit a valve map to measured (v, pressure Pa, flow L/s) operating points.

    Each target pins the orifice area via the load curve, A = q sqrt(rho/2p).
    The piecewise-linear map interpolates those areas and is extended to the
    full [-5, +5] V range with end_slope (clamped at zero area at the closed
    end).
    """
    if not targets:
        raise ValueError("calibration needs at least one (v, p, q) target")
    pts = sorted((float(v), float(p), float(q)) for v, p, q in targets)
    vs = [v for v, _, _ in pts]
    if any(b <= a for a, b in zip(vs, vs[1:])):
        raise ValueError(f"duplicate calibration voltages: {vs}")
    areas = []
    for v, p, q in pts:
        if not p > 0 or not q > 0:
            raise ValueError(f"target at v={v} needs positive pressure and flow, got p={p}, q={q}")
        areas.append(q * 1e-3 * math.sqrt(rho / (2.0 * p)))
    for (v1, a1), (v2, a2) in zip(zip(vs, areas), zip(vs[1:], areas[1:])):
        if a2 >= a1:
            raise ValueError(
                f"targets at v={v1} and v={v2} imply a non-decreasing area "
                f"({a1:.6e} -> {a2:.6e}); a closing valve must shrink"
            )
    knots = list(zip(vs, areas))
    if vs[0] > V_OPEN:
        knots.insert(0, (V_OPEN, areas[0] + end_slope_m2_per_v * (vs[0] - V_OPEN)))
    if vs[-1] < V_CLOSED:
        knots.append((V_CLOSED, max(areas[-1] - end_slope_m2_per_v * (V_CLOSED - vs[-1]), 0.0)))
    return ValveMap(tuple(knots))


def default_fan_curve() -> FanCurve:
    """p(q) = 175 (1 - (q/27.5)^2): the simplest smooth curve through the
    measured endpoints (175 Pa shut off, 27.5 L/s free delivery)."""
    return FanCurve.parametric(DEFAULT_FAN_PMAX_PA, DEFAULT_FAN_QMAX_LPS)


def default_valve_map() -> ValveMap:
    return ValveMap((
        (V_OPEN, AREA_NEUTRAL_M2 + (NEUTRAL_DRIVE_V - V_OPEN) * VALVE_SLOPE_M2_PER_V),
        (VALVE_KNEE_V, AREA_NEUTRAL_M2 - (VALVE_KNEE_V - NEUTRAL_DRIVE_V) * VALVE_SLOPE_M2_PER_V),
        (V_CLOSED, AREA_CLOSED_M2),
    ))


def default_chamber() -> ChamberModel:
    """The calibrated reference model all default experiments run against.

    Neutral drive (+1 V) sits at exactly 50 Pa / 23.24 L/s; the full sweep
    spans ~0 to 162 Pa and 26.96 down to 7.5 L/s.
    """
    return ChamberModel(
        fan=default_fan_curve(),
        valve=default_valve_map(),
        gamma_p0=EFFECTIVE_BULK_STIFFNESS_PA,
    )


# ---------------------------------------------------------------------------
# bench adapter
# ---------------------------------------------------------------------------

class SimulatedChamber:
    """Drives a ChamberModel the way bench hardware would be driven.

    respond() is stateless: each burst starts from the steady state of its
    first sample, like an experiment run after the chamber settles. hold()
    carries chamber pressure across calls so a staircase sweep sees realistic
    step-to-step settling; reset() clears that state.
    """

    def __init__(
        self,
        model: ChamberModel,
        sample_rate: float = 1000.0,
        output_unit: str = "volts",
    ) -> None:
        if not sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {sample_rate}")
        self.model = model
        self.sample_rate = float(sample_rate)
        self.output_unit = output_unit
        self._pressure: float | None = None

    def respond(self, drive: Waveform) -> Waveform:
        return simulate(self.model, drive, output_unit=self.output_unit)

    def hold(self, v: float, duration_s: float) -> tuple[Waveform, Waveform]:
        """Hold a constant drive; returns (pressure Pa, inlet flow L/s) traces."""
        if not (V_OPEN <= v <= V_CLOSED):
            raise ValueError(f"drive {v} V outside valve range [{V_OPEN}, {V_CLOSED}]")
        n = int(round(duration_s * self.sample_rate))
        if n < 1:
            raise ValueError(f"hold of {duration_s} s is shorter than one sample")
        drive = Waveform(np.full(n, float(v)), self.sample_rate, "volts")
        pressure = simulate(self.model, drive, p0=self._pressure)
        self._pressure = float(pressure.samples[-1])
        flow = np.asarray(self.model.fan.flow_at(pressure.samples), dtype=np.float64)
        return pressure, Waveform(flow, self.sample_rate, "liters_per_second")

    def reset(self) -> None:
        self._pressure = None
