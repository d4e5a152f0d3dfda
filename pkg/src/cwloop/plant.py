"""Physics-based reference model of a condenser water loop.

Models the loop of a water-cooled chiller plant: electric chillers whose
compressor power rises with condenser water temperature, an evaporative
cooling tower whose leaving-water temperature is floored by the ambient
wet bulb, and constant-volume condenser water pumps. The model serves as
the ground-truth generator for surrogate training, so it is deliberately
smooth, deterministic, and cheap to evaluate.

Chiller power uses performance curves in the style of the DOE-2 electric
chiller model: available capacity and full-load efficiency are biquadratic
in (chilled water supply temp, condenser water supply temp), and efficiency
degrades with part-load ratio through a quadratic. The shipped default
coefficients are synthetic (no real building behind them) and normalized so
both biquadratics evaluate to exactly 1.0 at the curve reference point.

The cooling tower is an effectiveness-style approach model: the approach
(leaving water minus wet bulb) scales linearly with heat rejection, shrinks
with airflow, and is calibrated to reproduce the configured design approach
at the design point. A hard minimum-approach floor keeps the leaving
temperature strictly above wet bulb.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from cwloop.errors import (
    CapacityExceededError,
    ConvergenceError,
    DomainError,
    SchemaError,
)
from cwloop.units import KW_PER_TON, water_delta_t

PLANT_SCHEMA_VERSION = 1

# Chiller curves are valid over this condenser water supply range (degF).
T_CWS_MIN = 55.0
T_CWS_MAX = 95.0

# Allowed tower fan stages: pairs of cells on an even-celled tower.
FAN_STAGES = (2, 4, 6, 8)


def _biquad(coeffs: tuple[float, ...], dx: float, dy: float) -> float:
    a0, a1, a2, a3, a4, a5 = coeffs
    return a0 + a1 * dx + a2 * dx * dx + a3 * dy + a4 * dy * dy + a5 * dx * dy


@dataclass(frozen=True)
class CurveSet:
    """Chiller and fan performance curves.

    The two biquadratics are evaluated on temperatures centered at the
    reference point, so ``cap_ft`` and ``eir_ft`` are exactly 1.0 at
    (t_chws_ref, t_cws_ref) by construction. ``eir_fplr`` is a quadratic
    in part-load ratio with value 1.0 at full load. ``fan_curve`` is the
    fitted cubic in fan speed fraction, normalized to 1.0 at full speed.
    """

    t_chws_ref: float = 44.0
    t_cws_ref: float = 85.0
    cap_ft: tuple[float, ...] = (1.0, 0.005, 0.0, -0.002, -0.00001, 0.0)
    eir_ft: tuple[float, ...] = (1.0, -0.004, 0.0, 0.010, 0.00006, 0.0)
    eir_fplr: tuple[float, ...] = (0.17, 0.58, 0.25)
    fan_curve: tuple[float, ...] = (0.08, 0.05, 0.05, 0.82)

    def capacity_fraction(self, t_chws: float, t_cws: float) -> float:
        return _biquad(self.cap_ft, t_chws - self.t_chws_ref, t_cws - self.t_cws_ref)

    def eir_fraction(self, t_chws: float, t_cws: float) -> float:
        return _biquad(self.eir_ft, t_chws - self.t_chws_ref, t_cws - self.t_cws_ref)

    def eir_plr_fraction(self, plr: float) -> float:
        b0, b1, b2 = self.eir_fplr
        return b0 + b1 * plr + b2 * plr * plr

    def fan_fraction(self, speed: float) -> float:
        d0, d1, d2, d3 = self.fan_curve
        return d0 + d1 * speed + d2 * speed * speed + d3 * speed ** 3


@dataclass(frozen=True)
class PlantConfig:
    """Physical parameters of one condenser water loop.

    Defaults describe a synthetic plant loosely shaped like a large NYC
    office tower: two 1350-ton electric chillers, an 8-cell tower, and
    constant-volume loop pumps. Flow rates, pump power, and fan ratings
    are NOT from any real building; treat them as placeholders to be
    replaced by a per-site config file.
    """

    n_chillers: int = 2
    chiller_rated_capacity: float = 1350.0   # tons per chiller
    chiller_rated_cop: float = 6.0
    n_tower_cells: int = 8
    cell_rated_fan_power: float = 30.0       # kW per cell at full speed
    cell_rated_flow: float = 1050.0          # gpm per cell
    pump_power: float = 150.0                # kW, constant-volume, on/off
    cw_flow: float = 8100.0                  # gpm total condenser water flow
    chw_supply_temp: float = 44.0            # degF
    design_approach: float = 7.0             # degF at the tower design point
    design_range: float = 10.0               # degF water-side range at design
    design_wetbulb: float = 78.0             # degF tower design wet bulb
    min_approach: float = 2.0                # degF hard floor, tower physics
    tower_airflow_exponent: float = 0.7      # approach ~ airflow^-exponent
    tower_wetbulb_gain: float = 0.01         # approach sensitivity to wet bulb
    standby_power_kw: float = 0.0            # drawn when the plant is off
    curves: CurveSet = field(default_factory=CurveSet)

    def __post_init__(self):
        positive = {
            "chiller_rated_capacity": self.chiller_rated_capacity,
            "cell_rated_fan_power": self.cell_rated_fan_power,
            "cell_rated_flow": self.cell_rated_flow,
            "pump_power": self.pump_power,
            "cw_flow": self.cw_flow,
            "design_approach": self.design_approach,
            "design_range": self.design_range,
            "min_approach": self.min_approach,
        }
        for name, value in positive.items():
            if not value > 0:
                raise DomainError(f"{name} must be strictly positive, got {value}")
        if self.n_chillers < 1:
            raise DomainError(f"n_chillers must be >= 1, got {self.n_chillers}")
        if self.n_tower_cells < 2 or self.n_tower_cells % 2 != 0:
            raise DomainError(
                f"n_tower_cells must be even and >= 2, got {self.n_tower_cells}"
            )
        if not 1.0 < self.chiller_rated_cop < 10.0:
            raise DomainError(
                f"chiller_rated_cop must be in (1, 10), got {self.chiller_rated_cop}"
            )
        if self.design_approach <= self.min_approach:
            raise DomainError(
                "design_approach must exceed min_approach "
                f"({self.design_approach} <= {self.min_approach})"
            )

    @property
    def total_capacity(self) -> float:
        """Nameplate plant capacity in tons."""
        return self.n_chillers * self.chiller_rated_capacity

    @property
    def design_rejection(self) -> float:
        """Heat rejection (tons) at design flow and design range."""
        return self.cw_flow * self.design_range / 24.0

    def fan_stages(self) -> tuple[int, ...]:
        return tuple(s for s in FAN_STAGES if s <= self.n_tower_cells)


@dataclass(frozen=True)
class PlantState:
    """One converged operating point of the loop."""

    t_wb: float       # degF outside wet bulb
    q_load: float     # tons building cooling load
    t_cws: float      # degF condenser water supply (tower leaving)
    t_cwr: float      # degF condenser water return
    n_fans: int       # tower fans running
    p_chiller: float  # kW compressor power
    p_fan: float      # kW total tower fan power
    p_pump: float     # kW condenser water pump power
    q_rej: float      # tons heat rejected at the tower

    def total_power(self) -> float:
        return self.p_chiller + self.p_fan + self.p_pump

    def validate(self) -> None:
        if self.n_fans not in FAN_STAGES:
            raise DomainError(f"n_fans must be one of {FAN_STAGES}, got {self.n_fans}")
        if self.q_rej > 0 and not self.t_cws > self.t_wb:
            raise DomainError(
                f"t_cws ({self.t_cws}) must exceed wet bulb ({self.t_wb})"
            )
        if self.q_rej > 0 and not self.t_cwr > self.t_cws:
            raise DomainError(
                f"t_cwr ({self.t_cwr}) must exceed t_cws ({self.t_cws}) under load"
            )
        if self.q_rej < self.q_load - 1e-9:
            raise DomainError(
                f"q_rej ({self.q_rej}) cannot be below q_load ({self.q_load})"
            )


def chillers_running(config: PlantConfig, q_load: float) -> int:
    """Staging rule: one chiller up to 55% of a single machine, else all."""
    if q_load <= 0:
        return 0
    if config.n_chillers == 1 or q_load <= 0.55 * config.chiller_rated_capacity:
        return 1
    return config.n_chillers


def chiller_power(
    config: PlantConfig, q_load: float, t_cws: float, t_chws: float | None = None
) -> float:
    """Total compressor electric power (kW) to serve ``q_load`` tons.

    Load is split evenly over the running chillers; each contributes
    rated_power * cap_ft * eir_ft * eir_fplr(plr), the DOE-2 composition.
    """
    if t_chws is None:
        t_chws = config.chw_supply_temp
    if q_load < 0:
        raise DomainError(f"q_load must be >= 0, got {q_load}")
    if not T_CWS_MIN <= t_cws <= T_CWS_MAX:
        raise DomainError(
            f"t_cws {t_cws} outside physical range [{T_CWS_MIN}, {T_CWS_MAX}]"
        )
    if q_load == 0:
        return 0.0

    n_run = chillers_running(config, q_load)
    cap_ft = config.curves.capacity_fraction(t_chws, t_cws)
    available = n_run * config.chiller_rated_capacity * cap_ft
    if q_load > config.total_capacity or q_load > available * (1 + 1e-9):
        raise CapacityExceededError(
            f"load {q_load:.1f} tons exceeds available capacity "
            f"{available:.1f} tons ({n_run} chillers at t_cws={t_cws:.1f})"
        )

    plr = q_load / available
    eir_ft = config.curves.eir_fraction(t_chws, t_cws)
    rated_power_each = (
        config.chiller_rated_capacity * KW_PER_TON / config.chiller_rated_cop
    )
    per_chiller = rated_power_each * cap_ft * eir_ft * config.curves.eir_plr_fraction(plr)
    return n_run * per_chiller


def heat_rejection(q_load: float, p_chiller: float) -> float:
    """Condenser heat rejection (tons): building load plus compressor work."""
    if q_load < 0 or p_chiller < 0:
        raise DomainError(
            f"q_load and p_chiller must be >= 0, got {q_load}, {p_chiller}"
        )
    return q_load + p_chiller / KW_PER_TON


def cw_return_temp(q_rej: float, cw_flow: float, t_cws: float) -> float:
    """Condenser water return temperature from the water-side balance."""
    if cw_flow <= 0:
        raise DomainError(f"cw_flow must be > 0, got {cw_flow}")
    return t_cws + water_delta_t(q_rej, cw_flow)


def _approach(
    config: PlantConfig, t_wb: float, q_rej: float, airflow_fraction: float
) -> float:
    """Tower approach (degF) at the given heat rejection and airflow."""
    if q_rej <= 0:
        return config.min_approach
    wb_factor = max(
        1.0 + config.tower_wetbulb_gain * (config.design_wetbulb - t_wb), 0.25
    )
    load_fraction = q_rej / config.design_rejection
    airflow = max(airflow_fraction, 1e-6)
    span = config.design_approach - config.min_approach
    return config.min_approach + span * load_fraction * wb_factor * airflow ** (
        -config.tower_airflow_exponent
    )


def approach_batch(config: PlantConfig, t_wb, q_rej, airflow_fraction):
    """Vectorized twin of :func:`_approach` for optimizer hot paths.

    Must stay numerically identical to the scalar version; the test suite
    cross-checks the two.
    """
    t_wb = np.asarray(t_wb, dtype=float)
    q_rej = np.asarray(q_rej, dtype=float)
    airflow = np.maximum(np.asarray(airflow_fraction, dtype=float), 1e-6)
    wb_factor = np.maximum(
        1.0 + config.tower_wetbulb_gain * (config.design_wetbulb - t_wb), 0.25
    )
    span = config.design_approach - config.min_approach
    approach = config.min_approach + span * (
        q_rej / config.design_rejection
    ) * wb_factor * airflow ** (-config.tower_airflow_exponent)
    return np.where(q_rej <= 0, config.min_approach, approach)


def tower_leaving_temp(
    config: PlantConfig,
    t_wb: float,
    q_rej: float,
    n_fans: int,
    speed_fraction: float = 1.0,
) -> float:
    """Coldest water the tower can supply with ``n_fans`` at ``speed_fraction``.

    Calibrated so that the design point (design wet bulb, design rejection,
    all fans at full speed) reproduces the configured design approach.
    """
    if n_fans not in config.fan_stages():
        raise DomainError(
            f"n_fans must be one of {config.fan_stages()}, got {n_fans}"
        )
    if q_rej < 0:
        raise DomainError(f"q_rej must be >= 0, got {q_rej}")
    airflow = (n_fans / config.n_tower_cells) * speed_fraction
    return t_wb + _approach(config, t_wb, q_rej, airflow)


def fan_power(config: PlantConfig, n_fans: int, speed_fraction: float) -> float:
    """Total tower fan power (kW) with ``n_fans`` running at a common speed."""
    if n_fans not in config.fan_stages():
        raise DomainError(
            f"n_fans must be one of {config.fan_stages()}, got {n_fans}"
        )
    if not 0.0 < speed_fraction <= 1.0:
        raise DomainError(
            f"speed_fraction must be in (0, 1], got {speed_fraction}"
        )
    return n_fans * config.cell_rated_fan_power * config.curves.fan_fraction(
        speed_fraction
    )


def _solve_fan_speed(
    config: PlantConfig, t_wb: float, q_rej: float, n_fans: int, t_target: float
) -> float:
    """Fan speed fraction at which the tower leaves exactly ``t_target``.

    Only called when the tower beats the target at full speed, so the
    solution lies in (0, 1]; bisection to 1e-3 on speed.
    """
    lo, hi = 1e-4, 1.0
    if tower_leaving_temp(config, t_wb, q_rej, n_fans, lo) <= t_target:
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if tower_leaving_temp(config, t_wb, q_rej, n_fans, mid) > t_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-3:
            break
    return hi


def simulate_point(
    config: PlantConfig,
    t_wb: float,
    q_load: float,
    t_cws_setpoint: float,
    n_fans: int,
    max_iterations: int = 100,
    tolerance: float = 0.01,
) -> PlantState:
    """Solve one operating point of the loop.

    Fixed-point iteration: chiller power at the achieved supply temperature
    sets the heat rejection, which sets the coldest achievable tower leaving
    temperature, which (against the setpoint) sets the achieved supply
    temperature. When the tower can beat the setpoint at full speed, the
    fans slow down to meet the setpoint exactly and fan power drops below
    full per the fitted cubic.
    """
    if n_fans not in config.fan_stages():
        raise DomainError(
            f"n_fans must be one of {config.fan_stages()}, got {n_fans}"
        )
    if q_load < 0:
        raise DomainError(f"q_load must be >= 0, got {q_load}")

    if q_load == 0:
        t_idle = max(t_cws_setpoint, t_wb + config.min_approach)
        return PlantState(
            t_wb=t_wb,
            q_load=0.0,
            t_cws=t_idle,
            t_cwr=t_idle,
            n_fans=n_fans,
            p_chiller=0.0,
            p_fan=0.0,
            p_pump=config.standby_power_kw,
            q_rej=0.0,
        )

    t_cws = min(max(t_cws_setpoint, t_wb + config.min_approach, T_CWS_MIN), T_CWS_MAX)
    residual = math.inf
    for _ in range(max_iterations):
        p_ch = chiller_power(config, q_load, t_cws)
        q_rej = heat_rejection(q_load, p_ch)
        coldest = tower_leaving_temp(config, t_wb, q_rej, n_fans, 1.0)
        achieved = min(max(t_cws_setpoint, coldest, T_CWS_MIN), T_CWS_MAX)
        residual = abs(achieved - t_cws)
        t_cws = achieved
        if residual < tolerance:
            break
    else:
        raise ConvergenceError(
            f"loop solve did not converge after {max_iterations} iterations "
            f"(last residual {residual:.4f} degF)",
            residual=residual,
        )

    p_ch = chiller_power(config, q_load, t_cws)
    q_rej = heat_rejection(q_load, p_ch)
    coldest = tower_leaving_temp(config, t_wb, q_rej, n_fans, 1.0)
    if coldest < t_cws - 1e-9:
        speed = _solve_fan_speed(config, t_wb, q_rej, n_fans, t_cws)
    else:
        speed = 1.0
    return PlantState(
        t_wb=t_wb,
        q_load=q_load,
        t_cws=t_cws,
        t_cwr=cw_return_temp(q_rej, config.cw_flow, t_cws),
        n_fans=n_fans,
        p_chiller=p_ch,
        p_fan=fan_power(config, n_fans, speed),
        p_pump=config.pump_power,
        q_rej=q_rej,
    )


@dataclass(frozen=True)
class SettingsPolicy:
    """Hour-by-hour operating policy for year simulations and sweeps.

    ``fixed`` mode holds one setpoint and fan stage all year. ``staged``
    mode follows the wet bulb with a constant offset (clamped to bounds)
    and stages fans up with load fraction, which is roughly how operators
    run these plants manually.
    """

    mode: str = "fixed"
    t_cws_setpoint: float = 75.0
    n_fans: int = 8
    wetbulb_offset: float = 7.0
    setpoint_bounds: tuple[float, float] = (65.0, 85.0)

    def __post_init__(self):
        if self.mode not in ("fixed", "staged"):
            raise DomainError(f"unknown policy mode {self.mode!r}")

    def settings(self, config: PlantConfig, t_wb: float, q_load: float) -> tuple[float, int]:
        if self.mode == "fixed":
            return self.t_cws_setpoint, self.n_fans
        lo, hi = self.setpoint_bounds
        setpoint = min(max(t_wb + self.wetbulb_offset, lo), hi)
        fraction = q_load / config.total_capacity
        stages = config.fan_stages()
        index = min(int(fraction * len(stages)), len(stages) - 1)
        return setpoint, stages[index]


def simulate_year(
    config: PlantConfig,
    weather: list[tuple[str, float, float]],
    policy: SettingsPolicy | None = None,
) -> list[tuple[str, PlantState]]:
    """Run the loop over an hourly (timestamp, t_wb, q_load) series.

    Returns one (timestamp, PlantState) per input hour. Hours with zero
    load carry zero loop power apart from the configured standby draw.
    """
    if policy is None:
        policy = SettingsPolicy()
    out = []
    for timestamp, t_wb, q_load in weather:
        setpoint, n_fans = policy.settings(config, t_wb, q_load)
        out.append((timestamp, simulate_point(config, t_wb, q_load, setpoint, n_fans)))
    return out


def config_to_dict(config: PlantConfig) -> dict:
    payload = asdict(config)
    payload["schema_version"] = PLANT_SCHEMA_VERSION
    return payload


def config_from_dict(payload: dict) -> PlantConfig:
    data = dict(payload)
    version = data.pop("schema_version", PLANT_SCHEMA_VERSION)
    if version != PLANT_SCHEMA_VERSION:
        raise SchemaError(
            f"plant config schema_version {version} not supported "
            f"(expected {PLANT_SCHEMA_VERSION})"
        )
    curves = data.pop("curves", None)
    try:
        curve_set = (
            CurveSet(**{k: tuple(v) if isinstance(v, list) else v for k, v in curves.items()})
            if curves
            else CurveSet()
        )
        return PlantConfig(curves=curve_set, **data)
    except TypeError as exc:
        raise SchemaError(f"bad plant config field: {exc}") from exc


def save_config(config: PlantConfig, path: str) -> None:
    with open(path, "w") as f:
        json.dump(config_to_dict(config), f, indent=2)
        f.write("\n")


def load_config(path: str) -> PlantConfig:
    with open(path) as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"plant config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(payload)
