"""Mixed-integer particle swarm optimizer for (t_cws, n_fans).

The condenser water supply setpoint is continuous; the tower fan stage is
discrete. Particles are seeded uniformly across the setpoint range within
every fan stage, and the fan coordinate is frozen for a particle's
lifetime, so every stage stays covered throughout the run. Velocities
follow the classic update

    V <- w*V + c1*r1*(best_i - X) + c2*r2*(best_all - X)
    X <- X + V

with r1 = r2 = 1 in deterministic mode and per-particle uniform(0,1)
draws otherwise. An exhaustive grid oracle is provided for verification:
the swarm should never beat it (on-grid) and must come within a fraction
of a percent of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cwloop.errors import ConfigError, DomainError
from cwloop.plant import PlantConfig, approach_batch, tower_leaving_temp
from cwloop.surrogate import SurrogateBundle
from cwloop.units import KW_PER_TON

# Consecutive no-improvement iterations before an early stop.
STALL_LIMIT = 10


@dataclass(frozen=True)
class SwarmConfig:
    n_particles_per_stratum: int = 10
    n_iterations: int = 50
    w: float = 0.7              # inertia
    c1: float = 1.5             # cognitive pull toward the particle's best
    c2: float = 1.5             # social pull toward the global best
    t_cws_bounds: tuple[float, float] = (65.0, 85.0)
    fan_strata: tuple[int, ...] = (2, 4, 6, 8)
    seed: int = 0
    stochastic: bool = True
    # Early stop once the per-iteration improvement stays strictly below
    # this for STALL_LIMIT consecutive iterations; 0.0 disables it.
    convergence_tolerance: float = 0.0
    velocity_clamp_fraction: float = 0.25

    def __post_init__(self):
        lo, hi = self.t_cws_bounds
        if not lo < hi:
            raise ConfigError(f"t_cws_bounds must be ordered, got {self.t_cws_bounds}")
        if min(self.w, self.c1, self.c2) < 0:
            raise ConfigError("w, c1, c2 must be >= 0")
        if self.w >= 1.0:
            raise ConfigError(f"inertia w must be < 1 for damping, got {self.w}")
        if self.n_particles_per_stratum < 1 or self.n_iterations < 1:
            raise ConfigError("particle and iteration counts must be >= 1")
        if not self.fan_strata:
            raise ConfigError("fan_strata must be non-empty")


@dataclass
class Particle:
    t_cws: float
    n_fans: int               # frozen for the particle's lifetime
    velocity: float = 0.0
    best_position: float = 0.0
    best_value: float = math.inf


@dataclass(frozen=True)
class Candidate:
    t_cws: float
    n_fans: int
    objective_value: float
    feasible: bool = True
    penalty: float = 0.0


@dataclass
class ConvergenceTrace:
    """Global best value after initialization and after each iteration."""

    values: list[float] = field(default_factory=list)
    n_iterations_run: int = 0
    converged_at: int = 0
    n_evaluations: int = 0
    evaluations_per_stratum: dict[int, int] = field(default_factory=dict)


def _evaluate(objective, ts: np.ndarray, ns: np.ndarray) -> np.ndarray:
    batch = getattr(objective, "batch", None)
    if batch is not None:
        return np.asarray(batch(ts, ns), dtype=float)
    return np.array([objective(float(t), int(n)) for t, n in zip(ts, ns)])


def _is_better(value: float, t: float, n: int, best: tuple) -> bool:
    """Strict improvement, with ties broken to lower t_cws then fewer fans."""
    return (value, t, n) < best


def optimize(
    objective,
    config: SwarmConfig | None = None,
    baseline: tuple[float, int] | None = None,
) -> tuple[Candidate, ConvergenceTrace]:
    """Minimize ``objective(t_cws, n_fans)`` over the configured box.

    ``objective`` must be total over bounds x strata and return finite
    values (use penalties for infeasibility). When a ``baseline``
    operating point is supplied it is injected as one particle's initial
    position, which guarantees the returned value is no worse than the
    baseline's.
    """
    if config is None:
        config = SwarmConfig()
    lo, hi = config.t_cws_bounds
    rng = np.random.default_rng(config.seed)
    n_per = config.n_particles_per_stratum
    strata = tuple(sorted(config.fan_strata))

    particles: list[Particle] = []
    for stage in strata:
        if config.stochastic:
            positions = rng.uniform(lo, hi, size=n_per)
        else:
            positions = lo + (np.arange(n_per) + 0.5) * (hi - lo) / n_per
        for t in positions:
            particles.append(Particle(t_cws=float(t), n_fans=stage))
    if baseline is not None:
        t_base, n_base = baseline
        for particle in particles:
            if particle.n_fans == int(n_base):
                particle.t_cws = float(min(max(t_base, lo), hi))
                break
        else:
            raise ConfigError(
                f"baseline fan stage {n_base} is not in strata {strata}"
            )

    trace = ConvergenceTrace(evaluations_per_stratum={s: 0 for s in strata})
    best = (math.inf, math.inf, 0)  # (value, t_cws, n_fans)

    def evaluate_swarm() -> np.ndarray:
        ts = np.array([p.t_cws for p in particles])
        ns = np.array([p.n_fans for p in particles])
        values = _evaluate(objective, ts, ns)
        trace.n_evaluations += len(particles)
        for stage in strata:
            trace.evaluations_per_stratum[stage] += n_per
        return values

    values = evaluate_swarm()
    for particle, value in zip(particles, values):
        particle.best_position = particle.t_cws
        particle.best_value = float(value)
        if _is_better(float(value), particle.t_cws, particle.n_fans, best):
            best = (float(value), particle.t_cws, particle.n_fans)
    trace.values.append(best[0])

    v_max = config.velocity_clamp_fraction * (hi - lo)
    stall = 0
    for iteration in range(1, config.n_iterations + 1):
        g_best_t = best[1]
        for particle in particles:
            r1 = rng.random() if config.stochastic else 1.0
            r2 = rng.random() if config.stochastic else 1.0
            velocity = (
                config.w * particle.velocity
                + config.c1 * r1 * (particle.best_position - particle.t_cws)
                + config.c2 * r2 * (g_best_t - particle.t_cws)
            )
            particle.velocity = min(max(velocity, -v_max), v_max)
            particle.t_cws = min(max(particle.t_cws + particle.velocity, lo), hi)

        previous = best[0]
        values = evaluate_swarm()
        for particle, value in zip(particles, values):
            value = float(value)
            if value < particle.best_value:
                particle.best_value = value
                particle.best_position = particle.t_cws
            if _is_better(value, particle.t_cws, particle.n_fans, best):
                best = (value, particle.t_cws, particle.n_fans)
        trace.values.append(best[0])
        trace.n_iterations_run = iteration

        if previous - best[0] < config.convergence_tolerance:
            stall += 1
            if stall >= STALL_LIMIT:
                break
        else:
            stall = 0

    improvements = [
        i for i in range(1, len(trace.values)) if trace.values[i] < trace.values[i - 1]
    ]
    trace.converged_at = max(improvements) if improvements else 1

    value, t_best, n_best = best
    feasible, penalty = _feasibility_of(objective, t_best, n_best)
    candidate = Candidate(
        t_cws=t_best,
        n_fans=int(n_best),
        objective_value=value,
        feasible=feasible,
        penalty=penalty,
    )
    return candidate, trace


def _feasibility_of(objective, t: float, n: int) -> tuple[bool, float]:
    penalty_fn = getattr(objective, "penalty", None)
    if penalty_fn is None:
        return True, 0.0
    penalty = float(penalty_fn(t, int(n)))
    return penalty == 0.0, penalty


def grid_oracle(
    objective,
    t_cws_bounds: tuple[float, float],
    step: float,
    strata: tuple[int, ...] = (2, 4, 6, 8),
) -> Candidate:
    """Exhaustive minimum over the step grid; the verification oracle.

    Ties break to lower t_cws, then fewer fans. Never beaten on-grid by
    any other search, by construction.
    """
    if step <= 0:
        raise DomainError(f"step must be > 0, got {step}")
    lo, hi = t_cws_bounds
    n_steps = int(math.floor((hi - lo) / step + 1e-9))
    ts = np.round(lo + step * np.arange(n_steps + 1), 10)
    best = None
    for stage in sorted(strata):
        values = _evaluate(objective, ts, np.full(len(ts), stage, dtype=int))
        k = int(np.argmin(values))  # first occurrence = lowest t on ties
        entry = (float(values[k]), float(ts[k]), int(stage))
        if best is None or entry < best:
            best = entry
    value, t_best, n_best = best
    feasible, penalty = _feasibility_of(objective, t_best, n_best)
    return Candidate(
        t_cws=t_best,
        n_fans=n_best,
        objective_value=value,
        feasible=feasible,
        penalty=penalty,
    )


class LoopObjective:
    """Total condenser-loop power (or cost rate) from the chained surrogate.

    value = p_chiller(t_cws, q_load) + p_fan(t_wb, q_rej | n_fans) + p_pump,
    with q_rej itself predicted from (q_load, t_cws). Setpoints below the
    coldest water the tower could physically supply at full fan speed for
    the candidate stage earn a quadratic penalty, which keeps the function
    total (finite everywhere) the way the swarm needs.
    """

    def __init__(
        self,
        bundle: SurrogateBundle,
        plant: PlantConfig,
        q_load: float,
        t_wb: float,
        mode: str = "power",
        tariff=None,
        timestamp=None,
    ):
        if mode not in ("power", "cost"):
            raise ConfigError(f"mode must be power or cost, got {mode!r}")
        if mode == "cost":
            if tariff is None or timestamp is None:
                raise ConfigError("cost mode needs a tariff schedule and a timestamp")
            from cwloop.tariff import interval_rate

            self._rate = interval_rate(tariff, timestamp)
        else:
            self._rate = 1.0
        self.bundle = bundle
        self.plant = plant
        self.q_load = float(q_load)
        self.t_wb = float(t_wb)
        self.mode = mode
        # Penalties scale with full-load chiller power so an infeasible
        # setpoint can never undercut a feasible candidate of interest.
        self.penalty_scale = (
            plant.n_chillers
            * plant.chiller_rated_capacity
            * KW_PER_TON
            / plant.chiller_rated_cop
        ) * self._rate

    def feasibility_floor(self, n_fans: int, q_rej: float) -> float:
        """Coldest achievable supply temperature for the stage at full speed."""
        return tower_leaving_temp(
            self.plant, self.t_wb, max(float(q_rej), 0.0), int(n_fans), 1.0
        )

    def batch(self, ts, ns) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        ns = np.asarray(ns, dtype=int)
        parts = self.bundle.predict_components(
            np.full(len(ts), self.q_load), np.full(len(ts), self.t_wb),
            ts, ns, self.plant.pump_power,
        )
        value = parts["total"] * self._rate
        airflow = ns / self.plant.n_tower_cells
        floors = self.t_wb + approach_batch(
            self.plant, self.t_wb, np.maximum(parts["q_rej"], 0.0), airflow
        )
        violation = np.maximum(floors - ts, 0.0)
        return value + 10.0 * violation**2 * self.penalty_scale

    def __call__(self, t_cws: float, n_fans: int) -> float:
        return float(self.batch(np.array([t_cws]), np.array([n_fans]))[0])

    def penalty(self, t_cws: float, n_fans: int) -> float:
        parts = self.bundle.predict_components(
            [self.q_load], [self.t_wb], [t_cws], [n_fans], self.plant.pump_power
        )
        violation = max(self.feasibility_floor(n_fans, parts["q_rej"][0]) - t_cws, 0.0)
        return 10.0 * violation**2 * self.penalty_scale

    def components(self, t_cws: float, n_fans: int) -> dict:
        parts = self.bundle.predict_components(
            [self.q_load], [self.t_wb], [t_cws], [n_fans], self.plant.pump_power
        )
        return {k: float(v[0]) for k, v in parts.items()}


def loop_objective(
    bundle: SurrogateBundle,
    plant: PlantConfig,
    q_load: float,
    t_wb: float,
    mode: str = "power",
    tariff=None,
    timestamp=None,
) -> LoopObjective:
    return LoopObjective(bundle, plant, q_load, t_wb, mode, tariff, timestamp)
