"""Heterogeneous fleets: generation, steady-state initialisation and simulation."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields

import numba as nb
import numpy as np

from . import rng
from .controller import (
    CLAMP_ANY, DREW_UNIFORM, INST_DEGENERATE, PIVOT_ERROR, PROB_CAPPED, RATE_DEGENERATE,
    SWITCH_FORCED, SWITCH_STOCHASTIC, ControllerError, _update,
)
from .model import (
    NOMINAL_MODEL, ApplianceModel, ConfigurationError, SteadyState,
    sample_steady_state_temperature, steady_state_arrays,
)
from .signals import ReferenceSignal

THERMAL_PARAMS = ("alpha", "t_max", "t_min", "t_on", "t_off")
MAX_RESAMPLE_ROUNDS = 1000


@dataclass(frozen=True)
class FleetSpec:
    count: int
    base_model: ApplianceModel = NOMINAL_MODEL
    heterogeneity: float = 0.2
    w: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ConfigurationError(f"fleet size must be at least 1, got {self.count}")
        if not 0 <= self.heterogeneity < 1:
            raise ConfigurationError("heterogeneity must lie in [0, 1)")
        if not 0 < self.w < 1:
            raise ConfigurationError("w must lie in (0, 1)")


@dataclass
class Fleet:
    """Struct-of-arrays fleet. Quacks like :class:`ApplianceModel` with array fields,
    so the vectorised model functions accept it directly."""

    alpha: np.ndarray
    t_off: np.ndarray
    t_on: np.ndarray
    t_min: np.ndarray
    t_max: np.ndarray
    p_on: np.ndarray
    w: np.ndarray
    k: np.ndarray = field(init=False)
    t_bar_0: np.ndarray = field(init=False)
    duty: np.ndarray = field(init=False)
    p_0: np.ndarray = field(init=False)
    zeta_min: np.ndarray = field(init=False)
    zeta_max: np.ndarray = field(init=False)
    resamples: int = 0

    def __post_init__(self):
        (self.k, self.t_bar_0, self.duty, self.p_0,
         self.zeta_min, self.zeta_max) = steady_state_arrays(
            self.alpha, self.t_off, self.t_on, self.t_min, self.t_max, self.p_on)

    def __len__(self):
        return len(self.alpha)

    def model(self, i: int) -> ApplianceModel:
        return ApplianceModel(float(self.alpha[i]), float(self.t_off[i]), float(self.t_on[i]),
                              float(self.t_min[i]), float(self.t_max[i]), float(self.p_on[i]))

    def steady(self, i: int) -> SteadyState:
        return SteadyState(float(self.k[i]), float(self.t_bar_0[i]), float(self.duty[i]),
                           float(self.p_0[i]), float(self.zeta_min[i]), float(self.zeta_max[i]))

    def __getitem__(self, i: int) -> tuple[ApplianceModel, SteadyState]:
        return self.model(i), self.steady(i)

    def subset(self, index) -> "Fleet":
        sub = Fleet(*(getattr(self, f)[index] for f in ("alpha", "t_off", "t_on", "t_min", "t_max", "p_on", "w")))
        sub.resamples = self.resamples
        return sub

    @classmethod
    def homogeneous(cls, model: ApplianceModel, count: int, w: float = 0.9) -> "Fleet":
        full = lambda v: np.full(count, float(v))
        return cls(full(model.alpha), full(model.t_off), full(model.t_on), full(model.t_min),
                   full(model.t_max), full(model.p_on), full(w))


def generate_fleet(spec: FleetSpec) -> Fleet:
    """Scale each thermal parameter by an independent U[1-h, 1+h] factor per appliance.

    Models that break t_on < t_min < t_max < t_off are redrawn from the same
    appliance stream; the number of redraws is stored on the fleet.
    """
    n, h, base = spec.count, spec.heterogeneity, spec.base_model
    keys = rng.stream_keys(spec.seed, rng.FLEET, n)
    base_vals = np.array([getattr(base, p) for p in THERMAL_PARAMS])
    width = len(THERMAL_PARAMS)
    params = np.empty((n, width))
    todo = np.arange(n)
    resamples = 0
    for attempt in range(MAX_RESAMPLE_ROUNDS):
        u = rng.uniforms(keys[todo], attempt * width, width)
        params[todo] = base_vals * (1.0 + h * (2.0 * u - 1.0))
        alpha, t_max, t_min, t_on, t_off = params[todo].T
        bad = ~((t_on < t_min) & (t_min < t_max) & (t_max < t_off) & (alpha > 0))
        todo = todo[bad]
        if todo.size == 0:
            break
        resamples += todo.size
    else:
        raise ConfigurationError(f"{todo.size} appliances still invalid after {MAX_RESAMPLE_ROUNDS} redraws")
    alpha, t_max, t_min, t_on, t_off = params.T.copy()
    fleet = Fleet(alpha, t_off, t_on, t_min, t_max, np.full(n, base.p_on), np.full(n, spec.w))
    fleet.resamples = resamples
    return fleet


@dataclass
class FleetState:
    """Mutable per-appliance physical state plus controller memory."""

    temperature: np.ndarray
    compressor: np.ndarray  # bool
    pi_prev: np.ndarray
    z_prev: np.ndarray
    t_prev: np.ndarray
    rate_on_off: np.ndarray
    rate_off_on: np.ndarray
    switch_keys: np.ndarray  # uint64
    draws: np.ndarray  # int64, uniforms consumed per appliance

    def copy(self) -> "FleetState":
        return FleetState(*(getattr(self, f.name).copy() for f in fields(self)))

    def subset(self, index) -> "FleetState":
        return FleetState(*(getattr(self, f.name)[index].copy() for f in fields(self)))


def initialize_steady_state(fleet: Fleet, seed: int, t0: float = 0.0) -> FleetState:
    """Draw compressor ~ Bernoulli(duty) and temperature ~ f_0(T | compressor)."""
    n = len(fleet)
    u = rng.uniforms(rng.stream_keys(seed, rng.INIT, n), 0, 2)
    compressor = u[:, 0] < fleet.duty
    temperature = sample_steady_state_temperature(fleet, compressor, u[:, 1])
    zeros = np.zeros(n)
    return FleetState(np.asarray(temperature, dtype=float), compressor, np.ones(n), zeros.copy(),
                      np.full(n, float(t0)), zeros.copy(), zeros.copy(),
                      rng.stream_keys(seed, rng.SWITCH, n), np.zeros(n, dtype=np.int64))


@dataclass(frozen=True)
class StepPolicy:
    """Controller invocation times. ``kind`` is "fixed", "jittered" or "explicit"."""

    kind: str = "fixed"
    dt: float = 10.0
    jitter: float = 0.0
    times: tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("fixed", "jittered", "explicit"):
            raise ConfigurationError(f"unknown step policy {self.kind!r}")
        if self.kind != "explicit" and not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.kind == "jittered" and not 0 <= self.jitter < self.dt:
            raise ConfigurationError("jitter must lie in [0, dt)")
        if self.kind == "explicit" and (not self.times or np.any(np.diff((0.0,) + tuple(self.times)) <= 0)):
            raise ConfigurationError("explicit times must be positive and strictly increasing")

    def grid(self, horizon: float, breakpoints=()) -> np.ndarray:
        """Invocation times in (0, horizon], ending at ``horizon`` and split at breakpoints."""
        if self.kind == "fixed":
            n = math.ceil(horizon / self.dt - 1e-9)
            times = self.dt * np.arange(1, n + 1)
        elif self.kind == "jittered":
            gen = np.random.default_rng(self.seed)
            n = math.ceil(horizon / (self.dt - self.jitter)) + 1
            times = np.cumsum(gen.uniform(self.dt - self.jitter, self.dt + self.jitter, n))
        else:
            times = np.asarray(self.times, dtype=float)
        times = times[times < horizon]
        extra = [b for b in breakpoints if 0 < b < horizon]
        return np.unique(np.concatenate([times, extra, [horizon]]))

    @property
    def nominal_dt(self) -> float:
        if self.kind == "explicit":
            return float(np.diff((0.0,) + tuple(self.times))[-1])
        return self.dt


# ---------------------------------------------------------------------------
# per-step kernel

# aggregate slots written by the kernel
(AGG_ON_POWER, AGG_TEMP, AGG_Z, AGG_Z_EMP, AGG_PI, AGG_EXPECTED, AGG_VAR, AGG_FORCED,
 AGG_STOCH, AGG_CLAMPS, AGG_VIOL, AGG_OVERSHOOT, AGG_CAPPED, AGG_DEGEN, AGG_PIVOT) = range(15)
N_AGG = 15
BOUND_TOL = 1e-9  # degC, absorbs rounding in the excursion checks
FLAG_DRIFT_VIOLATION = 1 << 20
FLAG_OVERSHOOT_VIOLATION = 1 << 21


def _step_impl(t_now, pi_next, alpha, t_off, t_on, t_min, t_max, p_on, w, t_bar_0, zeta_min, zeta_max, p_0,
               temperature, compressor, pi_prev, z_prev, t_prev, r10, r01, keys, draws, flags_out, agg):
    n = alpha.size
    for a in nb.prange(n):
        dt = t_now - t_prev[a]
        drift = -math.expm1(-alpha[a] * dt)
        asym = t_on[a] if compressor[a] else t_off[a]
        temp = temperature[a] + (asym - temperature[a]) * drift
        temperature[a] = temp
        u = rng.uniform_at(keys[a], draws[a])
        new, pi, z, rp10, rp01, flags = _update(
            compressor[a], pi_prev[a], z_prev[a], t_prev[a], r10[a], r01[a], w[a],
            pi_next, temp, t_now, u,
            alpha[a], t_off[a], t_on[a], t_min[a], t_max[a], t_bar_0[a], zeta_min[a], zeta_max[a])
        if flags & DREW_UNIFORM:
            draws[a] += 1
        compressor[a] = new
        pi_prev[a] = pi
        z_prev[a] = z
        t_prev[a] = t_now
        r10[a] = rp10
        r01[a] = rp01
        # one-step excursion checks: drift bound and directional overshoot margins
        delta = (t_off[a] - t_min[a]) * drift
        if temp < t_min[a] - delta - BOUND_TOL or temp > t_max[a] + delta + BOUND_TOL:
            flags |= FLAG_DRIFT_VIOLATION
        if (temp < t_min[a] - (t_min[a] - t_on[a]) * drift - BOUND_TOL
                or temp > t_max[a] + (t_off[a] - t_max[a]) * drift + BOUND_TOL):
            flags |= FLAG_OVERSHOOT_VIOLATION
        flags_out[a] = flags

    for j in range(agg.size):
        agg[j] = 0.0
    for a in range(n):
        f = flags_out[a]
        if compressor[a]:
            agg[AGG_ON_POWER] += p_on[a]
        agg[AGG_TEMP] += temperature[a]
        agg[AGG_Z] += z_prev[a]
        agg[AGG_Z_EMP] += (t_bar_0[a] - temperature[a]) / (t_off[a] - t_bar_0[a])
        agg[AGG_PI] += pi_prev[a]
        expected = pi_prev[a] * p_0[a]
        agg[AGG_EXPECTED] += expected
        q = min(max(expected / p_on[a], 0.0), 1.0)
        agg[AGG_VAR] += p_on[a] * p_on[a] * q * (1.0 - q)
        if f & SWITCH_FORCED:
            agg[AGG_FORCED] += 1
        if f & SWITCH_STOCHASTIC:
            agg[AGG_STOCH] += 1
        if f & CLAMP_ANY:
            agg[AGG_CLAMPS] += 1
        if f & FLAG_DRIFT_VIOLATION:
            agg[AGG_VIOL] += 1
        if f & FLAG_OVERSHOOT_VIOLATION:
            agg[AGG_OVERSHOOT] += 1
        if f & PROB_CAPPED:
            agg[AGG_CAPPED] += 1
        if f & (RATE_DEGENERATE | INST_DEGENERATE):
            agg[AGG_DEGEN] += 1
        if f & PIVOT_ERROR:
            agg[AGG_PIVOT] += 1


if "NUMBA_THREADING_LAYER" not in os.environ:
    nb.config.THREADING_LAYER = "workqueue"
_step_serial = nb.njit(cache=True)(_step_impl)
_step_parallel = nb.njit(cache=True, parallel=True)(_step_impl)


def step_fleet(fleet: Fleet, state: FleetState, t_now: float, pi_next: float, workers: int = 1):
    """Propagate every appliance to ``t_now`` and invoke its controller, in place.

    Returns (per-appliance flags, aggregate vector). The aggregates are reduced
    sequentially so they do not depend on the worker count.
    """
    kernel = _step_serial
    if workers > 1:
        nb.set_num_threads(min(workers, nb.config.NUMBA_NUM_THREADS))
        kernel = _step_parallel
    flags = np.empty(len(fleet), dtype=np.int64)
    agg = np.empty(N_AGG)
    kernel(float(t_now), float(pi_next), fleet.alpha, fleet.t_off, fleet.t_on, fleet.t_min, fleet.t_max,
           fleet.p_on, fleet.w, fleet.t_bar_0, fleet.zeta_min, fleet.zeta_max, fleet.p_0,
           state.temperature, state.compressor, state.pi_prev, state.z_prev, state.t_prev,
           state.rate_on_off, state.rate_off_on, state.switch_keys, state.draws, flags, agg)
    return flags, agg


# ---------------------------------------------------------------------------
# simulation driver

TRACE_COLUMNS = ("t_s", "pi_requested", "pi_clipped_mean", "power_w_total", "power_w_per_appliance",
                 "mean_temp_c", "z_mean", "forced_switches", "stochastic_switches", "clamps")


@dataclass
class SimulationTrace:
    """One row per controller invocation time t_i.

    Temperatures are measured at t_i before switching; power, the clipped
    reference and the expected power refer to the upcoming interval.
    """

    t_s: np.ndarray
    pi_requested: np.ndarray
    pi_clipped_mean: np.ndarray
    power_w_total: np.ndarray
    mean_temp_c: np.ndarray
    z_mean: np.ndarray
    z_empirical: np.ndarray
    expected_power_w: np.ndarray  # mean over appliances of pi_clipped * p_0
    power_sd_w: np.ndarray  # binomial standard deviation of the per-appliance mean power
    forced_switches: np.ndarray
    stochastic_switches: np.ndarray
    clamps: np.ndarray
    drift_violations: np.ndarray
    overshoot_violations: np.ndarray
    capped: np.ndarray
    degenerate: np.ndarray
    n_appliances: int
    appliance_temperature: np.ndarray | None = None  # (steps, N)
    appliance_compressor: np.ndarray | None = None
    appliance_pi: np.ndarray | None = None
    final_state: FleetState | None = None

    @property
    def power_w_per_appliance(self) -> np.ndarray:
        return self.power_w_total / self.n_appliances

    def __len__(self):
        return len(self.t_s)

    def columns(self) -> dict[str, np.ndarray]:
        return {c: getattr(self, c) for c in TRACE_COLUMNS}


def simulate(fleet: Fleet, signal: ReferenceSignal, policy: StepPolicy, horizon: float, *,
             state: FleetState | None = None, seed: int = 0, record_appliances: bool = False,
             workers: int = 1) -> SimulationTrace:
    """Run the fleet from t=0 (or ``state``) to ``horizon``.

    Steps are split at signal breakpoints so every interval sees one reference
    value. The initial memory assumes pi = 1 on the interval before the first
    invocation. ``state`` is copied, never modified.
    """
    if not horizon > 0:
        raise ConfigurationError("horizon must be positive")
    state = initialize_steady_state(fleet, seed) if state is None else state.copy()
    times = policy.grid(horizon, signal.times)
    nxt = np.append(times[1:], times[-1] + policy.nominal_dt)
    pi_req = np.array([signal.value_for_interval(a, b) for a, b in zip(times, nxt)])

    n_steps, n = len(times), len(fleet)
    aggs = np.empty((n_steps, N_AGG))
    rec_t = np.empty((n_steps, n)) if record_appliances else None
    rec_c = np.empty((n_steps, n), dtype=bool) if record_appliances else None
    rec_pi = np.empty((n_steps, n)) if record_appliances else None
    for i, t in enumerate(times):
        _, aggs[i] = step_fleet(fleet, state, t, pi_req[i], workers)
        if aggs[i, AGG_PIVOT]:
            raise ControllerError(f"{int(aggs[i, AGG_PIVOT])} appliances hit a pivot singularity at t={t}")
        if record_appliances:
            rec_t[i] = state.temperature  # propagated to t_i; switching leaves it unchanged
            rec_c[i] = state.compressor
            rec_pi[i] = state.pi_prev

    return SimulationTrace(
        t_s=times, pi_requested=pi_req, pi_clipped_mean=aggs[:, AGG_PI] / n,
        power_w_total=aggs[:, AGG_ON_POWER], mean_temp_c=aggs[:, AGG_TEMP] / n,
        z_mean=aggs[:, AGG_Z] / n, z_empirical=aggs[:, AGG_Z_EMP] / n,
        expected_power_w=aggs[:, AGG_EXPECTED] / n, power_sd_w=np.sqrt(aggs[:, AGG_VAR]) / n,
        forced_switches=aggs[:, AGG_FORCED].astype(np.int64),
        stochastic_switches=aggs[:, AGG_STOCH].astype(np.int64),
        clamps=aggs[:, AGG_CLAMPS].astype(np.int64),
        drift_violations=aggs[:, AGG_VIOL].astype(np.int64),
        overshoot_violations=aggs[:, AGG_OVERSHOOT].astype(np.int64),
        capped=aggs[:, AGG_CAPPED].astype(np.int64), degenerate=aggs[:, AGG_DEGEN].astype(np.int64),
        n_appliances=n, appliance_temperature=rec_t, appliance_compressor=rec_c, appliance_pi=rec_pi,
        final_state=state,
    )


@dataclass(frozen=True)
class Metrics:
    rmse_w: float
    max_abs_error_w: float
    drift_violations: int
    overshoot_violations: int
    clamps: int
    capped: int
    error_w: np.ndarray = field(repr=False)

    def summary(self) -> str:
        return (f"rmse_w={self.rmse_w:.6g} max_abs_error_w={self.max_abs_error_w:.6g} "
                f"violations={self.drift_violations} overshoot_violations={self.overshoot_violations} "
                f"clamps={self.clamps}")


def tracking_error(trace: SimulationTrace) -> np.ndarray:
    """Per-appliance power minus the clipped reference times the steady-state power."""
    return trace.power_w_per_appliance - trace.expected_power_w


def aggregate_metrics(trace: SimulationTrace) -> Metrics:
    err = tracking_error(trace)
    return Metrics(
        rmse_w=float(np.sqrt(np.mean(err ** 2))) if len(err) else 0.0,
        max_abs_error_w=float(np.max(np.abs(err))) if len(err) else 0.0,
        drift_violations=int(trace.drift_violations.sum()),
        overshoot_violations=int(trace.overshoot_violations.sum()),
        clamps=int(trace.clamps.sum()),
        capped=int(trace.capped.sum()),
        error_w=err,
    )
