"""Discrete-time distribution-referred switching controller.

The scalar kernels (underscore prefixed) are numba-compiled and shared with the
fleet simulation loop; the public functions wrap them with dataclass inputs and
argument checks.

Notation: ``z`` is the normalised displacement of the population mean
temperature from its steady-state value (z <= 0 provides energy, z > 0 absorbs
it), ``pi`` the reference power as a multiple of the steady-state power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numba as nb

from .model import ApplianceModel, SteadyState, steady_state

EPS_PIVOT = 1e-9
EPS_RATE = 1e-12
RATE_CEILING = 1.0  # 1/s, substituted for rates with a vanishing denominator

# diagnostic bit flags returned by the update kernel
CLAMP_ENERGY = 1
CLAMP_POWER_LOW = 2
CLAMP_POWER_HIGH = 4
SWITCH_FORCED = 8
SWITCH_STOCHASTIC = 16
PROB_CAPPED = 32
RATE_DEGENERATE = 64
INST_DEGENERATE = 128
DREW_UNIFORM = 256
PIVOT_ERROR = 512
CLAMP_ANY = CLAMP_ENERGY | CLAMP_POWER_LOW | CLAMP_POWER_HIGH


class ControllerError(ArithmeticError):
    """z came within EPS_PIVOT of a pivot: the distribution is fully contracted."""


_jit = nb.njit(cache=True)


@_jit
def update_z(z_prev, pi, alpha_dt):
    """Relax z over one interval of constant reference ``pi``; ``alpha_dt`` = alpha * dt."""
    decay = math.exp(-alpha_dt)
    return z_prev * decay + (pi - 1.0) * -math.expm1(-alpha_dt)


@_jit
def _select_reference(z, t_min, t_max):
    return t_max if z <= 0.0 else t_min


@_jit
def _energy_limits(pi, z, w, zeta_min, zeta_max):
    if z <= w * zeta_max:
        lower = 1.0 + w * zeta_max
        if pi < lower:
            return lower, CLAMP_ENERGY
    elif z >= w * zeta_min:
        upper = 1.0 + w * zeta_min
        if pi > upper:
            return upper, CLAMP_ENERGY
    return pi, 0


@_jit
def _power_bounds(z, t_off, t_on, t_min, t_max, t_bar_0):
    span = t_max - t_min
    head = t_off - t_bar_0
    if z <= 0.0:
        lower = (t_bar_0 - t_min) / span * (t_off - t_max) / head
        upper = (t_off - t_max) / head + (t_max - t_bar_0) * (t_max - t_on) / (span * head)
    else:
        lower = (t_max - t_bar_0) / span * (t_off - t_min) / head
        upper = (t_off - t_min) / head + (t_bar_0 - t_min) * (t_min - t_on) / (span * head)
    return lower, upper


@_jit
def _power_limits(pi, z, t_off, t_on, t_min, t_max, t_bar_0):
    lower, upper = _power_bounds(z, t_off, t_on, t_min, t_max, t_bar_0)
    if pi < lower:
        return lower, CLAMP_POWER_LOW
    if pi > upper:
        return upper, CLAMP_POWER_HIGH
    return pi, 0


@_jit
def _mode_quantities(z, pi_prev, pi_next, r_minus, r_plus, t_off, t_bar_0):
    head = t_off - t_bar_0
    zeta_minus = (t_bar_0 - r_minus) / head
    zeta_plus = (t_bar_0 - r_plus) / head
    bad = abs(z - zeta_minus) <= EPS_PIVOT or abs(z - zeta_plus) <= EPS_PIVOT
    if bad:
        return zeta_minus, zeta_plus, 0.0, 0.0, 1.0, 1.0, True
    beta_minus = ((pi_prev - 1.0) - z) / (z - zeta_minus)
    beta_plus = ((pi_next - 1.0) - z) / (z - zeta_plus)
    return zeta_minus, zeta_plus, beta_minus, beta_plus, 1.0 - z / zeta_minus, 1.0 - z / zeta_plus, False


@_jit
def _forced_bounds(r, s, t_min, t_max):
    return r - (r - t_min) * s, r - (r - t_max) * s


@_jit
def _guard(x):
    if abs(x) > EPS_RATE:
        return x, False
    return EPS_RATE if x >= 0.0 else -EPS_RATE, True


@_jit
def _rates(temp, beta, s, r, alpha, t_off, t_on):
    """Returns (rate on->off, rate off->on, degenerate)."""
    p, dp = _guard((temp - t_off) + (t_off - r) * (1.0 - s))
    q, dq = _guard((temp - t_on) + (t_on - r) * (1.0 - s))
    x, dx = _guard((temp - t_off) + (temp - r) * beta)
    y, dy = _guard((temp - t_on) + (temp - r) * beta)
    # x*y/(p*q) is exactly 1 in the steady state, which keeps the rates exactly 0 there
    xi = alpha * alpha * (x * y / (p * q) * (p + q) - (1.0 + beta) * (x + y))
    r10 = max(0.0, -xi / (alpha * x))
    r01 = max(0.0, -xi / (alpha * y))
    degenerate = dp or dq or dx or dy
    if degenerate:
        r10 = min(r10, RATE_CEILING)
        r01 = min(r01, RATE_CEILING)
    return r10, r01, degenerate


@_jit
def _continuous_probability(dt, rate_fwd_prev, rate_back_now):
    return min(1.0, 0.5 * dt * (rate_fwd_prev + rate_back_now))


@_jit
def _instantaneous_probability(temp, compressor, r_minus, beta_minus, r_plus, beta_plus, t_off, t_on):
    """Returns (probability, degenerate)."""
    t_asym = t_off if compressor else t_on
    num = (temp - t_asym) + (temp - r_plus) * beta_plus
    den = (temp - t_asym) + (temp - r_minus) * beta_minus
    if abs(den) <= EPS_RATE:
        return (1.0 if num * den < 0.0 else 0.0), True
    return min(1.0, max(0.0, 1.0 - num / den)), False


@_jit
def _update(compressor, pi_prev, z_prev, t_prev, r10_fwd, r01_fwd, w,
            pi_next, temp, t_now, u,
            alpha, t_off, t_on, t_min, t_max, t_bar_0, zeta_min, zeta_max):
    """One controller invocation. Returns (compressor, pi, z, r10_plus, r01_plus, flags)."""
    dt = t_now - t_prev
    z = update_z(z_prev, pi_prev, alpha * dt)

    pi, flags = _energy_limits(pi_next, z, w, zeta_min, zeta_max)
    pi, f = _power_limits(pi, z, t_off, t_on, t_min, t_max, t_bar_0)
    flags |= f

    r_minus = _select_reference(z_prev, t_min, t_max)
    r_plus = _select_reference(z, t_min, t_max)
    _, _, b_minus, b_plus, s_minus, s_plus, bad = _mode_quantities(z, pi_prev, pi, r_minus, r_plus, t_off, t_bar_0)
    if bad:
        return compressor, pi, z, 0.0, 0.0, flags | PIVOT_ERROR

    r10_minus, r01_minus, d1 = _rates(temp, b_minus, s_minus, r_minus, alpha, t_off, t_on)
    r10_plus, r01_plus, d2 = _rates(temp, b_plus, s_plus, r_plus, alpha, t_off, t_on)
    if d1 or d2:
        flags |= RATE_DEGENERATE

    if compressor:
        p_cont = _continuous_probability(dt, r10_fwd, r10_minus)
    else:
        p_cont = _continuous_probability(dt, r01_fwd, r01_minus)
    p_inst, d3 = _instantaneous_probability(temp, compressor, r_minus, b_minus, r_plus, b_plus, t_off, t_on)
    if d3:
        flags |= INST_DEGENERATE
    prob = p_cont + p_inst
    if prob > 1.0:
        prob = 1.0
        flags |= PROB_CAPPED

    # the forced rules hold whatever the current state, so a device left outside
    # [t_low, t_high] by a one-step overshoot is held in its corrective state
    t_low, t_high = _forced_bounds(r_plus, s_plus, t_min, t_max)
    if temp <= t_low:
        new = False
    elif temp >= t_high:
        new = True
    else:
        flags |= DREW_UNIFORM
        new = (not compressor) if u < prob else compressor
        if new != compressor:
            flags |= SWITCH_STOCHASTIC
        return new, pi, z, r10_plus, r01_plus, flags
    if new != compressor:
        flags |= SWITCH_FORCED
    return new, pi, z, r10_plus, r01_plus, flags


# ---------------------------------------------------------------------------
# public API


class ModeQuantities(NamedTuple):
    r_minus: float
    r_plus: float
    zeta_minus: float
    zeta_plus: float
    beta_minus: float
    beta_plus: float
    s_minus: float
    s_plus: float


@dataclass(frozen=True)
class ControllerMemory:
    """Per-appliance state carried between controller invocations."""

    compressor: bool
    pi_prev: float = 1.0
    z_prev: float = 0.0
    t_prev: float = 0.0
    rate_on_off_fwd: float = 0.0
    rate_off_on_fwd: float = 0.0
    w: float = 0.9

    def __post_init__(self):
        if not 0 < self.w < 1:
            raise ValueError("w must lie in (0, 1)")
        if self.pi_prev < 0 or self.rate_on_off_fwd < 0 or self.rate_off_on_fwd < 0:
            raise ValueError("pi_prev and rates must be non-negative")


def steady_memory(compressor: bool, t0: float = 0.0, w: float = 0.9) -> ControllerMemory:
    """Memory for a device that was in the steady state up to ``t0``."""
    return ControllerMemory(bool(compressor), 1.0, 0.0, float(t0), 0.0, 0.0, w)


@dataclass(frozen=True)
class Diagnostics:
    clamps: tuple[str, ...]
    cause: str | None  # "forced", "stochastic" or None
    probability: float  # combined switching probability (0 for forced switches)
    capped: bool
    degenerate: bool
    flags: int

    @classmethod
    def from_flags(cls, flags: int, probability: float) -> "Diagnostics":
        clamps = tuple(name for bit, name in ((CLAMP_ENERGY, "energy"), (CLAMP_POWER_LOW, "power-lower"),
                                              (CLAMP_POWER_HIGH, "power-upper")) if flags & bit)
        cause = "forced" if flags & SWITCH_FORCED else "stochastic" if flags & SWITCH_STOCHASTIC else None
        return cls(clamps, cause, probability, bool(flags & PROB_CAPPED),
                   bool(flags & (RATE_DEGENERATE | INST_DEGENERATE)), int(flags))


def select_reference(z: float, model: ApplianceModel) -> float:
    """Pivot temperature: t_max in energy-provision mode (z <= 0), t_min otherwise."""
    return _select_reference(z, model.t_min, model.t_max)


def apply_energy_limits(pi_next: float, z: float, w: float, steady: SteadyState) -> float:
    return _energy_limits(pi_next, z, w, steady.zeta_min, steady.zeta_max)[0]


def power_bounds(z: float, model: ApplianceModel, steady: SteadyState | None = None) -> tuple[float, float]:
    """Admissible (lower, upper) reference range in the mode selected by ``z``."""
    steady = steady or steady_state(model)
    return _power_bounds(z, model.t_off, model.t_on, model.t_min, model.t_max, steady.t_bar_0)


def apply_power_limits(pi_next: float, z: float, model: ApplianceModel, steady: SteadyState | None = None) -> float:
    steady = steady or steady_state(model)
    return _power_limits(pi_next, z, model.t_off, model.t_on, model.t_min, model.t_max, steady.t_bar_0)[0]


def mode_quantities(z, pi_prev, pi_next, r_prev, r_next, model: ApplianceModel,
                    steady: SteadyState | None = None) -> ModeQuantities:
    """Left (-) and right (+) limits of zeta, beta and the scale factor s at an invocation."""
    steady = steady or steady_state(model)
    zm, zp, bm, bp, sm, sp, bad = _mode_quantities(z, pi_prev, pi_next, r_prev, r_next, model.t_off, steady.t_bar_0)
    if bad:
        raise ControllerError(f"z={z} within {EPS_PIVOT} of a pivot")
    return ModeQuantities(r_prev, r_next, zm, zp, bm, bp, sm, sp)


def forced_bounds(r_plus: float, s_plus: float, model: ApplianceModel) -> tuple[float, float]:
    """Contracted temperature window (t_low, t_high); devices outside it switch deterministically."""
    if not 0 < s_plus <= 1:
        raise ValueError("s_plus must lie in (0, 1]")
    return _forced_bounds(r_plus, s_plus, model.t_min, model.t_max)


def switching_rates(temperature, beta, s, r, model: ApplianceModel) -> tuple[float, float]:
    """Continuous switching rates (on->off, off->on) in 1/s at a given temperature."""
    r10, r01, _ = _rates(temperature, beta, s, r, model.alpha, model.t_off, model.t_on)
    return r10, r01


def continuous_switch_probability(dt: float, rate_fwd_prev: float, rate_back_now: float) -> float:
    """Trapezoidal integral of the switching rate over the preceding interval, capped at 1."""
    if dt < 0 or rate_fwd_prev < 0 or rate_back_now < 0:
        raise ValueError("dt and rates must be non-negative")
    return _continuous_probability(dt, rate_fwd_prev, rate_back_now)


def instantaneous_switch_probability(temperature, mq: ModeQuantities, compressor: bool,
                                     model: ApplianceModel) -> float:
    return _instantaneous_probability(temperature, bool(compressor), mq.r_minus, mq.beta_minus,
                                      mq.r_plus, mq.beta_plus, model.t_off, model.t_on)[0]


def update_compressor_state(model: ApplianceModel, memory: ControllerMemory, pi_next: float,
                            temperature: float, t_now: float, u: float):
    """Run one controller invocation at ``t_now``.

    ``pi_next`` is the requested reference for the upcoming interval and
    ``temperature`` the measured temperature at ``t_now``. ``u`` is a uniform
    variate in [0, 1), consumed only when no forced switch applies.

    Returns ``(compressor, memory, diagnostics)``.
    """
    if not t_now > memory.t_prev:
        raise ValueError(f"time must increase: t_now={t_now} <= t_prev={memory.t_prev}")
    if pi_next < 0:
        raise ValueError("pi_next must be non-negative")
    steady = steady_state(model)
    new, pi, z, r10, r01, flags = _update(
        memory.compressor, memory.pi_prev, memory.z_prev, memory.t_prev,
        memory.rate_on_off_fwd, memory.rate_off_on_fwd, memory.w,
        pi_next, temperature, t_now, u,
        model.alpha, model.t_off, model.t_on, model.t_min, model.t_max,
        steady.t_bar_0, steady.zeta_min, steady.zeta_max,
    )
    if flags & PIVOT_ERROR:
        raise ControllerError(f"z={z} within {EPS_PIVOT} of a pivot")
    prob = 0.0
    if not flags & SWITCH_FORCED:
        prob = _switch_probability(model, steady, memory, pi, z, temperature, t_now)
    memory = replace(memory, compressor=bool(new), pi_prev=pi, z_prev=z, t_prev=t_now,
                     rate_on_off_fwd=r10, rate_off_on_fwd=r01)
    return bool(new), memory, Diagnostics.from_flags(flags, prob)


def _switch_probability(model, steady, memory, pi, z, temperature, t_now):
    # recomputed for diagnostics only; the decision itself happened in _update
    mq = mode_quantities(z, memory.pi_prev, pi, select_reference(memory.z_prev, model),
                         select_reference(z, model), model, steady)
    back = switching_rates(temperature, mq.beta_minus, mq.s_minus, mq.r_minus, model)
    if memory.compressor:
        p = continuous_switch_probability(t_now - memory.t_prev, memory.rate_on_off_fwd, back[0])
    else:
        p = continuous_switch_probability(t_now - memory.t_prev, memory.rate_off_on_fwd, back[1])
    return min(1.0, p + instantaneous_switch_probability(temperature, mq, memory.compressor, model))
