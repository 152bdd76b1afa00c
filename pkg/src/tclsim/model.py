"""First-order refrigerator model: exact thermal propagation and steady-state quantities.

Temperatures are in degrees Celsius, time in seconds and power in watts throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid appliance models, fleet specifications or signals."""


@dataclass(frozen=True)
class ApplianceModel:
    alpha: float  # thermal rate constant, 1/s
    t_off: float  # asymptotic temperature with the compressor off
    t_on: float  # asymptotic temperature with the compressor on
    t_min: float
    t_max: float
    p_on: float = 70.0

    def __post_init__(self):
        if not (self.t_on < self.t_min < self.t_max < self.t_off):
            raise ConfigurationError(
                f"require t_on < t_min < t_max < t_off, got "
                f"{self.t_on}, {self.t_min}, {self.t_max}, {self.t_off}"
            )
        if not (self.alpha > 0 and self.p_on > 0):
            raise ConfigurationError("alpha and p_on must be positive")


#: Domestic refrigerator class used for all reference experiments.
NOMINAL_MODEL = ApplianceModel(alpha=1 / 7200, t_off=20.0, t_on=-44.0, t_min=2.0, t_max=7.0, p_on=70.0)


@dataclass(frozen=True)
class SteadyState:
    k: float  # distribution constant, degC
    t_bar_0: float  # steady-state mean temperature
    duty: float
    p_0: float  # average power, W
    zeta_min: float  # zeta(t_min), positive
    zeta_max: float  # zeta(t_max), negative


def steady_state_arrays(alpha, t_off, t_on, t_min, t_max, p_on):
    """Vectorised steady-state quantities; returns (k, t_bar_0, duty, p_0, zeta_min, zeta_max).

    Accepts scalars or equally shaped arrays.
    """
    log_on = np.log((t_max - t_on) / (t_min - t_on))
    log_off = np.log((t_off - t_min) / (t_off - t_max))
    k = (t_off - t_on) / (log_on + log_off)
    t_bar_0 = t_off - k * log_on
    duty = log_on / (log_on + log_off)
    zeta_min = (t_bar_0 - t_min) / (t_off - t_bar_0)
    zeta_max = (t_bar_0 - t_max) / (t_off - t_bar_0)
    return k, t_bar_0, duty, duty * p_on, zeta_min, zeta_max


@lru_cache(maxsize=1024)
def steady_state(model: ApplianceModel) -> SteadyState:
    """Steady-state distribution constant, mean temperature, duty cycle and zeta limits.

    The duty cycle is the on-fraction of the hysteresis limit cycle, i.e. the
    on-time ln((t_max-t_on)/(t_min-t_on))/alpha over the full period.
    """
    values = steady_state_arrays(model.alpha, model.t_off, model.t_on, model.t_min, model.t_max, model.p_on)
    return SteadyState(*(float(v) for v in values))


def zeta(steady: SteadyState, model: ApplianceModel, r):
    """Dimensionless offset of reference temperature ``r`` from the steady-state mean."""
    return (steady.t_bar_0 - r) / (model.t_off - steady.t_bar_0)


def propagate_temperature(model: ApplianceModel, temperature, compressor, dt):
    """Exact solution of the first-order model over ``dt`` seconds at fixed compressor state.

    Works elementwise on arrays as well as on scalars.
    """
    if np.any(np.asarray(dt) < 0):
        raise ValueError("dt must be non-negative")
    t_asym = np.where(compressor, model.t_on, model.t_off)
    out = temperature + (t_asym - temperature) * -np.expm1(-model.alpha * dt)
    return float(out) if np.ndim(out) == 0 else out


def sample_steady_state_temperature(model: ApplianceModel, compressor, u):
    """Inverse-CDF sample from f_0(T | c).

    For c=1 the density is proportional to 1/(T - t_on), for c=0 to 1/(t_off - T);
    both are supported on [t_min, t_max].
    """
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
        raise ValueError("u must lie in [0, 1]")
    on = model.t_on + (model.t_min - model.t_on) * ((model.t_max - model.t_on) / (model.t_min - model.t_on)) ** u
    off = model.t_off - (model.t_off - model.t_min) * ((model.t_off - model.t_max) / (model.t_off - model.t_min)) ** u
    out = np.where(compressor, on, off)
    # pin the end points exactly
    out = np.where(u == 0, model.t_min, np.where(u == 1, model.t_max, out))
    return float(out) if out.ndim == 0 else out


def drift_bound(model: ApplianceModel, dt):
    """delta(dt) = (t_off - t_min) * (1 - exp(-alpha dt)).

    Bounds the warming drift of any device starting inside [t_min, t_max]. It does
    not bound cooling: an on-device near t_min moves by up to
    (t_min - t_on) * (1 - exp(-alpha dt)), see :func:`overshoot_margins`.
    """
    return (model.t_off - model.t_min) * -np.expm1(-model.alpha * dt)


def overshoot_margins(model: ApplianceModel, dt):
    """One-step excursion limits (below t_min, above t_max) for a device that is
    inside its bounds at the previous controller invocation."""
    e = -np.expm1(-model.alpha * dt)
    return (model.t_min - model.t_on) * e, (model.t_off - model.t_max) * e
