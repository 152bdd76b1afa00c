"""Discrete-time decentralised demand response with thermostatically controlled loads."""
from .controller import ControllerMemory, ControllerError, update_compressor_state, steady_memory
from .model import NOMINAL_MODEL, ApplianceModel, ConfigurationError, SteadyState, steady_state
from .population import (
    Fleet, FleetSpec, FleetState, SimulationTrace, StepPolicy, aggregate_metrics, generate_fleet,
    initialize_steady_state, simulate,
)
from .signals import ReferenceSignal, demo_signal, parse_signal, serialize_signal

__all__ = [
    "ApplianceModel", "ConfigurationError", "ControllerError", "ControllerMemory", "Fleet", "FleetSpec",
    "FleetState", "NOMINAL_MODEL", "ReferenceSignal", "SimulationTrace", "SteadyState", "StepPolicy",
    "aggregate_metrics", "demo_signal", "generate_fleet", "initialize_steady_state", "parse_signal",
    "serialize_signal", "simulate", "steady_memory", "steady_state", "update_compressor_state",
]
