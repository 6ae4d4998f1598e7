"""GRAPE pulse design for coupled spin-1/2 systems with fast split propagators."""

from .fidelity import fidelity, grape_gradient, infidelity
from .linalg import count_ops, counter
from .optimize import OptimizerConfig, optimize, random_initial_pulse
from .propagators import (ControlPulse, Unitary, band_offsets, build_plan, propagate,
                          robustness_ensemble, sub_propagators, total_propagator)
from .spins import SpinSystem

__version__ = "0.1.0"

__all__ = [
    "ControlPulse", "OptimizerConfig", "SpinSystem", "Unitary", "band_offsets", "build_plan",
    "count_ops", "counter", "fidelity", "grape_gradient", "infidelity", "optimize", "propagate",
    "random_initial_pulse", "robustness_ensemble", "sub_propagators", "total_propagator",
]
