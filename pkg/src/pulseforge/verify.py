"""Self-checks of the split propagators against full matrix exponentials."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .fidelity import infidelity, one_spin_infidelity_leading
from .linalg import expm
from .propagators import (ControlPulse, build_plan, exact_step, propagate, rotate_frame,
                          suzuki_step, trotter_step)
from .spins import TWO_PI, SpinSystem, build_H0, control_operators


@dataclass
class Check:
    name: str
    value: float
    low: float
    high: float

    @property
    def passed(self) -> bool:
        return bool(self.low <= self.value <= self.high)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.6g} (allowed [{self.low:.6g}, {self.high:.6g}])"


def one_spin_step_infidelity(omega0: float, alpha: float, dt: float, backend: str = "suzuki",
                             phi: float = 0.3) -> float:
    system = SpinSystem(offsets=[omega0])
    plan = build_plan(system, dt)
    pulse = ControlPulse.from_polar([alpha], [phi], dt)
    split = suzuki_step if backend == "suzuki" else trotter_step
    return infidelity(exact_step(system, pulse, 0), split(plan, pulse, 0))


def order_slope(backend: str, omega0: float, alpha: float, dts) -> float:
    """Log-log slope of single-step infidelity against the step length."""
    dts = np.asarray(dts, dtype=float)
    vals = [one_spin_step_infidelity(omega0, alpha, dt, backend) for dt in dts]
    return float(np.polyfit(np.log(dts), np.log(vals), 1)[0])


def leading_order_ratio(omega0: float, alpha: float, dt: float) -> float:
    """Measured one-step infidelity over the analytic leading term."""
    return (one_spin_step_infidelity(omega0, alpha, dt)
            / one_spin_infidelity_leading(omega0, alpha, dt))


def phase_transform_residual(system: SpinSystem, dt: float, alpha, phi) -> float:
    """Max-norm gap between a full step and its phase-rotated x-aligned form."""
    alpha = np.atleast_1d(alpha).astype(float)
    phi = np.atleast_1d(phi).astype(float)
    pulse = ControlPulse.from_polar(alpha[None, :], phi[None, :], dt)
    H = build_H0(system) + np.tensordot(alpha, control_operators(system)[0::2], axes=(0, 0))
    aligned = rotate_frame(system, expm(-1j * dt * H), phi)
    return float(np.max(np.abs(exact_step(system, pulse, 0).matrix - aligned)))


def worst_case_growth(omega0: float, alpha: float, dt: float, n: int, phi: float = 0.4) -> float:
    """infidelity(2n) / infidelity(n) for a pulse of identical steps."""
    plan = build_plan(SpinSystem(offsets=[omega0]), dt)

    def total_infidelity(m):
        pulse = ControlPulse.from_polar(np.full(m, alpha), np.full(m, phi), dt)
        return infidelity(propagate(pulse, "exact", plan), propagate(pulse, "suzuki", plan))

    return total_infidelity(2 * n) / total_infidelity(n)


def run_checks(system: SpinSystem | None = None, tolerance_scale: float = 1.0,
               dt_min: float = 1e-6, dt_max: float = 32e-6, points: int = 6) -> list:
    s = tolerance_scale
    dts = np.geomspace(dt_min, dt_max, points)
    w0, a = TWO_PI * 5e3, TWO_PI * 2e3
    checks = [
        Check("suzuki order slope", order_slope("suzuki", w0, a, dts), 6.0 - 0.3 * s, 6.0 + 0.3 * s),
        Check("trotter order slope", order_slope("trotter", w0, a, dts), 4.0 - 0.3 * s, 4.0 + 0.3 * s),
        Check("one-spin error at 15 kHz / 5 kHz / 10 us",
              one_spin_step_infidelity(TWO_PI * 15e3, TWO_PI * 5e3, 1e-5), 0.0, 5e-5 * s),
        Check("measured / leading-order infidelity at 1 us",
              leading_order_ratio(TWO_PI * 10e3, TWO_PI * 4e3, 1e-6), 1.0 - 0.05 * s, 1.0 + 0.05 * s),
        Check("worst-case growth infidelity(2n)/infidelity(n)",
              worst_case_growth(TWO_PI * 2e3, TWO_PI * 1e3, 1e-6, 8), 4.0 - 0.5 * s, 4.0 + 0.5 * s),
    ]
    if system is None:
        system = SpinSystem.from_hz([1200.0, -700.0], {(0, 1): 150.0})
    rng = np.random.default_rng(7)
    p = len(system.channels)
    alpha = rng.uniform(0, TWO_PI * 5e3, p)
    phi = rng.uniform(0, TWO_PI, p)
    for model in ("weak", "strong"):
        variant = dataclasses.replace(system, coupling_model=model, dipolar={})
        checks.append(Check(f"phase-transform identity ({model} coupling)",
                            phase_transform_residual(variant, 1e-5, alpha, phi), 0.0, 1e-12 * s))
    return checks
