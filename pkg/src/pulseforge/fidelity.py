"""Gate fidelity, the one-spin splitting error, and the GRAPE gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .linalg import DimensionError, counter
from .propagators import ControlPulse, PropagatorPlan, Unitary, propagate, sub_propagators


def _matrix(U) -> np.ndarray:
    return U.matrix if isinstance(U, Unitary) else np.asarray(U)


@dataclass(frozen=True)
class FidelityValue:
    """``phi = |tr(U^H V)|^2 / N^2`` together with the raw overlap."""

    phi: float
    raw_overlap: complex

    def __float__(self) -> float:
        return self.phi


def fidelity(U, V) -> FidelityValue:
    """Normalised squared Hilbert-Schmidt overlap; blind to global phase."""
    U, V = _matrix(U), _matrix(V)
    if U.shape != V.shape or U.ndim != 2:
        raise DimensionError(f"cannot compare shapes {U.shape} and {V.shape}")
    overlap = complex(np.vdot(U, V))
    return FidelityValue(abs(overlap) ** 2 / U.shape[0] ** 2, overlap)


def infidelity(U, V) -> float:
    """``1 - fidelity(U, V)`` for unitaries, accurate far below machine epsilon.

    Uses the eigenphases ``theta`` of ``U^H V``:
    ``1 - Phi = (4 / N^2) sum_{k<l} sin^2((theta_k - theta_l) / 2)``, which
    avoids the cancellation in ``1 - |tr|^2 / N^2``.
    """
    U, V = _matrix(U), _matrix(V)
    if U.shape != V.shape or U.ndim != 2:
        raise DimensionError(f"cannot compare shapes {U.shape} and {V.shape}")
    theta = np.angle(np.linalg.eigvals(U.conj().T @ V))
    diff = theta[:, None] - theta[None, :]
    n = U.shape[0]
    return float(2.0 * np.sum(np.sin(diff / 2.0) ** 2) / n ** 2)


def one_spin_infidelity_leading(omega0: float, alpha: float, dt: float) -> float:
    """Leading-order infidelity of one symmetric-split step for a single spin.

    ``omega0^2 alpha^2 (omega0^2 + 4 alpha^2) dt^6 / 2304`` with angular
    frequencies.
    """
    return omega0 ** 2 * alpha ** 2 * (omega0 ** 2 + 4.0 * alpha ** 2) * dt ** 6 / 2304.0


def _target_matrix(target, dim: int) -> np.ndarray:
    T = np.ascontiguousarray(_matrix(target), dtype=np.complex128)
    if T.shape != (dim, dim):
        raise DimensionError(f"target of shape {T.shape} does not match dimension {dim}")
    return T


def fidelity_and_gradient(pulse: ControlPulse, target, plan: PropagatorPlan, backend: str,
                          steps: np.ndarray | None = None):
    """Fidelity and its gradient w.r.t. every Cartesian amplitude.

    All ``n`` sub-propagators are computed once (or taken from ``steps``) and
    reused through forward products ``P_i`` and back-propagated targets
    ``lam_i = Q_i^H U``. The step derivative is taken as
    ``-i dt (H_k V_j + V_j H_k) / 2``, the trapezoidal estimate of the exact
    derivative integral, accurate to second order in ``dt``. Gradient shape
    is ``(n, p, 2)``.
    """
    T = _target_matrix(target, plan.dim)
    if steps is None:
        steps = sub_propagators(pulse, backend, plan)
    G, trace = _kernels.active.grape_overlaps(steps, T, plan.controls, counter.ops)
    n = plan.dim
    dtrace = -0.5j * pulse.dt * (G[1:] + G[:-1])
    grad = 2.0 * np.real(np.conj(trace) * dtrace) / n ** 2
    phi = abs(trace) ** 2 / n ** 2
    return float(phi), grad.reshape(pulse.n, pulse.p, 2)


def grape_gradient(pulse: ControlPulse, target, plan: PropagatorPlan, backend: str = "suzuki") -> np.ndarray:
    """``dPhi/da`` for every step and Cartesian control, shape ``(n, p, 2)``."""
    return fidelity_and_gradient(pulse, target, plan, backend)[1]


def finite_diff_gradient(pulse: ControlPulse, target, plan: PropagatorPlan, backend: str,
                         h: float) -> np.ndarray:
    """Central differences of the fidelity, one pair of propagations per amplitude."""
    if not h > 0:
        raise ValueError("h must be positive")
    T = _target_matrix(target, plan.dim)
    base = np.array(pulse.amplitudes)
    grad = np.empty_like(base)
    for index in np.ndindex(base.shape):
        vals = []
        for sign in (1.0, -1.0):
            amps = base.copy()
            amps[index] += sign * h
            V = propagate(pulse.with_amplitudes(amps), backend, plan)
            vals.append(fidelity(T, V).phi)
        grad[index] = (vals[0] - vals[1]) / (2.0 * h)
    return grad
