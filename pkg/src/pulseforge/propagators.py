"""Sub-propagators and total propagators for piecewise-constant control pulses.

Three backends share one interface:

``exact``
    ``exp(-i (H0 + sum_k x_k F^x_k + y_k F^y_k) dt)`` by a full matrix
    exponential per step.
``trotter``
    ``exp(-i phi F^z) exp(-i H0' dt) H exp(-i alpha' F^z dt) H exp(i phi F^z)``,
    the unsymmetrised split. Kept for error-order comparisons only.
``suzuki``
    ``exp(-i phi F^z) W1 exp(-i alpha' F^z dt) W2 exp(i phi F^z)`` with
    ``W1 = exp(-i H0' dt/2) H`` and ``W2 = H exp(-i H0' dt/2)``; every explicit
    exponential is diagonal and each step costs one general product.

Here ``H0' = H0 + sum_k Omega_k F^x_k`` absorbs an offset per channel and
``alpha' = alpha - Omega``. A :class:`PropagatorPlan` holds ``W1``/``W2`` for
every offset combination; building it is the only place the approximate
pipeline calls :func:`~pulseforge.linalg.expm`.
"""

from __future__ import annotations

import itertools
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .linalg import DimensionError, counter, diag_exp, expm, sandwich_product, unitarity_residual
from .spins import SpinSystem, build_H0, channel_fz, control_operators, hadamard_basis

BACKENDS = ("exact", "trotter", "suzuki")

# Offset-independent operators per system; systems are immutable, so a plan
# rebuild (mean-offset policy) only pays for the exponentials.
_OPERATORS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _system_operators(system: SpinSystem) -> tuple:
    ops = _OPERATORS.get(system)
    if ops is None:
        ops = (build_H0(system), control_operators(system), channel_fz(system),
               hadamard_basis(system.q))
        for a in ops:
            a.setflags(write=False)
        _OPERATORS[system] = ops
    return ops


@dataclass(frozen=True, eq=False)
class ControlPulse:
    """``n`` steps of Cartesian amplitudes ``(x, y)`` in rad/s on ``p`` channels.

    ``amplitudes`` has shape ``(n, p, 2)``.
    """

    amplitudes: np.ndarray
    dt: float

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.float64)
        if amps.ndim == 2 and amps.shape[1] == 2:
            amps = amps[:, None, :]
        if amps.ndim != 3 or amps.shape[2] != 2:
            raise ValueError(f"amplitudes must have shape (n, p, 2), got {amps.shape}")
        if amps.shape[0] < 1:
            raise ValueError("a pulse needs n >= 1 steps")
        if amps.shape[1] < 1:
            raise ValueError("a pulse needs at least one channel")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def from_polar(cls, alpha, phi, dt: float) -> "ControlPulse":
        alpha = np.asarray(alpha, dtype=np.float64)
        phi = np.asarray(phi, dtype=np.float64)
        if alpha.ndim == 1:
            alpha, phi = alpha[:, None], phi[:, None]
        return cls(np.stack([alpha * np.cos(phi), alpha * np.sin(phi)], axis=-1), dt)

    @classmethod
    def zeros(cls, n: int, p: int, dt: float) -> "ControlPulse":
        return cls(np.zeros((n, p, 2)), dt)

    @property
    def n(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def p(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.amplitudes[..., 0]

    @property
    def y(self) -> np.ndarray:
        return self.amplitudes[..., 1]

    @property
    def alpha(self) -> np.ndarray:
        return np.hypot(self.x, self.y)

    @property
    def phase(self) -> np.ndarray:
        """Phase ``atan2(y, x)``, pinned to 0 where the amplitude vanishes."""
        alpha = self.alpha
        return np.where(alpha > 0, np.arctan2(self.y, self.x), 0.0)

    def scaled(self, factor: float) -> "ControlPulse":
        return ControlPulse(self.amplitudes * factor, self.dt)

    def with_amplitudes(self, amplitudes) -> "ControlPulse":
        return ControlPulse(amplitudes, self.dt)


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray
    unitarity_residual: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "unitarity_residual", unitarity_residual(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(eq=False)
class PropagatorPlan:
    """Precomputed basis matrices for every offset combination.

    ``offsets[k]`` is the ascending offset list of channel ``k``;
    ``combos[i]`` the per-channel offsets used by basis pair ``W1[i]``, ``W2[i]``.
    """

    system: SpinSystem
    dt: float
    offsets: tuple
    combos: np.ndarray
    H0: np.ndarray
    controls: np.ndarray
    fz: np.ndarray
    hadamard: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    expm_calls: int

    @property
    def dim(self) -> int:
        return self.H0.shape[0]

    @property
    def p(self) -> int:
        return len(self.offsets)

    def shifted_H0(self, i: int) -> np.ndarray:
        return self.H0 + np.tensordot(self.combos[i], self.controls[0::2], axes=(0, 0))


def _offset_lists(offsets, p: int) -> tuple:
    if offsets is None:
        offsets = [[0.0]] * p
    offsets = list(offsets)
    if offsets and np.ndim(offsets[0]) == 0:
        if p != 1:
            raise ValueError("give one offset list per channel for multi-channel systems")
        offsets = [offsets]
    if len(offsets) != p:
        raise ValueError(f"expected {p} offset lists, got {len(offsets)}")
    out = []
    for lst in offsets:
        arr = np.sort(np.asarray(lst, dtype=np.float64).ravel())
        if arr.size < 1:
            raise ValueError("every channel needs at least one offset")
        if not np.all(np.isfinite(arr)):
            raise ValueError("offsets must be finite")
        out.append(arr)
    return tuple(out)


def build_plan(system: SpinSystem, dt: float, offsets=None) -> PropagatorPlan:
    """Precompute ``W1``/``W2`` (and the Trotter bases) for each offset combination.

    ``offsets`` is a list of per-channel offset lists in rad/s, or a flat list
    for single-channel systems; the default is a single zero offset.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    p = len(system.channels)
    lists = _offset_lists(offsets, p)
    combos = np.array(list(itertools.product(*lists)), dtype=np.float64).reshape(-1, p)
    H0, controls, fz, had = _system_operators(system)
    fx = controls[0::2]
    W1, W2, T1 = [], [], []
    start = counter.expm
    for omega in combos:
        shifted = H0 + np.tensordot(omega, fx, axes=(0, 0))
        half = expm(-0.5j * dt * shifted)
        W1.append(half @ had)
        W2.append(had @ half)
        T1.append(half @ half @ had)
    expm_calls = counter.expm - start
    n = system.dim
    return PropagatorPlan(
        system=system, dt=float(dt), offsets=lists, combos=combos, H0=H0,
        controls=controls, fz=fz, hadamard=had,
        W1=np.ascontiguousarray(W1), W2=np.ascontiguousarray(W2),
        T1=np.ascontiguousarray(T1),
        T2=np.ascontiguousarray(np.broadcast_to(had, (len(combos), n, n))),
        expm_calls=expm_calls,
    )


def band_offsets(alpha_max: float, count: int) -> np.ndarray:
    """Centres of ``count`` equal-width amplitude bands on ``[0, alpha_max]``.

    Two bands give ``alpha_max / 4`` and ``3 alpha_max / 4``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    return (2 * np.arange(count) + 1) / (2 * count) * alpha_max


def select_offset(alpha: float, plan: PropagatorPlan, channel: int = 0) -> int:
    """Index into ``plan.offsets[channel]`` of the offset nearest ``alpha``.

    Ties go to the smaller offset.
    """
    return int(np.argmin(np.abs(alpha - plan.offsets[channel])))


def _combo_indices(alpha: np.ndarray, plan: PropagatorPlan) -> np.ndarray:
    """Flattened offset-combination index per step for ``alpha`` of shape (n, p)."""
    per_channel = [np.argmin(np.abs(alpha[:, k, None] - plan.offsets[k][None, :]), axis=1)
                   for k in range(plan.p)]
    sizes = [len(o) for o in plan.offsets]
    return np.ravel_multi_index(per_channel, sizes).astype(np.int64)


def _check(pulse: ControlPulse, plan: PropagatorPlan):
    if pulse.p != plan.p:
        raise DimensionError(f"pulse has {pulse.p} channels, system has {plan.p}")
    if not np.isclose(pulse.dt, plan.dt, rtol=1e-12, atol=0.0):
        raise ValueError(f"pulse dt {pulse.dt} does not match plan dt {plan.dt}")


def _split_inputs(pulse: ControlPulse, plan: PropagatorPlan, scale: float = 1.0, idx=None):
    alpha = pulse.alpha * scale
    if idx is None:
        idx = _combo_indices(alpha, plan)
    alpha_shift = np.ascontiguousarray(alpha - plan.combos[idx])
    return np.ascontiguousarray(pulse.phase), alpha_shift, idx


def _bases(plan: PropagatorPlan, backend: str):
    if backend == "suzuki":
        return plan.W1, plan.W2
    if backend == "trotter":
        return plan.T1, plan.T2
    raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def _exact_amps(pulse: ControlPulse) -> np.ndarray:
    # column order matches control_operators: x0, y0, x1, y1, ...
    return np.ascontiguousarray(pulse.amplitudes.reshape(pulse.n, -1))


def _step_index(pulse: ControlPulse, j: int) -> int:
    if not 0 <= j < pulse.n:
        raise IndexError(f"step {j} outside 0..{pulse.n - 1}")
    return j


def exact_step(system: SpinSystem, pulse: ControlPulse, j: int, H0: np.ndarray | None = None) -> Unitary:
    """``V_j`` from a full matrix exponential of the summed Hamiltonian."""
    j = _step_index(pulse, j)
    ops = _system_operators(system)
    if H0 is None:
        H0 = ops[0]
    controls = ops[1]
    H = H0 + np.tensordot(_exact_amps(pulse)[j], controls, axes=(0, 0))
    V = expm(-1j * pulse.dt * H)
    counter.ops[_kernels.SUBPROP] += 1
    return Unitary(V)


def _split_step(plan, pulse, j, backend, offset_index=None) -> Unitary:
    _check(pulse, plan)
    j = _step_index(pulse, j)
    phi = pulse.phase[j]
    alpha = pulse.alpha[j]
    if offset_index is None:
        offset_index = int(_combo_indices(alpha[None, :], plan)[0])
    if not 0 <= offset_index < len(plan.combos):
        raise IndexError(f"offset index {offset_index} outside plan")
    B1, B2 = _bases(plan, backend)
    ph = diag_exp(phi @ plan.fz, -1j)
    ad = diag_exp((alpha - plan.combos[offset_index]) @ plan.fz, -1j * plan.dt)
    V = sandwich_product(ph, B1[offset_index], ad, B2[offset_index])
    counter.ops[_kernels.SUBPROP] += 1
    return Unitary(V)


def trotter_step(plan: PropagatorPlan, pulse: ControlPulse, j: int, offset_index: int | None = None) -> Unitary:
    """Unsymmetrised split step; second-order accurate in ``dt``."""
    return _split_step(plan, pulse, j, "trotter", offset_index)


def suzuki_step(plan: PropagatorPlan, pulse: ControlPulse, j: int, offset_index: int | None = None) -> Unitary:
    """Symmetric split step built from diagonal exponentials; no ``expm`` call."""
    return _split_step(plan, pulse, j, "suzuki", offset_index)


def sub_propagators(pulse: ControlPulse, backend: str, plan: PropagatorPlan,
                    out: np.ndarray | None = None) -> np.ndarray:
    """All ``n`` sub-propagators as an ``(n, N, N)`` array."""
    _check(pulse, plan)
    n = plan.dim
    if out is None:
        out = np.empty((pulse.n, n, n), dtype=np.complex128)
    if backend == "exact":
        _kernels.active.exact_steps(plan.H0, plan.controls, _exact_amps(pulse), plan.dt, out,
                                    counter.ops)
        return out
    B1, B2 = _bases(plan, backend)
    phi, alpha, idx = _split_inputs(pulse, plan)
    _kernels.active.suzuki_steps(phi, alpha, idx, plan.fz, B1, B2, plan.dt, out, counter.ops)
    return out


def propagate(pulse: ControlPulse, backend: str, plan: PropagatorPlan,
              out: np.ndarray | None = None) -> np.ndarray:
    """Total propagator ``V_n ... V_1`` as a bare array, streaming over steps."""
    _check(pulse, plan)
    if out is None:
        out = np.empty((plan.dim, plan.dim), dtype=np.complex128)
    if backend == "exact":
        _kernels.active.exact_total(plan.H0, plan.controls, _exact_amps(pulse), plan.dt, out,
                                    counter.ops)
        return out
    B1, B2 = _bases(plan, backend)
    phi, alpha, idx = _split_inputs(pulse, plan)
    _kernels.active.suzuki_total(phi, alpha, idx, plan.fz, B1, B2, plan.dt, out, counter.ops)
    return out


def total_propagator(pulse: ControlPulse, backend: str, plan: PropagatorPlan) -> Unitary:
    """Total propagator with step 1 applied first."""
    return Unitary(propagate(pulse, backend, plan))


def mean_offset_plan(pulse: ControlPulse, system: SpinSystem, dt: float | None = None) -> PropagatorPlan:
    """Single-offset plan centred on the mean amplitude of each channel."""
    dt = pulse.dt if dt is None else dt
    return build_plan(system, dt, [[m] for m in pulse.alpha.mean(axis=0)])


def _ensemble_chunk(pulse, plan, scalings):
    phi = np.ascontiguousarray(pulse.phase)
    alpha = np.empty((len(scalings), pulse.n, pulse.p))
    idx = np.empty((len(scalings), pulse.n), dtype=np.int64)
    for s, factor in enumerate(scalings):
        _, alpha[s], idx[s] = _split_inputs(pulse, plan, factor)
    acc = np.empty((len(scalings), plan.dim, plan.dim), dtype=np.complex128)
    _kernels.active.ensemble_total(phi, alpha, idx, plan.fz, plan.W1, plan.W2, plan.dt, acc,
                                   counter.ops)
    return list(acc)


def ensemble_sub_propagators(pulse: ControlPulse, plan: PropagatorPlan, scalings) -> np.ndarray:
    """Suzuki sub-propagators for each RF scaling, shape ``(members, n, N, N)``.

    The phase pattern of every step is formed once for all members.
    """
    _check(pulse, plan)
    scalings = [float(s) for s in scalings]
    if not scalings or min(scalings) <= 0:
        raise ValueError("scalings must be a non-empty list of positive factors")
    phi = np.ascontiguousarray(pulse.phase)
    alpha = np.empty((len(scalings), pulse.n, pulse.p))
    idx = np.empty((len(scalings), pulse.n), dtype=np.int64)
    for s, factor in enumerate(scalings):
        _, alpha[s], idx[s] = _split_inputs(pulse, plan, factor)
    out = np.empty((len(scalings), pulse.n, plan.dim, plan.dim), dtype=np.complex128)
    _kernels.active.ensemble_steps(phi, alpha, idx, plan.fz, plan.W1, plan.W2, plan.dt, out,
                                   counter.ops)
    return out


def robustness_ensemble(pulse: ControlPulse, plan: PropagatorPlan, scalings, jobs: int = 1) -> list:
    """Suzuki total propagators with every amplitude scaled by each factor.

    Phases do not depend on the RF scaling, so each step's phase pattern is
    formed once and shared by all members handled by the same worker. With
    ``jobs > 1`` the scalings are split across threads.
    """
    _check(pulse, plan)
    scalings = [float(s) for s in scalings]
    if not scalings or min(scalings) <= 0:
        raise ValueError("scalings must be a non-empty list of positive factors")
    jobs = max(1, min(int(jobs), len(scalings)))
    if jobs == 1:
        mats = _ensemble_chunk(pulse, plan, scalings)
    else:
        chunks = [scalings[i::jobs] for i in range(jobs)]
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(lambda c: _ensemble_chunk(pulse, plan, c), chunks))
        mats = [None] * len(scalings)
        for i, part in enumerate(parts):
            mats[i::jobs] = part
    return [Unitary(m) for m in mats]


def phase_transform(system: SpinSystem, phi) -> np.ndarray:
    """Diagonal of ``exp(-i sum_k phi_k F^z_k)``."""
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    return diag_exp(phi @ channel_fz(system), -1j)


def rotate_frame(system: SpinSystem, M: np.ndarray, phi) -> np.ndarray:
    """``exp(-i phi F^z) M exp(i phi F^z)``."""
    ph = phase_transform(system, phi)
    return ph[:, None] * M * ph.conj()[None, :]


__all__ = [
    "BACKENDS", "ControlPulse", "Unitary", "PropagatorPlan", "build_plan", "band_offsets",
    "select_offset", "exact_step", "trotter_step", "suzuki_step", "sub_propagators",
    "propagate", "total_propagator", "mean_offset_plan", "robustness_ensemble",
    "ensemble_sub_propagators",
    "phase_transform", "rotate_frame",
]
