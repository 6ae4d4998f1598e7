"""Spin-1/2 operators and background Hamiltonians.

Tensor order: spin 0 is the most significant qubit (leftmost Kronecker
factor), so basis index ``b`` has spin ``r`` down when bit ``q-1-r`` of ``b``
is set. Frequencies are angular (rad/s) everywhere inside the package;
:meth:`SpinSystem.from_hz` is the entry point for values quoted in Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

TWO_PI = 2.0 * np.pi

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class ControlChannel:
    """An RF channel addressing every spin of one species with x and y fields."""

    species: str


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """A register of ``q`` spin-1/2 nuclei.

    ``couplings`` maps 0-based spin pairs to angular coupling constants.
    Under ``coupling_model="strong"`` same-species pairs get the full scalar
    product ``I_r . I_s``; pairs of different species keep only the ``zz`` term
    because their flip-flop part is removed by the separate rotating frames.
    ``dipolar`` couplings (strong model only) add
    ``d * (I_z I_z - (I_x I_x + I_y I_y) / 2)`` per pair.
    """

    offsets: np.ndarray
    couplings: dict = field(default_factory=dict)
    species: tuple = ()
    coupling_model: str = "weak"
    dipolar: dict = field(default_factory=dict)
    labels: tuple = ()

    def __post_init__(self):
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=np.float64))
        q = offsets.size
        if q < 1:
            raise ValueError("a spin system needs at least one spin")
        if not np.all(np.isfinite(offsets)):
            raise ValueError("offsets must be finite")
        object.__setattr__(self, "offsets", offsets)
        species = tuple(self.species) or ("1H",) * q
        labels = tuple(self.labels) or tuple(f"S{r + 1}" for r in range(q))
        if len(species) != q or len(labels) != q:
            raise ValueError("species and labels must list one entry per spin")
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "labels", labels)
        if self.coupling_model not in ("weak", "strong"):
            raise ValueError(f"coupling_model must be 'weak' or 'strong', not {self.coupling_model!r}")
        object.__setattr__(self, "couplings", self._normalise_pairs(self.couplings, q))
        object.__setattr__(self, "dipolar", self._normalise_pairs(self.dipolar, q))
        if self.dipolar and self.coupling_model != "strong":
            raise ValueError("dipolar couplings require the strong coupling model")

    @staticmethod
    def _normalise_pairs(pairs: dict, q: int) -> dict:
        out = {}
        for (r, s), value in pairs.items():
            r, s = int(r), int(s)
            if r == s:
                raise ValueError(f"spin {r} cannot couple to itself")
            if not (0 <= r < q and 0 <= s < q):
                raise ValueError(f"coupling pair ({r}, {s}) outside 0..{q - 1}")
            key = (min(r, s), max(r, s))
            if key in out:
                raise ValueError(f"coupling pair {key} given twice")
            out[key] = float(value)
        return out

    @classmethod
    def from_hz(cls, offsets_hz, couplings_hz=None, dipolar_hz=None, **kwargs) -> "SpinSystem":
        """Build from frequencies in Hz (converted to rad/s)."""
        return cls(
            offsets=TWO_PI * np.asarray(offsets_hz, dtype=np.float64),
            couplings={k: TWO_PI * v for k, v in (couplings_hz or {}).items()},
            dipolar={k: TWO_PI * v for k, v in (dipolar_hz or {}).items()},
            **kwargs,
        )

    @property
    def q(self) -> int:
        return self.offsets.size

    @property
    def dim(self) -> int:
        return 2 ** self.q

    @property
    def channels(self) -> tuple:
        """One control channel per species, in order of first appearance."""
        return tuple(ControlChannel(s) for s in dict.fromkeys(self.species))

    def spins_of(self, species: str | None) -> list:
        if species is None:
            return list(range(self.q))
        chosen = [r for r, s in enumerate(self.species) if s == species]
        if not chosen:
            raise KeyError(f"unknown species {species!r}")
        return chosen


def single_spin_op(system: SpinSystem, r: int, axis: str) -> np.ndarray:
    """``sigma_axis / 2`` on spin ``r`` (0-based), identity on the rest."""
    if not 0 <= r < system.q:
        raise IndexError(f"spin index {r} outside 0..{system.q - 1}")
    factors = [np.eye(2, dtype=np.complex128)] * system.q
    factors[r] = 0.5 * _PAULI[axis]
    return reduce(np.kron, factors)


def total_spin_op(system: SpinSystem, axis: str, species: str | None = None) -> np.ndarray:
    """Sum of :func:`single_spin_op` over the spins of ``species`` (all if None)."""
    spins = system.spins_of(species)
    if axis == "z":
        return np.diag(fz_spectrum(system, species)).astype(np.complex128)
    return sum(single_spin_op(system, r, axis) for r in spins)


def fz_spectrum(system: SpinSystem, species: str | None = None) -> np.ndarray:
    """Diagonal of ``F^z`` restricted to ``species``; +1/2 per up spin, -1/2 per down."""
    q = system.q
    index = np.arange(system.dim)
    out = np.zeros(system.dim)
    for r in system.spins_of(species):
        out += 0.5 - ((index >> (q - 1 - r)) & 1)
    return out


def control_operators(system: SpinSystem) -> np.ndarray:
    """Stack ``[F^x_0, F^y_0, F^x_1, F^y_1, ...]`` over the system's channels."""
    ops = []
    for ch in system.channels:
        ops.append(total_spin_op(system, "x", ch.species))
        ops.append(total_spin_op(system, "y", ch.species))
    return np.array(ops)


def channel_fz(system: SpinSystem) -> np.ndarray:
    """``(p, N)`` array of per-channel ``F^z`` spectra."""
    return np.array([fz_spectrum(system, ch.species) for ch in system.channels])


def build_H0(system: SpinSystem) -> np.ndarray:
    """Background Hamiltonian: offsets plus couplings under the system's model."""
    H = np.diag(sum(system.offsets[r] * _iz_diag(system, r) for r in range(system.q)))
    H = H.astype(np.complex128)
    for (r, s), w in system.couplings.items():
        H += w * _zz(system, r, s)
        if system.coupling_model == "strong" and system.species[r] == system.species[s]:
            H += w * (_pair(system, r, s, "x") + _pair(system, r, s, "y"))
    for (r, s), d in system.dipolar.items():
        H += d * _zz(system, r, s)
        if system.species[r] == system.species[s]:
            H -= 0.5 * d * (_pair(system, r, s, "x") + _pair(system, r, s, "y"))
    return H


def _iz_diag(system, r):
    index = np.arange(system.dim)
    return 0.5 - ((index >> (system.q - 1 - r)) & 1)


def _zz(system, r, s):
    return np.diag(_iz_diag(system, r) * _iz_diag(system, s)).astype(np.complex128)


def _pair(system, r, s, axis):
    return single_spin_op(system, r, axis) @ single_spin_op(system, s, axis)


def hadamard_basis(q: int) -> np.ndarray:
    """The ``q``-qubit Hadamard ``H^{(q)}``; real, symmetric and self-inverse."""
    if q < 1:
        raise ValueError("q must be at least 1")
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    return reduce(np.kron, [h] * q).astype(np.complex128)
