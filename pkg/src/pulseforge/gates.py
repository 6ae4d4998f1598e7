"""Named target gates, tensor-embedded into a spin register (spin 0 leftmost)."""

from __future__ import annotations

from functools import reduce

import numpy as np

_I2 = np.eye(2, dtype=np.complex128)
_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def rotation(axis: str, angle: float) -> np.ndarray:
    """``exp(-i angle sigma_axis / 2)``."""
    return np.cos(angle / 2) * _I2 - 1j * np.sin(angle / 2) * _PAULI[axis]


def hadamard() -> np.ndarray:
    return np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)


def embed(q: int, ops: dict) -> np.ndarray:
    """Kronecker product with ``ops[r]`` on spin ``r`` and identity elsewhere."""
    return reduce(np.kron, [ops.get(r, _I2) for r in range(q)])


def controlled_phase(q: int, a: int, b: int, angle: float = np.pi) -> np.ndarray:
    """Phase ``exp(i angle)`` on the basis states where spins ``a`` and ``b`` are both down."""
    if a == b:
        raise ValueError("controlled phase needs two distinct spins")
    index = np.arange(2 ** q)
    both = ((index >> (q - 1 - a)) & 1) & ((index >> (q - 1 - b)) & 1)
    return np.diag(np.where(both == 1, np.exp(1j * angle), 1.0)).astype(np.complex128)


def named_gate(name: str, q: int, spins=(), angle: float | None = None) -> np.ndarray:
    """Build ``identity``, ``hadamard``, ``rx``/``ry``/``rz`` or ``cphase`` on ``spins``.

    Single-spin gates are applied to every listed spin. ``cphase`` takes exactly
    two spins and defaults to a phase of pi.
    """
    name = name.lower()
    spins = [int(s) for s in spins]
    for s in spins:
        if not 0 <= s < q:
            raise ValueError(f"spin {s} outside 0..{q - 1}")
    if name == "identity":
        return np.eye(2 ** q, dtype=np.complex128)
    if name == "hadamard":
        return embed(q, {s: hadamard() for s in spins})
    if name in ("rx", "ry", "rz"):
        if angle is None:
            raise ValueError(f"{name} needs an angle")
        return embed(q, {s: rotation(name[1], angle) for s in spins})
    if name == "cphase":
        if len(spins) != 2:
            raise ValueError("cphase needs exactly two spins")
        return controlled_phase(q, spins[0], spins[1], np.pi if angle is None else angle)
    raise ValueError(f"unknown gate {name!r}")
