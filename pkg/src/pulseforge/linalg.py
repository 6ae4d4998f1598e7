"""Dense complex linear algebra with diagonal-aware fast paths.

Diagonal matrices are carried as 1-D vectors and never materialised. All
general (O(N^3)) matrix products in the propagator pipeline are tallied on a
process-wide :class:`OpCounter`; matrix exponentials are tallied separately and
their internal products are not counted as general multiplies.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import EXPM, MATMUL, PHASE, SUBPROP

UNIT_MODULUS_TOL = 1e-10


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NumericError(ValueError):
    """Non-finite input where finite values are required."""


class PreconditionError(ValueError):
    """Input violates a documented precondition."""


class OpCounter:
    """Tally of kernel-level operations.

    Slots: general matrix multiplies, matrix exponentials, sub-propagators
    built, and rank-1 phase patterns formed.
    """

    def __init__(self):
        self.ops = _kernels.new_counter()

    @property
    def matmul(self) -> int:
        return int(self.ops[MATMUL])

    @property
    def expm(self) -> int:
        return int(self.ops[EXPM])

    @property
    def subprop(self) -> int:
        return int(self.ops[SUBPROP])

    @property
    def phase(self) -> int:
        return int(self.ops[PHASE])

    def reset(self):
        self.ops[:] = 0

    def snapshot(self) -> "OpCounts":
        return OpCounts(self.matmul, self.expm, self.subprop, self.phase)


@dataclass(frozen=True)
class OpCounts:
    matmul: int = 0
    expm: int = 0
    subprop: int = 0
    phase: int = 0

    def __sub__(self, other: "OpCounts") -> "OpCounts":
        return OpCounts(self.matmul - other.matmul, self.expm - other.expm,
                        self.subprop - other.subprop, self.phase - other.phase)


counter = OpCounter()


class _Delta:
    counts = OpCounts()


@contextmanager
def count_ops():
    """Measure the operations performed inside a ``with`` block.

    >>> with count_ops() as tally:
    ...     _ = expm(np.zeros((2, 2), complex))
    >>> tally.counts.expm
    1
    """
    delta = _Delta()
    start = counter.snapshot()
    try:
        yield delta
    finally:
        delta.counts = counter.snapshot() - start


def _square(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    return M


def expm(M: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with Pade approximants.

    The degree (3, 5, 7, 9 or 13) and the number of squarings follow from the
    1-norm of ``M``. The caller supplies the full exponent, e.g. ``-1j * H * dt``.
    """
    M = _square(M)
    if not np.all(np.isfinite(M)):
        raise NumericError("expm input contains non-finite entries")
    A = np.ascontiguousarray(M, dtype=np.complex128)
    return _kernels.active.expm(A, counter.ops)


def diag_exp(d, scale: complex) -> np.ndarray:
    """Element-wise ``exp(scale * d)``; the diagonal of ``expm(scale * diag(d))``."""
    d = np.asarray(d, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise NumericError("diag_exp input contains non-finite entries")
    return np.exp(complex(scale) * d)


def diag_mul(d, M: np.ndarray, side: str = "left", out: np.ndarray | None = None) -> np.ndarray:
    """Product of a diagonal (stored as a vector) with a dense matrix in O(N^2).

    ``side="left"`` scales rows (``diag(d) @ M``), ``side="right"`` scales
    columns (``M @ diag(d)``).
    """
    M = _square(M)
    d = np.asarray(d)
    if d.shape != (M.shape[0],):
        raise DimensionError(f"diagonal of length {d.shape} does not match {M.shape}")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    d = np.ascontiguousarray(d, dtype=np.complex128)
    M = np.ascontiguousarray(M, dtype=np.complex128)
    if out is None:
        out = np.empty_like(M)
    _kernels.active.diag_mul(d, M, side == "left", out)
    return out


def sandwich_product(phase, W1: np.ndarray, alpha_diag, W2: np.ndarray,
                     out: np.ndarray | None = None,
                     scratch: np.ndarray | None = None) -> np.ndarray:
    """``diag(phase) @ W1 @ diag(alpha_diag) @ W2 @ diag(conj(phase))``.

    Evaluated as a row scaling of ``W2``, one general product with ``W1`` and an
    element-wise multiply by the rank-1 pattern ``phase[r] * conj(phase[c])``.
    ``out`` and ``scratch`` may be reused across calls to avoid allocation.
    """
    W1 = _square(W1, "W1")
    W2 = _square(W2, "W2")
    n = W1.shape[0]
    phase = np.ascontiguousarray(phase, dtype=np.complex128)
    alpha_diag = np.ascontiguousarray(alpha_diag, dtype=np.complex128)
    if W2.shape != W1.shape or phase.shape != (n,) or alpha_diag.shape != (n,):
        raise DimensionError("sandwich_product operands have mismatched dimensions")
    if np.max(np.abs(np.abs(phase) - 1.0)) > UNIT_MODULUS_TOL:
        raise PreconditionError("phase entries must have unit modulus")
    if out is None:
        out = np.empty((n, n), dtype=np.complex128)
    if scratch is None:
        scratch = np.empty((n, n), dtype=np.complex128)
    _kernels.active.sandwich(phase, np.ascontiguousarray(W1, dtype=np.complex128), alpha_diag,
                             np.ascontiguousarray(W2, dtype=np.complex128), out, scratch,
                             counter.ops)
    return out


def unitarity_residual(V: np.ndarray) -> float:
    """Max-norm of ``V^H V - I``."""
    V = _square(V)
    return float(np.max(np.abs(V.conj().T @ V - np.eye(V.shape[0]))))


__all__ = [
    "DimensionError", "NumericError", "PreconditionError", "OpCounter", "OpCounts",
    "counter", "count_ops", "expm", "diag_exp", "diag_mul", "sandwich_product",
    "unitarity_residual", "SUBPROP", "PHASE",
]
