"""Kernel backend selection.

The compiled (numba) kernels are used unless ``PULSEFORGE_DISABLE_NUMBA`` is
set to a truthy value, or numba cannot be imported, in which case the batched
numpy kernels take over. Both modules stay importable for side-by-side
benchmarks and consistency tests.
"""

import os

import numpy as np

from . import _numpy as numpy_impl

MATMUL = 0
EXPM = 1
SUBPROP = 2
PHASE = 3
NSLOTS = 4

_FLAG = os.environ.get("PULSEFORGE_DISABLE_NUMBA", "").strip().lower()

try:
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba_impl = None

if numba_impl is None or _FLAG in {"1", "true", "yes", "on"}:
    active = numpy_impl
    BACKEND = "numpy"
else:
    active = numba_impl
    BACKEND = "numba"


def new_counter():
    return np.zeros(NSLOTS, dtype=np.int64)
