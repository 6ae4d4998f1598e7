"""Random spin systems and pulses used by the benchmark and verification suites."""

from __future__ import annotations

import numpy as np

from .propagators import ControlPulse
from .spins import TWO_PI, SpinSystem

# Illustrative three-carbon chain in the style of 13C-labelled alanine: offsets
# and couplings are representative values chosen for this package, not measured data.
ALANINE_STYLE_HZ = {
    "offsets": [1800.0, -400.0, -1500.0],
    "couplings": {(0, 1): 54.0, (1, 2): 35.0, (0, 2): -1.2},
    "labels": ("C1", "C2", "C3"),
}


def alanine_style_system() -> SpinSystem:
    return SpinSystem.from_hz(ALANINE_STYLE_HZ["offsets"], ALANINE_STYLE_HZ["couplings"],
                              species=("13C",) * 3, labels=ALANINE_STYLE_HZ["labels"])


def random_spin_system(q: int, rng: np.random.Generator, max_offset_hz: float = 2000.0,
                       max_coupling_hz: float = 200.0, coupling_model: str = "weak") -> SpinSystem:
    """Homonuclear system with uniform offsets and all-pairs couplings within the bounds."""
    offsets = rng.uniform(-max_offset_hz, max_offset_hz, q)
    couplings = {(r, s): rng.uniform(-max_coupling_hz, max_coupling_hz)
                 for r in range(q) for s in range(r + 1, q)}
    return SpinSystem.from_hz(offsets, couplings, coupling_model=coupling_model)


def smooth_random_pulse(n: int, p: int, alpha_max: float, dt: float, rng: np.random.Generator,
                        harmonics: int = 32) -> ControlPulse:
    """Band-limited random pulse whose peak amplitude equals ``alpha_max``.

    Each Cartesian component is a sum of ``harmonics`` cosines over the pulse
    length with weights ``N(0, 1) / sqrt(k)`` and random phases.
    """
    t = np.arange(n) / n
    k = np.arange(1, harmonics + 1)
    amps = np.empty((n, p, 2))
    for ch in range(p):
        for c in range(2):
            w = rng.normal(size=harmonics) / np.sqrt(k)
            ph = rng.uniform(0.0, TWO_PI, harmonics)
            amps[:, ch, c] = (w * np.cos(TWO_PI * np.outer(t, k) + ph)).sum(axis=1)
        peak = np.hypot(amps[:, ch, 0], amps[:, ch, 1]).max()
        amps[:, ch] *= alpha_max / peak
    return ControlPulse(amps, dt)
