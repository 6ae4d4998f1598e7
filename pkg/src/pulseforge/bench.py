"""Wall-clock comparison of exact and split propagators.

Per-step sub-propagator times exclude plan construction; full-propagator times
include building a mean-offset plan, amortised over the pulse.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ensembles import alanine_style_system, random_spin_system, smooth_random_pulse
from .propagators import _exact_amps, _split_inputs, build_plan, mean_offset_plan
from .spins import TWO_PI


@dataclass
class BenchRow:
    q: int
    sub_exact: float
    sub_suzuki: float
    full_exact: float
    full_suzuki: float

    @property
    def ratio_sub(self) -> float:
        return self.sub_exact / self.sub_suzuki

    @property
    def ratio_full(self) -> float:
        return self.full_exact / self.full_suzuki


def median_time(fn, repetitions: int, min_time: float = 0.02) -> float:
    """Median wall time of one ``fn()`` call over ``repetitions`` timed blocks.

    After one warm-up call the inner loop count is chosen so that each block
    lasts at least ``min_time`` seconds, which evens out scheduler noise on
    millisecond-scale calls.
    """
    t0 = time.perf_counter()
    fn()
    single = max(time.perf_counter() - t0, 1e-9)
    loops = max(1, int(np.ceil(min_time / single)))
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        for _ in range(loops):
            fn()
        times.append((time.perf_counter() - t0) / loops)
    return statistics.median(times)


def bench_system(q: int, seed: int = 0):
    return alanine_style_system() if q == 3 else random_spin_system(q, np.random.default_rng(seed + q))


def bench_q(q: int, n: int = 500, repetitions: int = 5, dt: float = 1e-5, seed: int = 0,
            kernels=None) -> BenchRow:
    if repetitions < 5:
        raise ValueError("repetitions must be >= 5")
    k = kernels or _kernels.active
    system = bench_system(q, seed)
    pulse = smooth_random_pulse(n, len(system.channels), TWO_PI * 5e3, dt, np.random.default_rng(seed))
    plan = mean_offset_plan(pulse, system)
    N = system.dim
    ops = _kernels.new_counter()
    steps = np.empty((n, N, N), dtype=np.complex128)
    acc = np.empty((N, N), dtype=np.complex128)
    amps = _exact_amps(pulse)
    phi, alpha, idx = _split_inputs(pulse, plan)

    def sub_exact():
        k.exact_steps(plan.H0, plan.controls, amps, dt, steps, ops)

    def sub_suzuki():
        k.suzuki_steps(phi, alpha, idx, plan.fz, plan.W1, plan.W2, dt, steps, ops)

    def full_exact():
        k.exact_total(plan.H0, plan.controls, amps, dt, acc, ops)

    def full_suzuki():
        fresh = build_plan(system, dt, plan.offsets)
        a, i = _split_inputs(pulse, fresh)[1:]
        k.suzuki_total(phi, a, i, fresh.fz, fresh.W1, fresh.W2, dt, acc, ops)

    per = lambda fn: median_time(fn, repetitions) / n  # noqa: E731
    return BenchRow(q, per(sub_exact), per(sub_suzuki), per(full_exact), per(full_suzuki))


def run_bench(qs=(2, 3, 4, 5), n: int = 500, repetitions: int = 5, seed: int = 0, kernels=None) -> list:
    return [bench_q(q, n, repetitions, seed=seed, kernels=kernels) for q in qs]


def format_table(rows: list) -> str:
    us = 1e6
    lines = [f"{'q':>2} {'sub_exact_us':>13} {'sub_suzuki_us':>14} {'ratio_sub':>10} "
             f"{'full_exact_us':>14} {'full_suzuki_us':>15} {'ratio_full':>11}"]
    for r in rows:
        lines.append(f"{r.q:>2} {r.sub_exact * us:>13.3f} {r.sub_suzuki * us:>14.3f} {r.ratio_sub:>10.2f} "
                     f"{r.full_exact * us:>14.3f} {r.full_suzuki * us:>15.3f} {r.ratio_full:>11.2f}")
    by_q = {r.q: r for r in rows}
    for r in rows:
        if r.q + 1 in by_q:
            bigger = by_q[r.q + 1]
            verdict = "faster" if bigger.full_suzuki < r.full_exact else "slower"
            lines.append(f"suzuki q={r.q + 1} full {bigger.full_suzuki * us:.3f} us vs exact q={r.q} "
                         f"{r.full_exact * us:.3f} us: {verdict}")
    return "\n".join(lines)


def check_floors(rows: list, floor: float = 4.0) -> list:
    """Human-readable failures of the q=3 ratio floor and the q=4-vs-q=3 comparison."""
    by_q = {r.q: r for r in rows}
    failures = []
    if 3 in by_q:
        r = by_q[3]
        if r.ratio_sub < floor:
            failures.append(f"q=3 sub-propagator ratio {r.ratio_sub:.2f} < {floor}")
        if r.ratio_full < floor:
            failures.append(f"q=3 full-propagator ratio {r.ratio_full:.2f} < {floor}")
        if 4 in by_q and not by_q[4].full_suzuki < r.full_exact:
            failures.append("suzuki at q=4 is not faster than exact at q=3")
    return failures


def kernel_comparison(q: int = 3, n: int = 500, repetitions: int = 5, seed: int = 0) -> str:
    """Same benchmark on the compiled and the pure-numpy kernels."""
    lines = []
    for name, mod in (("numba", _kernels.numba_impl), ("numpy", _kernels.numpy_impl)):
        if mod is None:
            lines.append(f"{name}: unavailable")
            continue
        r = bench_q(q, n, repetitions, seed=seed, kernels=mod)
        lines.append(f"{name:>5} q={q}: sub exact {r.sub_exact * 1e6:.3f} us, suzuki "
                     f"{r.sub_suzuki * 1e6:.3f} us; full exact {r.full_exact * 1e6:.3f} us, "
                     f"suzuki {r.full_suzuki * 1e6:.3f} us")
    return "\n".join(lines)
