"""Acceptance criteria, each reported as one PASS/FAIL line at the end of the run."""

import time
from pathlib import Path

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, exact_gradient

from pulseforge import bench, io
from pulseforge.ensembles import random_spin_system, smooth_random_pulse
from pulseforge.fidelity import finite_diff_gradient, grape_gradient, infidelity
from pulseforge.gates import named_gate
from pulseforge.linalg import count_ops
from pulseforge.optimize import optimize
from pulseforge.propagators import (ControlPulse, band_offsets, build_plan, mean_offset_plan, propagate,
                                    sub_propagators)
from pulseforge.spins import TWO_PI
from pulseforge.verify import leading_order_ratio, one_spin_step_infidelity, order_slope, worst_case_growth

ROOT = Path(__file__).resolve().parent.parent


def record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  [{number}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    # compile / load cached kernels outside the timed regions
    one_spin_step_infidelity(1.0, 1.0, 1e-6)
    plan = build_plan(random_spin_system(2, np.random.default_rng(0)), 1e-6)
    pulse = ControlPulse.zeros(2, 1, 1e-6)
    for backend in ("exact", "suzuki"):
        propagate(pulse, backend, plan)
        grape_gradient(pulse, np.eye(4), plan, backend)


@pytest.fixture(scope="module")
def full_pulse_ensemble():
    """Twenty 3-spin trials: offsets <= 2 kHz, couplings <= 200 Hz, alpha <= 5 kHz, n = 500, dt = 10 us."""
    rng = np.random.default_rng(2024)
    amax, dt, n = TWO_PI * 5e3, 1e-5, 500
    trials = []
    t0 = time.perf_counter()
    for _ in range(20):
        system = random_spin_system(3, rng)
        pulse = smooth_random_pulse(n, 1, amax, dt, rng)
        exact = propagate(pulse, "exact", build_plan(system, dt))
        zero = infidelity(exact, propagate(pulse, "suzuki", build_plan(system, dt)))
        mean = infidelity(exact, propagate(pulse, "suzuki", mean_offset_plan(pulse, system)))
        two = infidelity(exact, propagate(pulse, "suzuki", build_plan(system, dt, band_offsets(amax, 2))))
        trials.append((zero, mean, two))
    return np.array(trials), time.perf_counter() - t0


def test_01_single_spin_error_formula():
    t0 = time.perf_counter()
    value = one_spin_step_infidelity(TWO_PI * 15e3, TWO_PI * 5e3, 1e-5)
    ratio = leading_order_ratio(TWO_PI * 10e3, TWO_PI * 4e3, 1e-6)
    elapsed = time.perf_counter() - t0
    ok = value < 5e-5 and abs(ratio - 1.0) <= 0.05 and elapsed < 1.0
    record(1, "one-spin step error", ok,
           f"infidelity {value:.3e} (< 5e-5), measured/analytic {ratio:.5f} (1 +- 0.05), {elapsed:.2f} s")


def test_02_order_of_accuracy():
    t0 = time.perf_counter()
    dts = np.geomspace(1e-6, 32e-6, 6)
    w0, a = TWO_PI * 5e3, TWO_PI * 2e3
    s6 = order_slope("suzuki", w0, a, dts)
    s4 = order_slope("trotter", w0, a, dts)
    elapsed = time.perf_counter() - t0
    ok = abs(s6 - 6.0) <= 0.3 and abs(s4 - 4.0) <= 0.3 and elapsed < 10
    record(2, "order of accuracy", ok, f"suzuki slope {s6:.3f} (6 +- 0.3), trotter slope {s4:.3f} (4 +- 0.3), "
                                       f"{elapsed:.2f} s")


def test_03_full_pulse_error(full_pulse_ensemble):
    trials, elapsed = full_pulse_ensemble
    zero = trials[:, 0]
    median = np.median(zero)
    ok = zero.max() <= 1e-3 and 1e-5 <= median <= 1e-3 and elapsed < 120
    record(3, "full-pulse error, 20 random 3-spin trials", ok,
           f"max {zero.max():.2e} (<= 1e-3), median {median:.2e} (within a decade of 1e-4), {elapsed:.1f} s")


def test_04_offset_gains(full_pulse_ensemble):
    trials, _ = full_pulse_ensemble
    gain_mean = np.median(trials[:, 0] / trials[:, 1])
    gain_two = np.median(trials[:, 0] / trials[:, 2])

    # many-offset limit: mean sub-propagator error against the number of bands
    rng = np.random.default_rng(77)
    amax, dt = TWO_PI * 5e3, 1e-5
    system = random_spin_system(3, rng)
    pulse = smooth_random_pulse(500, 1, amax, dt, rng)
    exact_steps = sub_propagators(pulse, "exact", build_plan(system, dt))
    counts = [2, 4, 8, 16]
    errs = []
    for k in counts:
        steps = sub_propagators(pulse, "suzuki", build_plan(system, dt, band_offsets(amax, k)))
        errs.append(np.mean([infidelity(a, b) for a, b in zip(exact_steps, steps)]))
    slope = np.polyfit(np.log(counts), np.log(errs), 1)[0]
    ok = gain_mean >= 5 and gain_two >= 25 and abs(slope + 2.0) <= 0.4
    record(4, "offset gains", ok, f"median gain mean-offset {gain_mean:.1f}x (>= 5), two offsets "
                                  f"{gain_two:.1f}x (>= 25), many-offset slope {slope:.2f} (-2 +- 0.4)")


def test_05_worst_case_growth():
    t0 = time.perf_counter()
    ratios = [worst_case_growth(TWO_PI * 2e3, TWO_PI * 1e3, 1e-6, n) for n in (8, 16)]
    elapsed = time.perf_counter() - t0
    ok = all(abs(r - 4.0) <= 0.5 for r in ratios) and elapsed < 10
    record(5, "worst-case quadratic growth", ok,
           f"infidelity(2n)/infidelity(n) = {ratios[0]:.3f} (n=8), {ratios[1]:.3f} (n=16) (4 +- 0.5)")


def test_06_operation_counts():
    rng = np.random.default_rng(6)
    system = random_spin_system(3, rng)
    n, dt = 40, 5e-6
    pulse = smooth_random_pulse(n, 1, TWO_PI * 5e3, dt, rng)
    offsets = band_offsets(TWO_PI * 5e3, 3)
    with count_ops() as plan_ops:
        plan = build_plan(system, dt, offsets)
    with count_ops() as step_ops:
        sub_propagators(pulse, "suzuki", plan)
    with count_ops() as total_ops:
        propagate(pulse, "suzuki", plan)
    with count_ops() as grad_ops:
        grape_gradient(pulse, named_gate("hadamard", 3, [0]), plan, "suzuki")
    checks = {
        "expm calls == |offsets|": plan_ops.counts.expm == len(offsets),
        "no expm while propagating": step_ops.counts.expm == total_ops.counts.expm == grad_ops.counts.expm == 0,
        "1 matmul per sub-propagator": step_ops.counts.matmul == n,
        "<= 2 matmuls per step in full propagator": total_ops.counts.matmul == 2 * n - 1,
        "gradient builds n sub-propagators": grad_ops.counts.subprop == n,
    }
    detail = ", ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in checks.items())
    record(6, "operation counts", all(checks.values()),
           detail + f" (expm {plan_ops.counts.expm}, matmul {step_ops.counts.matmul}/"
                    f"{total_ops.counts.matmul}, subprop {grad_ops.counts.subprop})")


def test_07_speedup_floors():
    rows = bench.run_bench(qs=(3, 4), n=500, repetitions=9)
    q3, q4 = rows
    ok = q3.ratio_sub >= 4 and q3.ratio_full >= 4 and q4.full_suzuki < q3.full_exact
    record(7, "speedup floors", ok,
           f"q=3 sub ratio {q3.ratio_sub:.1f}x, full ratio {q3.ratio_full:.1f}x (>= 4); "
           f"suzuki q=4 {q4.full_suzuki * 1e6:.2f} us/step vs exact q=3 {q3.full_exact * 1e6:.2f} us/step")


def test_08_end_to_end_hadamard():
    cfg = io.read_config(ROOT / "configs" / "alanine_hadamard.cfg")
    system = io.system_from_config(cfg)
    n, dt = io.pulse_shape_from_config(cfg)
    target = io.target_from_config(cfg, system, n * dt)
    config = io.optimizer_from_config(cfg)
    pulse0 = io.initial_pulse_from_config(cfg, n, dt, 1, config.alpha_max, config.seed)
    t0 = time.perf_counter()
    _, report = optimize(system, target, pulse0, config)
    elapsed = time.perf_counter() - t0
    gap = abs(report.final_phi - report.final_phi_exact)
    ok = report.final_phi >= 0.999 and gap <= 1e-4 and elapsed < 300
    record(8, "end-to-end 3-spin Hadamard", ok,
           f"backend phi {report.final_phi:.6f} (>= 0.999), exact {report.final_phi_exact:.6f}, "
           f"gap {gap:.1e} (<= 1e-4), {report.iterations} iterations, {elapsed:.1f} s")


def test_09_gradient_correctness():
    rng = np.random.default_rng(9)
    worst = 0.0
    for dt in (1e-6, 2e-6):
        system = random_spin_system(2, rng)
        pulse = smooth_random_pulse(16, 1, TWO_PI * 5e3, dt, rng)
        target = named_gate("hadamard", 2, [0])
        plan = build_plan(system, dt, [TWO_PI * 2.5e3])
        for backend in ("suzuki", "exact"):
            g = grape_gradient(pulse, target, plan, backend)
            fd = finite_diff_gradient(pulse, target, plan, backend, h=TWO_PI * 20)
            worst = max(worst, np.max(np.abs(g - fd)) / np.max(np.abs(fd)))
    # central differences against the Frechet-derivative oracle
    ref = exact_gradient(system, pulse, target)
    hs = TWO_PI * np.array([400.0, 200.0, 100.0, 50.0])
    errs = [np.max(np.abs(finite_diff_gradient(pulse, target, plan, "exact", h) - ref)) for h in hs]
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    ok = worst <= 0.01 and abs(slope - 2.0) <= 0.2
    record(9, "gradient correctness", ok,
           f"max relative deviation from finite differences {worst:.1e} (<= 1e-2), h-refinement slope "
           f"{slope:.3f} (2 +- 0.2)")
