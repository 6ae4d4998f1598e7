import numpy as np
import pytest
import scipy.linalg

from pulseforge.fidelity import infidelity
from pulseforge.linalg import DimensionError, count_ops
from pulseforge.propagators import (ControlPulse, Unitary, band_offsets, build_plan, ensemble_sub_propagators,
                                    exact_step, mean_offset_plan, phase_transform, propagate,
                                    robustness_ensemble, rotate_frame, select_offset, sub_propagators,
                                    suzuki_step, total_propagator, trotter_step)
from pulseforge.spins import build_H0, control_operators

TWO_PI = 2 * np.pi


def random_pulse(rng, n, p, amax=TWO_PI * 5e3, dt=2e-6):
    return ControlPulse.from_polar(rng.uniform(0, amax, (n, p)), rng.uniform(0, TWO_PI, (n, p)), dt)


def test_pulse_shapes_and_polar():
    p = ControlPulse.from_polar([1.0, 2.0], [0.0, np.pi / 2], 1e-6)
    assert p.amplitudes.shape == (2, 1, 2)
    assert np.allclose(p.alpha[:, 0], [1, 2])
    assert np.allclose(p.phase[:, 0], [0, np.pi / 2])
    assert ControlPulse(np.zeros((3, 2)), 1e-6).p == 1
    assert np.all(ControlPulse.zeros(2, 1, 1e-6).phase == 0)
    with pytest.raises(ValueError):
        p.amplitudes[0, 0, 0] = 5.0


@pytest.mark.parametrize("bad", [np.zeros((0, 1, 2)), np.zeros((2, 1, 3)), np.full((1, 1, 2), np.nan)])
def test_pulse_validation(bad):
    with pytest.raises(ValueError):
        ControlPulse(bad, 1e-6)
    with pytest.raises(ValueError):
        ControlPulse(np.zeros((1, 1, 2)), 0.0)


def test_exact_step_matches_scipy(two_spin, rng):
    pulse = random_pulse(rng, 3, 1)
    H = build_H0(two_spin) + np.tensordot(pulse.amplitudes[1, 0], control_operators(two_spin), axes=(0, 0))
    assert np.allclose(exact_step(two_spin, pulse, 1).matrix, scipy.linalg.expm(-1j * pulse.dt * H), atol=1e-13)


def test_suzuki_step_close_to_exact(two_spin, rng):
    pulse = random_pulse(rng, 4, 1, dt=1e-6)
    plan = build_plan(two_spin, pulse.dt)
    for j in range(pulse.n):
        exact = exact_step(two_spin, pulse, j)
        assert infidelity(exact, suzuki_step(plan, pulse, j)) < 1e-9
        assert infidelity(exact, trotter_step(plan, pulse, j)) < 1e-5
        assert suzuki_step(plan, pulse, j).unitarity_residual < 1e-13


def test_zero_pulse_is_free_evolution(two_spin):
    pulse = ControlPulse.zeros(10, 1, 5e-6)
    plan = build_plan(two_spin, pulse.dt)
    free = scipy.linalg.expm(-1j * 10 * 5e-6 * build_H0(two_spin))
    for backend in ("exact", "suzuki"):
        assert np.allclose(propagate(pulse, backend, plan), free, atol=1e-12)


def test_propagate_equals_product_of_steps(hetero, rng):
    pulse = random_pulse(rng, 6, 2)
    plan = build_plan(hetero, pulse.dt, [[0.0, TWO_PI * 3e3], [TWO_PI * 2e3]])
    for backend in ("exact", "trotter", "suzuki"):
        steps = sub_propagators(pulse, backend, plan)
        expected = np.eye(8)
        for V in steps:
            expected = V @ expected
        assert np.allclose(propagate(pulse, backend, plan), expected, atol=1e-12)
        assert np.allclose(total_propagator(pulse, backend, plan).matrix, expected, atol=1e-12)


def test_phase_transform_identity_multichannel(hetero, rng):
    alpha = rng.uniform(0, TWO_PI * 5e3, 2)
    phi = rng.uniform(0, TWO_PI, 2)
    pulse = ControlPulse.from_polar(alpha[None], phi[None], 3e-6)
    H = build_H0(hetero) + np.tensordot(alpha, control_operators(hetero)[0::2], axes=(0, 0))
    aligned = rotate_frame(hetero, scipy.linalg.expm(-1j * pulse.dt * H), phi)
    assert np.allclose(exact_step(hetero, pulse, 0).matrix, aligned, atol=1e-13)
    assert np.allclose(np.abs(phase_transform(hetero, phi)), 1.0)


def test_plan_expm_count_and_combos(hetero):
    with count_ops() as tally:
        plan = build_plan(hetero, 1e-5, [[0.0, 1.0, 2.0], [5.0, 6.0]])
    assert tally.counts.expm == 6 == plan.expm_calls
    assert plan.combos.shape == (6, 2)
    assert plan.W1.shape == (6, 8, 8)


def test_plan_errors(two_spin, hetero):
    with pytest.raises(ValueError):
        build_plan(two_spin, 0.0)
    with pytest.raises(ValueError):
        build_plan(hetero, 1e-6, [0.0, 1.0])  # flat list is ambiguous for two channels
    with pytest.raises(ValueError):
        build_plan(two_spin, 1e-6, [[]])
    plan = build_plan(two_spin, 1e-6)
    with pytest.raises(DimensionError):
        propagate(ControlPulse.zeros(2, 2, 1e-6), "suzuki", plan)
    with pytest.raises(ValueError):
        propagate(ControlPulse.zeros(2, 1, 2e-6), "suzuki", plan)
    with pytest.raises(ValueError):
        propagate(ControlPulse.zeros(2, 1, 1e-6), "magic", plan)
    with pytest.raises(IndexError):
        suzuki_step(plan, ControlPulse.zeros(2, 1, 1e-6), 5)


def test_select_offset_nearest_with_low_tie(two_spin):
    plan = build_plan(two_spin, 1e-6, [10.0, 20.0, 30.0])
    assert select_offset(12.0, plan) == 0
    assert select_offset(15.0, plan) == 0
    assert select_offset(26.0, plan) == 2
    assert select_offset(1e9, plan) == 2


def test_band_offsets():
    assert np.allclose(band_offsets(8.0, 2), [2.0, 6.0])
    assert np.allclose(band_offsets(1.0, 1), [0.5])
    with pytest.raises(ValueError):
        band_offsets(1.0, 0)


def test_mean_offset_plan(two_spin, rng):
    pulse = random_pulse(rng, 20, 1)
    plan = mean_offset_plan(pulse, two_spin)
    assert np.isclose(plan.combos[0, 0], pulse.alpha.mean())


def test_offsets_reduce_error(two_spin, rng):
    pulse = random_pulse(rng, 50, 1, dt=5e-6)
    exact = propagate(pulse, "exact", build_plan(two_spin, pulse.dt))
    zero = infidelity(exact, propagate(pulse, "suzuki", build_plan(two_spin, pulse.dt)))
    two = infidelity(exact, propagate(pulse, "suzuki",
                                      build_plan(two_spin, pulse.dt, band_offsets(TWO_PI * 5e3, 2))))
    assert two < zero / 5


def test_ensemble_matches_scaled_pulses(two_spin, rng):
    pulse = random_pulse(rng, 8, 1)
    plan = build_plan(two_spin, pulse.dt, band_offsets(TWO_PI * 5e3, 3))
    scalings = [0.95, 1.0, 1.05]
    steps = ensemble_sub_propagators(pulse, plan, scalings)
    totals = robustness_ensemble(pulse, plan, scalings)
    threaded = robustness_ensemble(pulse, plan, scalings, jobs=3)
    for s, V, U, T in zip(scalings, steps, totals, threaded):
        assert np.allclose(V, sub_propagators(pulse.scaled(s), "suzuki", plan), atol=1e-13)
        assert np.allclose(U.matrix, propagate(pulse.scaled(s), "suzuki", plan), atol=1e-13)
        assert np.array_equal(U.matrix, T.matrix)
    with pytest.raises(ValueError):
        robustness_ensemble(pulse, plan, [1.0, -0.5])


def test_ensemble_shares_phase_patterns(two_spin, rng):
    pulse = random_pulse(rng, 8, 1)
    plan = build_plan(two_spin, pulse.dt)
    with count_ops() as tally:
        robustness_ensemble(pulse, plan, [0.9, 1.0, 1.1])
    assert tally.counts.phase == pulse.n
    assert tally.counts.subprop == 3 * pulse.n


def test_unitary_wrapper():
    U = Unitary(np.eye(2) * 1.0)
    assert U.unitarity_residual == 0 and U.dim == 2
    with pytest.raises(DimensionError):
        Unitary(np.ones((2, 3)))
