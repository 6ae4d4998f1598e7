import numpy as np
import pytest

from pulseforge.spins import (SpinSystem, build_H0, channel_fz, control_operators, fz_spectrum,
                              hadamard_basis, single_spin_op, total_spin_op)


def comm(a, b):
    return a @ b - b @ a


def test_spin_algebra(two_spin):
    for r in range(2):
        x, y, z = (single_spin_op(two_spin, r, a) for a in "xyz")
        assert np.allclose(comm(x, y), 1j * z)
        assert np.allclose(x @ x, np.eye(4) / 4)
    assert np.allclose(comm(single_spin_op(two_spin, 0, "x"), single_spin_op(two_spin, 1, "y")), 0)


def test_spin_zero_is_most_significant(two_spin):
    # basis |up up>, |up down>, |down up>, |down down>
    assert np.allclose(np.diag(single_spin_op(two_spin, 0, "z")), [0.5, 0.5, -0.5, -0.5])
    assert np.allclose(np.diag(single_spin_op(two_spin, 1, "z")), [0.5, -0.5, 0.5, -0.5])
    assert np.allclose(fz_spectrum(two_spin), [1, 0, 0, -1])


def test_total_z_is_diagonal_sum(two_spin):
    Fz = total_spin_op(two_spin, "z")
    assert np.allclose(Fz, single_spin_op(two_spin, 0, "z") + single_spin_op(two_spin, 1, "z"))


def test_weak_H0_is_diagonal(two_spin):
    H = build_H0(two_spin)
    assert np.allclose(H, np.diag(np.diag(H)))
    w0, w1 = two_spin.offsets
    J = two_spin.couplings[(0, 1)]
    assert np.isclose(H[0, 0].real, (w0 + w1) / 2 + J / 4)


def test_strong_H0_has_flip_flop(two_spin):
    strong = SpinSystem(two_spin.offsets, two_spin.couplings, coupling_model="strong")
    H = build_H0(strong)
    assert np.allclose(H, H.conj().T)
    J = strong.couplings[(0, 1)]
    assert np.isclose(H[1, 2], J / 2)


def test_heteronuclear_strong_keeps_only_zz(hetero):
    H = build_H0(hetero)
    diag_only = SpinSystem(hetero.offsets, {(0, 1): hetero.couplings[(0, 1)]},
                           species=hetero.species, coupling_model="strong")
    # the H-C coupling must not produce any off-diagonal element
    assert np.allclose(build_H0(diag_only), np.diag(np.diag(build_H0(diag_only))))
    assert not np.allclose(H, np.diag(np.diag(H)))  # C-C pair does


def test_dipolar_requires_strong():
    with pytest.raises(ValueError):
        SpinSystem.from_hz([0, 0], dipolar_hz={(0, 1): 100.0})
    s = SpinSystem.from_hz([0, 0], dipolar_hz={(0, 1): 100.0}, coupling_model="strong")
    H = build_H0(s)
    assert np.isclose(H[1, 2], -0.5 * 0.5 * s.dipolar[(0, 1)])


def test_channels_and_controls(hetero):
    assert [c.species for c in hetero.channels] == ["1H", "13C"]
    ops = control_operators(hetero)
    assert ops.shape == (4, 8, 8)
    assert np.allclose(ops[2], single_spin_op(hetero, 1, "x") + single_spin_op(hetero, 2, "x"))
    fz = channel_fz(hetero)
    assert fz.shape == (2, 8)
    assert np.allclose(fz.sum(axis=0), fz_spectrum(hetero))


def test_controls_rotate_into_each_other_under_fz(two_spin):
    # exp(-i phi Fz) Fx exp(i phi Fz) = cos(phi) Fx + sin(phi) Fy
    from scipy.linalg import expm
    Fx, Fy = control_operators(two_spin)
    Fz = total_spin_op(two_spin, "z")
    phi = 0.7
    R = expm(-1j * phi * Fz)
    assert np.allclose(R @ Fx @ R.conj().T, np.cos(phi) * Fx + np.sin(phi) * Fy)


def test_hadamard_diagonalises_fx(two_spin):
    Hq = hadamard_basis(2)
    Fx = control_operators(two_spin)[0]
    assert np.allclose(Hq @ Hq, np.eye(4))
    assert np.allclose(Hq @ Fx @ Hq, total_spin_op(two_spin, "z"))


@pytest.mark.parametrize("kwargs", [
    dict(offsets=[]),
    dict(offsets=[np.nan]),
    dict(offsets=[0, 0], couplings={(0, 0): 1.0}),
    dict(offsets=[0, 0], couplings={(0, 2): 1.0}),
    dict(offsets=[0, 0], couplings={(0, 1): 1.0, (1, 0): 2.0}),
    dict(offsets=[0, 0], species=("1H",)),
    dict(offsets=[0], coupling_model="medium"),
])
def test_system_validation(kwargs):
    with pytest.raises(ValueError):
        SpinSystem(**kwargs)


def test_unknown_species(two_spin):
    with pytest.raises(KeyError):
        two_spin.spins_of("19F")
    with pytest.raises(IndexError):
        single_spin_op(two_spin, 2, "x")
