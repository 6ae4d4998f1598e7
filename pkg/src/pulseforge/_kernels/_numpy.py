"""Pure-numpy kernels, batched over steps where the algebra allows it.

Signatures and counter semantics mirror the compiled kernels one for one.
"""

import numpy as np
from scipy.linalg import lu_factor, lu_solve

MATMUL = 0
EXPM = 1
SUBPROP = 2
PHASE = 3

_THETA = (1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
          2.097847961257068e0, 5.371920351148152e0)

_PADE_LOW = (
    (120.0, 60.0, 12.0, 1.0),
    (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
     2162160.0, 110880.0, 3960.0, 90.0, 1.0),
)
_PADE13 = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
           1187353796428800.0, 129060195264000.0, 10559470521600.0,
           670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
           960960.0, 16380.0, 182.0, 1.0)


def _solve(U, V):
    return lu_solve(lu_factor(V - U, check_finite=False), V + U, check_finite=False)


def expm(A, ops):
    ops[EXPM] += 1
    n = A.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    norm = np.abs(A).sum(axis=0).max()
    for theta, b in zip(_THETA, _PADE_LOW):
        if norm <= theta:
            A2 = A @ A
            U = b[1] * ident
            V = b[0] * ident
            P = ident
            for i in range(1, (len(b) - 1) // 2 + 1):
                P = P @ A2
                U = U + b[2 * i + 1] * P
                V = V + b[2 * i] * P
            return _solve(A @ U, V)
    s = max(0, int(np.ceil(np.log2(norm / _THETA[4]))))
    A = A / 2.0 ** s
    b = _PADE13
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    X = _solve(U, V)
    for _ in range(s):
        X = X @ X
    return X


def _phase_vecs(phi, fz):
    return np.exp(-1j * (phi @ fz))


def _alpha_diags(alpha, fz, dt):
    return np.exp(-1j * dt * (alpha @ fz))


def sandwich(ph, W1, ad, W2, out, tmp, ops):
    np.multiply(ad[:, None], W2, out=tmp)
    np.matmul(W1, tmp, out=out)
    ops[MATMUL] += 1
    out *= np.outer(ph, ph.conj())
    ops[PHASE] += 1


def diag_mul(d, M, left, out):
    if left:
        np.multiply(d[:, None], M, out=out)
    else:
        np.multiply(M, d[None, :], out=out)


def suzuki_steps(phi, alpha, idx, fz, W1, W2, dt, out, ops):
    nsteps = phi.shape[0]
    ph = _phase_vecs(phi, fz)
    ad = _alpha_diags(alpha, fz, dt)
    np.matmul(W1[idx], ad[:, :, None] * W2[idx], out=out)
    out *= ph[:, :, None] * ph.conj()[:, None, :]
    ops[MATMUL] += nsteps
    ops[PHASE] += nsteps
    ops[SUBPROP] += nsteps


def chain(steps, acc, ops):
    acc[...] = steps[0]
    for j in range(1, steps.shape[0]):
        acc[...] = steps[j] @ acc
        ops[MATMUL] += 1


def suzuki_total(phi, alpha, idx, fz, W1, W2, dt, acc, ops):
    steps = np.empty((phi.shape[0],) + acc.shape, dtype=np.complex128)
    suzuki_steps(phi, alpha, idx, fz, W1, W2, dt, steps, ops)
    chain(steps, acc, ops)


def ensemble_steps(phi, alpha, idx, fz, W1, W2, dt, out, ops):
    nsteps = phi.shape[0]
    ph = _phase_vecs(phi, fz)
    pattern = ph[:, :, None] * ph.conj()[:, None, :]
    ops[PHASE] += nsteps
    for s in range(alpha.shape[0]):
        ad = _alpha_diags(alpha[s], fz, dt)
        np.matmul(W1[idx[s]], ad[:, :, None] * W2[idx[s]], out=out[s])
        out[s] *= pattern
        ops[MATMUL] += nsteps
        ops[SUBPROP] += nsteps


def ensemble_total(phi, alpha, idx, fz, W1, W2, dt, acc, ops):
    steps = np.empty((alpha.shape[0], phi.shape[0]) + acc.shape[1:], dtype=np.complex128)
    ensemble_steps(phi, alpha, idx, fz, W1, W2, dt, steps, ops)
    for s in range(alpha.shape[0]):
        chain(steps[s], acc[s], ops)


def _hamiltonians(H0, ctrl, amps):
    return H0[None] + np.tensordot(amps, ctrl, axes=(1, 0))


def exact_steps(H0, ctrl, amps, dt, out, ops):
    for j, H in enumerate(_hamiltonians(H0, ctrl, amps)):
        out[j] = expm(-1j * dt * H, ops)
        ops[SUBPROP] += 1


def exact_total(H0, ctrl, amps, dt, acc, ops):
    steps = np.empty((amps.shape[0],) + acc.shape, dtype=np.complex128)
    exact_steps(H0, ctrl, amps, dt, steps, ops)
    chain(steps, acc, ops)


def grape_overlaps(steps, target, ctrl, ops):
    nsteps = steps.shape[0]
    n = target.shape[0]
    fwd = np.empty((nsteps + 1, n, n), dtype=np.complex128)
    fwd[0] = np.eye(n)
    fwd[1] = steps[0]
    for j in range(1, nsteps):
        np.matmul(steps[j], fwd[j], out=fwd[j + 1])
        ops[MATMUL] += 1
    trace = np.vdot(target, fwd[nsteps])
    lams = np.empty_like(fwd)
    lams[nsteps] = target
    for i in range(nsteps, 0, -1):
        lams[i - 1] = steps[i - 1].conj().T @ lams[i]
        ops[MATMUL] += 1
    Y = fwd @ lams.conj().transpose(0, 2, 1)
    ops[MATMUL] += nsteps + 1
    # tr(H_k Y_i) for every boundary i and channel k
    G = np.einsum("krc,icr->ik", ctrl, Y)
    return G, trace
