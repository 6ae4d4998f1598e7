"""Compiled kernels.

Every kernel takes an ``ops`` int64 array and bumps the slots named in
``pulseforge._kernels`` (MATMUL, EXPM, SUBPROP, PHASE) at the point where the
work happens, so counts stay honest inside fused loops.
"""

import numpy as np
from numba import njit

MATMUL = 0
EXPM = 1
SUBPROP = 2
PHASE = 3

_jit = njit(cache=True, nogil=True)

_THETA = (1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
          2.097847961257068e0, 5.371920351148152e0)


@_jit
def _norm1(A):
    n = A.shape[0]
    best = 0.0
    for c in range(n):
        s = 0.0
        for r in range(n):
            s += abs(A[r, c])
        if s > best:
            best = s
    return best


@_jit
def _pade_low(A, b):
    # b holds degree+1 coefficients for an odd degree m in {3, 5, 7, 9}
    n = A.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    A2 = A @ A
    U = b[1] * ident
    V = b[0] * ident
    P = ident.copy()
    for i in range(1, (len(b) - 1) // 2 + 1):
        P = P @ A2
        U = U + b[2 * i + 1] * P
        V = V + b[2 * i] * P
    U = A @ U
    return U, V


@_jit
def _pade13(A):
    b = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0)
    n = A.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
    U = U + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident
    U = A @ U
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
    V = V + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    return U, V


@_jit
def expm(A, ops):
    ops[EXPM] += 1
    norm = _norm1(A)
    if norm <= _THETA[0]:
        U, V = _pade_low(A, np.array([120.0, 60.0, 12.0, 1.0]))
        return np.ascontiguousarray(np.linalg.solve(V - U, V + U))
    if norm <= _THETA[1]:
        U, V = _pade_low(A, np.array([30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]))
        return np.ascontiguousarray(np.linalg.solve(V - U, V + U))
    if norm <= _THETA[2]:
        U, V = _pade_low(A, np.array([17297280.0, 8648640.0, 1995840.0, 277200.0,
                                      25200.0, 1512.0, 56.0, 1.0]))
        return np.ascontiguousarray(np.linalg.solve(V - U, V + U))
    if norm <= _THETA[3]:
        U, V = _pade_low(A, np.array([17643225600.0, 8821612800.0, 2075673600.0,
                                      302702400.0, 30270240.0, 2162160.0, 110880.0,
                                      3960.0, 90.0, 1.0]))
        return np.ascontiguousarray(np.linalg.solve(V - U, V + U))
    s = max(0, int(np.ceil(np.log2(norm / _THETA[4]))))
    U, V = _pade13(A / 2.0 ** s)
    X = np.ascontiguousarray(np.linalg.solve(V - U, V + U))
    for _ in range(s):
        X = X @ X
    return X


@_jit
def _phase_vec(phi, fz, ph):
    # exp(-i sum_k phi_k fz_k)
    p, n = fz.shape
    for r in range(n):
        a = 0.0
        for k in range(p):
            a += phi[k] * fz[k, r]
        ph[r] = np.cos(a) - 1j * np.sin(a)


@_jit
def _alpha_diag(alpha, fz, dt, ad):
    # exp(-i dt sum_k alpha_k fz_k)
    p, n = fz.shape
    for r in range(n):
        b = 0.0
        for k in range(p):
            b += alpha[k] * fz[k, r]
        b *= dt
        ad[r] = np.cos(b) - 1j * np.sin(b)


@_jit
def _step_diagonals(phi, alpha, fz, dt, ph, ad):
    _phase_vec(phi, fz, ph)
    _alpha_diag(alpha, fz, dt, ad)


@_jit
def _sandwich_into(ph, W1, ad, W2, out, tmp, ops):
    n = W1.shape[0]
    for r in range(n):
        for c in range(n):
            tmp[r, c] = ad[r] * W2[r, c]
    np.dot(W1, tmp, out)
    ops[MATMUL] += 1
    for r in range(n):
        pr = ph[r]
        for c in range(n):
            out[r, c] *= pr * np.conj(ph[c])
    ops[PHASE] += 1


@_jit
def sandwich(ph, W1, ad, W2, out, tmp, ops):
    _sandwich_into(ph, W1, ad, W2, out, tmp, ops)


@_jit
def diag_mul(d, M, left, out):
    n = M.shape[0]
    if left:
        for r in range(n):
            for c in range(n):
                out[r, c] = d[r] * M[r, c]
    else:
        for r in range(n):
            for c in range(n):
                out[r, c] = M[r, c] * d[c]


@_jit
def suzuki_steps(phi, alpha, idx, fz, W1, W2, dt, out, ops):
    n = out.shape[1]
    ph = np.empty(n, dtype=np.complex128)
    ad = np.empty(n, dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    for j in range(phi.shape[0]):
        _step_diagonals(phi[j], alpha[j], fz, dt, ph, ad)
        _sandwich_into(ph, W1[idx[j]], ad, W2[idx[j]], out[j], tmp, ops)
        ops[SUBPROP] += 1


@_jit
def suzuki_total(phi, alpha, idx, fz, W1, W2, dt, acc, ops):
    n = acc.shape[0]
    ph = np.empty(n, dtype=np.complex128)
    ad = np.empty(n, dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    step = np.empty((n, n), dtype=np.complex128)
    a = np.empty((n, n), dtype=np.complex128)
    b = np.empty((n, n), dtype=np.complex128)
    for j in range(phi.shape[0]):
        _step_diagonals(phi[j], alpha[j], fz, dt, ph, ad)
        if j == 0:
            _sandwich_into(ph, W1[idx[j]], ad, W2[idx[j]], a, tmp, ops)
        else:
            _sandwich_into(ph, W1[idx[j]], ad, W2[idx[j]], step, tmp, ops)
            np.dot(step, a, b)
            ops[MATMUL] += 1
            a, b = b, a
        ops[SUBPROP] += 1
    acc[:, :] = a


@_jit
def ensemble_total(phi, alpha, idx, fz, W1, W2, dt, acc, ops):
    # alpha, idx carry a leading ensemble axis; phases are shared by every member
    m = alpha.shape[0]
    n = acc.shape[1]
    ph = np.empty(n, dtype=np.complex128)
    ad = np.empty(n, dtype=np.complex128)
    pattern = np.empty((n, n), dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    step = np.empty((n, n), dtype=np.complex128)
    swap = np.empty((n, n), dtype=np.complex128)
    for j in range(phi.shape[0]):
        _phase_vec(phi[j], fz, ph)
        for r in range(n):
            for c in range(n):
                pattern[r, c] = ph[r] * np.conj(ph[c])
        ops[PHASE] += 1
        for s in range(m):
            _alpha_diag(alpha[s, j], fz, dt, ad)
            k = idx[s, j]
            for r in range(n):
                for c in range(n):
                    tmp[r, c] = ad[r] * W2[k, r, c]
            np.dot(W1[k], tmp, step)
            ops[MATMUL] += 1
            for r in range(n):
                for c in range(n):
                    step[r, c] *= pattern[r, c]
            ops[SUBPROP] += 1
            if j == 0:
                acc[s] = step
            else:
                np.dot(step, acc[s], swap)
                ops[MATMUL] += 1
                acc[s] = swap


@_jit
def _hamiltonian(H0, ctrl, amps, out):
    n = H0.shape[0]
    for r in range(n):
        for c in range(n):
            v = H0[r, c]
            for k in range(ctrl.shape[0]):
                v += amps[k] * ctrl[k, r, c]
            out[r, c] = v


@_jit
def exact_steps(H0, ctrl, amps, dt, out, ops):
    n = H0.shape[0]
    H = np.empty((n, n), dtype=np.complex128)
    for j in range(amps.shape[0]):
        _hamiltonian(H0, ctrl, amps[j], H)
        out[j] = expm(-1j * dt * H, ops)
        ops[SUBPROP] += 1


@_jit
def exact_total(H0, ctrl, amps, dt, acc, ops):
    n = H0.shape[0]
    H = np.empty((n, n), dtype=np.complex128)
    swap = np.empty((n, n), dtype=np.complex128)
    for j in range(amps.shape[0]):
        _hamiltonian(H0, ctrl, amps[j], H)
        step = expm(-1j * dt * H, ops)
        ops[SUBPROP] += 1
        if j == 0:
            acc[:, :] = step
        else:
            np.dot(step, acc, swap)
            ops[MATMUL] += 1
            acc[:, :] = swap


@_jit
def chain(steps, acc, ops):
    n = acc.shape[0]
    swap = np.empty((n, n), dtype=np.complex128)
    acc[:, :] = steps[0]
    for j in range(1, steps.shape[0]):
        np.dot(steps[j], acc, swap)
        ops[MATMUL] += 1
        acc[:, :] = swap


@_jit
def grape_overlaps(steps, target, ctrl, ops):
    """Boundary overlaps tr(lam_i^H H_c P_i) for i = 0..n and the final trace.

    P_i is the forward product through step i (P_0 = I) and lam_i = Q_i^H U the
    target propagated back from the end.
    """
    nsteps = steps.shape[0]
    n = target.shape[0]
    m = ctrl.shape[0]
    fwd = np.empty((nsteps + 1, n, n), dtype=np.complex128)
    fwd[0] = np.eye(n, dtype=np.complex128)
    fwd[1] = steps[0]
    for j in range(1, nsteps):
        np.dot(steps[j], fwd[j], fwd[j + 1])
        ops[MATMUL] += 1
    trace = 0j
    for r in range(n):
        for c in range(n):
            trace += np.conj(target[r, c]) * fwd[nsteps, r, c]
    G = np.empty((nsteps + 1, m), dtype=np.complex128)
    lam = target.copy()
    Y = np.empty((n, n), dtype=np.complex128)
    lam_h = np.empty((n, n), dtype=np.complex128)
    for i in range(nsteps, -1, -1):
        for r in range(n):
            for c in range(n):
                lam_h[r, c] = np.conj(lam[c, r])
        np.dot(fwd[i], lam_h, Y)
        ops[MATMUL] += 1
        for k in range(m):
            g = 0j
            for r in range(n):
                for c in range(n):
                    g += ctrl[k, r, c] * Y[c, r]
            G[i, k] = g
        if i > 0:
            # lam_{i-1} = V_i^H lam_i
            lam = np.conj(steps[i - 1]).T @ lam
            ops[MATMUL] += 1
    return G, trace


@_jit
def ensemble_steps(phi, alpha, idx, fz, W1, W2, dt, out, ops):
    # out has shape (members, steps, N, N)
    m = alpha.shape[0]
    n = out.shape[2]
    ph = np.empty(n, dtype=np.complex128)
    ad = np.empty(n, dtype=np.complex128)
    pattern = np.empty((n, n), dtype=np.complex128)
    tmp = np.empty((n, n), dtype=np.complex128)
    for j in range(phi.shape[0]):
        _phase_vec(phi[j], fz, ph)
        for r in range(n):
            for c in range(n):
                pattern[r, c] = ph[r] * np.conj(ph[c])
        ops[PHASE] += 1
        for s in range(m):
            _alpha_diag(alpha[s, j], fz, dt, ad)
            k = idx[s, j]
            for r in range(n):
                for c in range(n):
                    tmp[r, c] = ad[r] * W2[k, r, c]
            np.dot(W1[k], tmp, out[s, j])
            ops[MATMUL] += 1
            for r in range(n):
                for c in range(n):
                    out[s, j, r, c] *= pattern[r, c]
            ops[SUBPROP] += 1
