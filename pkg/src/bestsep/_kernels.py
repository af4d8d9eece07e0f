"""Compiled inner loop of the exact pairwise sweep."""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def _residual(rho, Psi, lam):
    R = rho.copy()
    d = R.shape[0]
    for a in range(Psi.shape[0]):
        w = lam[a]
        if w != 0.0:
            p = Psi[a]
            for i in range(d):
                for j in range(d):
                    R[i, j] -= w * p[i] * np.conj(p[j])
    return R


@nb.njit(cache=True)
def _range_flags(R, Psi, rank_tol, flags):
    w, V = np.linalg.eigh(R)
    top = w[-1]
    n = Psi.shape[0]
    d = R.shape[0]
    for a in range(n):
        inside = 0.0
        if top > 0.0:
            for k in range(d):
                if w[k] > rank_tol * top:
                    s = 0.0j
                    for i in range(d):
                        s += np.conj(V[i, k]) * Psi[a, i]
                    inside += s.real * s.real + s.imag * s.imag
        flags[a] = 1.0 - inside <= rank_tol


@nb.njit(cache=True)
def _forms(M, p1, p2, rank_tol):
    """Range membership and <p|M^+|q> forms for two vectors."""
    w, V = np.linalg.eigh(M)
    d = M.shape[0]
    top = w[-1]
    n1 = 0.0
    n2 = 0.0
    q11 = 0.0
    q22 = 0.0
    q12 = 0.0j
    if top > 0.0:
        for k in range(d):
            if w[k] > rank_tol * top:
                a1 = 0.0j
                a2 = 0.0j
                for i in range(d):
                    a1 += np.conj(V[i, k]) * p1[i]
                    a2 += np.conj(V[i, k]) * p2[i]
                m1 = a1.real * a1.real + a1.imag * a1.imag
                m2 = a2.real * a2.real + a2.imag * a2.imag
                n1 += m1
                n2 += m2
                q11 += m1 / w[k]
                q22 += m2 / w[k]
                q12 += np.conj(a1) * a2 / w[k]
    return 1.0 - n1 <= rank_tol, 1.0 - n2 <= rank_tol, q11, q22, q12


@nb.njit(cache=True)
def pair_weights(in1, in2, q11, q22, q12, rank_tol):
    """Maximal pair given the forms; returns (l1, l2, case, interior)."""
    if not in1 and not in2:
        return 0.0, 0.0, 0, False
    if not in1:
        return 0.0, 1.0 / q22, 1, False
    if not in2:
        return 1.0 / q11, 0.0, 1, False
    c = abs(q12)
    if c <= rank_tol * np.sqrt(q11 * q22):
        return 1.0 / q11, 1.0 / q22, 2, True
    D = q11 * q22 - c * c
    if D > 1e-13 * q11 * q22:
        l1 = (q22 - c) / D
        l2 = (q11 - c) / D
        if l1 >= 0.0 and l2 >= 0.0:
            return l1, l2, 3, True
    if 1.0 / q11 >= 1.0 / q22:
        return 1.0 / q11, 0.0, 3, False
    return 0.0, 1.0 / q22, 3, False


@nb.njit(cache=True)
def _apply(R, p, delta):
    d = R.shape[0]
    for i in range(d):
        for j in range(d):
            R[i, j] -= delta * p[i] * np.conj(p[j])


@nb.njit(cache=True)
def _feasible(M, p1, d1, p2, d2, guard):
    T = M.copy()
    _apply(T, p1, d1)
    _apply(T, p2, d2)
    return np.linalg.eigvalsh(T)[0] >= -guard


@nb.njit(cache=True)
def exact_pass(rho, Psi, lam, rank_tol, gain_eps, guard):
    """One full pass: single updates, then every unordered pair in order.

    ``lam`` is updated in place. An update is applied only when it raises
    the weight sum by more than ``gain_eps`` and leaves the residual's
    smallest eigenvalue above ``-guard``. Returns the number of updates.
    """
    n = Psi.shape[0]
    R = _residual(rho, Psi, lam)
    flags = np.zeros(n, dtype=np.bool_)
    _range_flags(R, Psi, rank_tol, flags)
    updates = 0
    for a in range(n):
        if lam[a] == 0.0 and not flags[a]:
            continue
        M = R.copy()
        _apply(M, Psi[a], -lam[a])
        in1, _, q11, _, _ = _forms(M, Psi[a], Psi[a], rank_tol)
        x = 1.0 / q11 if in1 else 0.0
        if x > lam[a] + gain_eps and _feasible(M, Psi[a], x, Psi[a], 0.0, guard):
            _apply(R, Psi[a], x - lam[a])
            lam[a] = x
            updates += 1
            _range_flags(R, Psi, rank_tol, flags)
    for a in range(n):
        for b in range(a + 1, n):
            la = lam[a]
            lb = lam[b]
            if la == 0.0 and lb == 0.0 and not flags[a] and not flags[b]:
                continue
            M = R.copy()
            if la != 0.0:
                _apply(M, Psi[a], -la)
            if lb != 0.0:
                _apply(M, Psi[b], -lb)
            in1, in2, q11, q22, q12 = _forms(M, Psi[a], Psi[b], rank_tol)
            x1, x2, _, _ = pair_weights(in1, in2, q11, q22, q12, rank_tol)
            if x1 + x2 > la + lb + gain_eps and _feasible(M, Psi[a], x1, Psi[b], x2, guard):
                _apply(R, Psi[a], x1 - la)
                _apply(R, Psi[b], x2 - lb)
                lam[a] = x1
                lam[b] = x2
                updates += 1
                _range_flags(R, Psi, rank_tol, flags)
    return updates


@nb.njit(cache=True)
def _contract_a(T, e):
    """``(e (x) I)^H A (e (x) I)`` for ``A`` given as (dA, dB, dA, dB)."""
    dA, dB = T.shape[0], T.shape[1]
    K = np.zeros((dB, dB), dtype=np.complex128)
    for k in range(dB):
        for l in range(dB):
            s = 0.0j
            for i in range(dA):
                for j in range(dA):
                    s += np.conj(e[i]) * T[i, k, j, l] * e[j]
            K[k, l] = s
    return K


@nb.njit(cache=True)
def _contract_b(T, f):
    """``(I (x) f)^H A (I (x) f)``."""
    dA, dB = T.shape[0], T.shape[1]
    K = np.zeros((dA, dA), dtype=np.complex128)
    for i in range(dA):
        for j in range(dA):
            s = 0.0j
            for k in range(dB):
                for l in range(dB):
                    s += np.conj(f[k]) * T[i, k, j, l] * f[l]
            K[i, j] = s
    return K


@nb.njit(cache=True)
def alternate_extremize(T, e0, maximize, max_iter, rtol):
    """Alternating eigenvector steps on ``<e,f|A|e,f>`` with ``T = A`` as (dA, dB, dA, dB)."""
    dA, dB = T.shape[0], T.shape[1]
    pick_b = dB - 1 if maximize else 0
    pick_a = dA - 1 if maximize else 0
    e = e0 / np.sqrt(np.sum(np.abs(e0) ** 2))
    f = np.zeros(dB, dtype=np.complex128)
    best = np.nan
    for _ in range(max_iter):
        w, v = np.linalg.eigh(_contract_a(T, e))
        f = v[:, pick_b].copy()
        w, v = np.linalg.eigh(_contract_b(T, f))
        e = v[:, pick_a].copy()
        val = w[pick_a]
        if not np.isnan(best):
            step = val - best if maximize else best - val
            if step <= rtol * max(1.0, abs(val)):
                best = val
                break
        best = val
    return e, f, best


@nb.njit(cache=True)
def _constrained_min(B, G, null_tol, kappa):
    """Bottom eigenvector of ``B`` on the near-null space of the PSD ``G``.

    Falls back to the bottom eigenvector of ``B + kappa G`` when that space
    is empty.
    """
    w, V = np.linalg.eigh(G)
    k = 0
    while k < w.shape[0] and w[k] <= null_tol:
        k += 1
    if k == 0:
        w2, V2 = np.linalg.eigh(B + kappa * G)
        return V2[:, 0].copy()
    N = np.ascontiguousarray(V[:, :k])
    w2, V2 = np.linalg.eigh(N.conj().T @ B @ N)
    y = np.ascontiguousarray(V2[:, 0])
    return N @ y


@nb.njit(cache=True)
def alternate_min_in_subspace(T, Q, e0, max_iter, rtol, null_tol, kappa):
    """Minimize ``<e,f|A|e,f>`` over product vectors in the null space of ``Q``.

    ``Q`` is the projector onto the complement of the allowed subspace, in
    the same (dA, dB, dA, dB) layout as ``T``. Each half-step minimizes
    exactly over the admissible factors. Returns ``(e, f, value, residual)``
    with ``residual = <e,f|Q|e,f>``.
    """
    e = e0 / np.sqrt(np.sum(np.abs(e0) ** 2))
    f = np.zeros(T.shape[1], dtype=np.complex128)
    best = np.nan
    val = np.nan
    for _ in range(max_iter):
        f = _constrained_min(_contract_a(T, e), _contract_a(Q, e), null_tol, kappa)
        f = f / np.sqrt(np.sum(np.abs(f) ** 2))
        e = _constrained_min(_contract_b(T, f), _contract_b(Q, f), null_tol, kappa)
        e = e / np.sqrt(np.sum(np.abs(e) ** 2))
        val = np.real(np.vdot(e, _contract_b(T, f) @ e))
        if not np.isnan(best) and best - val <= rtol * max(1.0, abs(val)):
            break
        best = val
    res = np.real(np.vdot(e, _contract_b(Q, f) @ e))
    return e, f, val, res


@nb.njit(cache=True)
def reduced_min(T, Q, x, k, side):
    """``min <e,f|A|e,f>`` over admissible partners of a fixed factor ``x``.

    ``side == 0`` fixes ``e = x`` and searches ``f`` in the span of the ``k``
    bottom eigenvectors of ``(e (x) I)^H Q (e (x) I)``; ``side == 1`` fixes
    ``f``. Returns ``(value, e, f)``.
    """
    x = x / np.sqrt(np.sum(np.abs(x) ** 2))
    if side == 0:
        B = _contract_a(T, x)
        G = _contract_a(Q, x)
    else:
        B = _contract_b(T, x)
        G = _contract_b(Q, x)
    w, V = np.linalg.eigh(G)
    N = np.ascontiguousarray(V[:, :k])
    w2, V2 = np.linalg.eigh(N.conj().T @ B @ N)
    y = N @ np.ascontiguousarray(V2[:, 0])
    y = y / np.sqrt(np.sum(np.abs(y) ** 2))
    if side == 0:
        return w2[0], x, y
    return w2[0], y, x


@nb.njit(cache=True)
def _reduced_value(T, Q, z, k, side):
    n = z.shape[0] // 2
    x = z[:n] + 1j * z[n:]
    return reduced_min(T, Q, x, k, side)[0]


@nb.njit(cache=True)
def _grad(T, Q, z, k, side, h):
    g = np.zeros_like(z)
    for i in range(z.shape[0]):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (_reduced_value(T, Q, zp, k, side) - _reduced_value(T, Q, zm, k, side)) / (2 * h)
    return g


@nb.njit(cache=True)
def reduced_search(T, Q, x0, k, side, max_iter, gtol):
    """BFGS with central differences on :func:`reduced_min` over the fixed factor.

    The value is invariant under scaling and phase of the factor, so the
    iterate is renormalized after every step. Returns ``(value, e, f)``.
    """
    n = x0.shape[0]
    z = np.empty(2 * n)
    z[:n] = x0.real
    z[n:] = x0.imag
    z /= np.sqrt(np.sum(z * z))
    h = 1e-6
    H = np.eye(2 * n)
    v = _reduced_value(T, Q, z, k, side)
    g = _grad(T, Q, z, k, side, h)
    for _ in range(max_iter):
        if np.sqrt(np.sum(g * g)) < gtol:
            break
        p = -H @ g
        slope = g @ p
        if slope >= 0.0:
            H = np.eye(2 * n)
            p = -g
            slope = g @ p
        t = 1.0
        accepted = False
        while t > 1e-12:
            zt = z + t * p
            zt /= np.sqrt(np.sum(zt * zt))
            vt = _reduced_value(T, Q, zt, k, side)
            if vt <= v + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        small = v - vt <= 1e-13 * max(1.0, abs(v))
        gt = _grad(T, Q, zt, k, side, h)
        s = zt - z
        y = gt - g
        sy = s @ y
        if sy > 1e-14:
            rho = 1.0 / sy
            I = np.eye(2 * n)
            H = (I - rho * np.outer(s, y)) @ H @ (I - rho * np.outer(y, s)) + rho * np.outer(s, s)
        z, v, g = zt, vt, gt
        if small:
            break
    return reduced_min(T, Q, z[:n] + 1j * z[n:], k, side)
