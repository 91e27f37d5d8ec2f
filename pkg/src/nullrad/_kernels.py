"""Marching kernels for the two evolution engines.

Leapfrog on the characteristic-aligned (t, r) grid at Courant number one,
and the two-level characteristic update for the compactified double-null
triangle.  Each kernel exists as a numba-jitted scalar loop and as a
vectorized numpy sweep with the same per-cell expressions.  Within a
backend results are independent of sweep order: every cell reads only
finalized neighbor values, and the implicit corner fixed point iterates
each cell against its own tolerance (converged cells freeze).
"""

from __future__ import annotations

import numpy as np

from ._backend import backend_name, njit

BLOWUP_LIMIT = 1e8
FP_TOL = 1e-12
FP_MAX_ITER = 50


# ---------------------------------------------------------------------------
# (t, r) leapfrog, dt = dr: w^{n+1}_j = w^n_{j+1} + w^n_{j-1} - w^{n-1}_j - h^2 N_j
# with N = r f(w/r); quintic N = c w^5 / r^4 (0 at r = 0).


@njit(cache=True)
def _leapfrog_quintic_numba(w, h2c, inv_r4):  # pragma: no cover - jitted
    nt, nr = w.shape
    for n in range(1, nt - 1):
        for j in range(1, nr - 1):
            wn = w[n, j]
            w2 = wn * wn
            w5 = w2 * w2 * wn
            w[n + 1, j] = w[n, j + 1] + w[n, j - 1] - w[n - 1, j] - (h2c * w5) * inv_r4[j]
        m = 0.0
        for j in range(nr):
            a = abs(w[n + 1, j])
            if a > m:
                m = a
        if not (m < BLOWUP_LIMIT):
            return n + 1
    return -1


def _leapfrog_quintic_numpy(w, h2c, inv_r4):
    nt = w.shape[0]
    for n in range(1, nt - 1):
        wn = w[n, 1:-1]
        w2 = wn * wn
        w5 = w2 * w2 * wn
        w[n + 1, 1:-1] = w[n, 2:] + w[n, :-2] - w[n - 1, 1:-1] - (h2c * w5) * inv_r4[1:-1]
        if not (np.max(np.abs(w[n + 1])) < BLOWUP_LIMIT):
            return n + 1
    return -1


def _leapfrog_custom_numpy(w, h, nl, r):
    inv_r = np.zeros_like(r)
    inv_r[1:] = 1.0 / r[1:]
    h2 = h * h
    nt = w.shape[0]
    for n in range(1, nt - 1):
        src = r[1:-1] * nl.f(w[n, 1:-1] * inv_r[1:-1])
        w[n + 1, 1:-1] = w[n, 2:] + w[n, :-2] - w[n - 1, 1:-1] - h2 * src
        if not (np.max(np.abs(w[n + 1])) < BLOWUP_LIMIT):
            return n + 1
    return -1


def leapfrog_march(w: np.ndarray, h: float, nl, r: np.ndarray) -> int:
    """March rows 2..nt-1 of ``w`` in place (rows 0 and 1 must be set).

    Returns -1 on success, or the row index at which |w| crossed the
    blowup limit.
    """
    if nl.kind == "quintic":
        inv_r4 = np.zeros_like(r)
        inv_r4[1:] = 1.0 / r[1:] ** 4
        h2c = h * h * nl.c
        if backend_name() == "numba":
            return int(_leapfrog_quintic_numba(w, h2c, inv_r4))
        return _leapfrog_quintic_numpy(w, h2c, inv_r4)
    return _leapfrog_custom_numpy(w, h, nl, r)


def duhamel_march(w: np.ndarray, h: float, G: np.ndarray) -> None:
    """March the zero-data trapezoid-Duhamel field for w_tt - w_rr = G.

    Exactly reproduces the global 2-d trapezoid quadrature of the
    d'Alembert source integral: the per-step source weight is the
    two-panel trapezoid of G over [r-h, r+h].  Rows 0 and 1 of ``w``
    must already hold the first two trapezoid values.
    """
    h2 = h * h
    nt = w.shape[0]
    for n in range(1, nt - 1):
        gw = 0.5 * G[n, :-2] + G[n, 1:-1] + 0.5 * G[n, 2:]
        w[n + 1, 1:-1] = w[n, 2:] + w[n, :-2] - w[n - 1, 1:-1] + 0.5 * h2 * gw


# ---------------------------------------------------------------------------
# Goursat march on the lower triangle {0 <= nu <= mu <= T_c} of the
# compactified square, data on the diagonal mu = nu (the t = 0 surface):
# d2v/dmu dnu = S(mu, nu, v),  S = 4 mu^2 nu^2 (mu+nu)^-4 * f~(2 mu nu/(mu+nu), v).


@njit(cache=True)
def _goursat_quintic_numba(v, d1, h, c):  # pragma: no cover - jitted
    N = v.shape[0] - 1
    h2 = h * h
    for j in range(N - 1, -1, -1):
        nu = j * h
        for i in range(j + 1, N + 1):
            mu = i * h
            p = mu + nu
            q = mu * nu
            pref = 4.0 * (q * q) / (p * p * p * p)
            if i == j + 1:
                # triangular half cell resting on the data diagonal
                if j > 0:
                    q0 = nu * nu
                    p0 = nu + nu
                    pref0 = 4.0 * (q0 * q0) / (p0 * p0 * p0 * p0)
                else:
                    pref0 = 0.0
                vd0 = v[j, j]
                v2 = vd0 * vd0
                s0 = pref0 * (c * (v2 * v2 * vd0))
                q1 = mu * mu
                p1 = mu + mu
                pref1 = 4.0 * (q1 * q1) / (p1 * p1 * p1 * p1)
                vd1 = v[i, i]
                v2 = vd1 * vd1
                s1 = pref1 * (c * (v2 * v2 * vd1))
                base = v[j, j] + 0.5 * h * (d1[j] + d1[i]) - (h2 / 6.0) * (s0 + s1)
                coef = h2 / 6.0
            else:
                x_n = v[i, j + 1]
                x_w = v[i - 1, j]
                x_nw = v[i - 1, j + 1]
                mu_w = (i - 1) * h
                nu_n = (j + 1) * h
                q_n = mu * nu_n
                p_n = mu + nu_n
                pref_n = 4.0 * (q_n * q_n) / (p_n * p_n * p_n * p_n)
                q_w = mu_w * nu
                p_w = mu_w + nu
                if p_w > 0.0:
                    pref_w = 4.0 * (q_w * q_w) / (p_w * p_w * p_w * p_w)
                else:
                    pref_w = 0.0
                q_nw = mu_w * nu_n
                p_nw = mu_w + nu_n
                pref_nw = 4.0 * (q_nw * q_nw) / (p_nw * p_nw * p_nw * p_nw)
                v2 = x_n * x_n
                s_n = pref_n * (c * (v2 * v2 * x_n))
                v2 = x_w * x_w
                s_w = pref_w * (c * (v2 * v2 * x_w))
                v2 = x_nw * x_nw
                s_nw = pref_nw * (c * (v2 * v2 * x_nw))
                base = x_n - x_nw + x_w - (h2 / 4.0) * (s_n + s_w + s_nw)
                coef = h2 / 4.0
            x = base
            converged = False
            for _ in range(FP_MAX_ITER):
                x2 = x * x
                xn = base - coef * (pref * (c * (x2 * x2 * x)))
                if abs(xn - x) <= FP_TOL * max(1.0, abs(xn)):
                    x = xn
                    converged = True
                    break
                x = xn
            if not converged:
                return i * (N + 1) + j
            v[i, j] = x
    return -1


def _pref(mu, nu):
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    p = mu + nu
    q = mu * nu
    out = np.zeros_like(p)
    mask = p > 0.0
    out[mask] = 4.0 * (q[mask] * q[mask]) / (p[mask] * p[mask] * p[mask] * p[mask])
    return out


def _masked_fixed_point(base, coef, mu, nu, source_vs):
    """Per-cell fixed point x = base - coef * S(mu, nu, x), frozen on
    convergence so each cell sees the same iterate sequence as a scalar
    loop.  Returns (x, index of first stuck cell or -1)."""
    x = base.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(FP_MAX_ITER):
        xa = x[active]
        xn = base[active] - coef * source_vs(mu[active], nu[active], xa)
        done = np.abs(xn - xa) <= FP_TOL * np.maximum(1.0, np.abs(xn))
        x[active] = xn
        ids = np.flatnonzero(active)
        active[ids[done]] = False
        if not active.any():
            return x, -1
    return x, int(np.flatnonzero(active)[0])


def _goursat_numpy(v, d1, h, source_vs):
    """Anti-diagonal sweeps: cells with i - j = d depend only on d-1, d-2."""
    N = v.shape[0] - 1
    h2 = h * h
    idx = np.arange(N + 1)
    mu_all = idx * h

    # d = 1: triangular half cells along the diagonal
    j = idx[:-1]
    i = j + 1
    diag = v[idx, idx]
    s_diag = source_vs(mu_all, mu_all, diag)
    base = diag[:-1] + 0.5 * h * (d1[:-1] + d1[1:]) - (h2 / 6.0) * (s_diag[:-1] + s_diag[1:])
    x, stuck = _masked_fixed_point(base, h2 / 6.0, i * h, j * h, source_vs)
    if stuck >= 0:
        return int(i[stuck]) * (N + 1) + int(j[stuck])
    v[i, j] = x

    for d in range(2, N + 1):
        j = np.arange(0, N - d + 1)
        i = j + d
        mu_i = i * h
        nu_j = j * h
        x_n = v[i, j + 1]
        x_w = v[i - 1, j]
        x_nw = v[i - 1, j + 1]
        s_n = source_vs(mu_i, nu_j + h, x_n)
        s_w = source_vs(mu_i - h, nu_j, x_w)
        s_nw = source_vs(mu_i - h, nu_j + h, x_nw)
        base = x_n - x_nw + x_w - (h2 / 4.0) * (s_n + s_w + s_nw)
        x, stuck = _masked_fixed_point(base, h2 / 4.0, mu_i, nu_j, source_vs)
        if stuck >= 0:
            return int(i[stuck]) * (N + 1) + int(j[stuck])
        v[i, j] = x
    return -1


def goursat_march(v: np.ndarray, d1: np.ndarray, h: float, nl) -> int:
    """Fill the strict lower triangle of ``v`` (diagonal must hold the data).

    Returns -1 on success or an encoded cell index i*(N+1)+j where the
    implicit corner update failed to converge.
    """
    if nl.kind == "quintic":
        if backend_name() == "numba":
            return int(_goursat_quintic_numba(v, d1, h, nl.c))
        c = nl.c

        def source_vs(mu, nu, val):
            v2 = val * val
            return _pref(mu, nu) * (c * (v2 * v2 * val))

        return _goursat_numpy(v, d1, h, source_vs)

    def source_vs(mu, nu, val):
        mu = np.asarray(mu, dtype=float)
        nu = np.asarray(nu, dtype=float)
        p = np.maximum(mu + nu, 1e-300)
        x = 2.0 * mu * nu / p
        return _pref(mu, nu) * nl.f_tilde(x, val)

    return _goursat_numpy(v, d1, h, source_vs)
