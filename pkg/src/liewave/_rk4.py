"""Compiled classical RK4 kernels."""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def fundamental_solutions(a_half, h, nus, store_idx):
    """RK4 for ``v'' + a(t) nu^2 v = 0`` from the data ``(1, 0)`` and ``(0, 1)``.

    ``a_half[j] = a(j h / 2)``. Returns ``out[k, i] = [[y1, y2], [y1', y2']]`` at
    step ``store_idx[k]`` for ``nu = nus[i]``.
    """
    n_steps = (a_half.shape[0] - 1) // 2
    out = np.zeros((store_idx.shape[0], nus.shape[0], 2, 2))
    for i in range(nus.shape[0]):
        nu2 = nus[i] * nus[i]
        # columns: (v, w) for the two fundamental solutions
        v1 = 1.0
        w1 = 0.0
        v2 = 0.0
        w2 = 1.0
        k = 0
        while k < store_idx.shape[0] and store_idx[k] == 0:
            out[k, i, 0, 0] = v1
            out[k, i, 1, 0] = w1
            out[k, i, 0, 1] = v2
            out[k, i, 1, 1] = w2
            k += 1
        for n in range(n_steps):
            c0 = -a_half[2 * n] * nu2
            c1 = -a_half[2 * n + 1] * nu2
            c2 = -a_half[2 * n + 2] * nu2
            # first solution
            kv1 = w1
            kw1 = c0 * v1
            kv2 = w1 + 0.5 * h * kw1
            kw2 = c1 * (v1 + 0.5 * h * kv1)
            kv3 = w1 + 0.5 * h * kw2
            kw3 = c1 * (v1 + 0.5 * h * kv2)
            kv4 = w1 + h * kw3
            kw4 = c2 * (v1 + h * kv3)
            v1n = v1 + h / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
            w1n = w1 + h / 6.0 * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4)
            # second solution
            kv1 = w2
            kw1 = c0 * v2
            kv2 = w2 + 0.5 * h * kw1
            kw2 = c1 * (v2 + 0.5 * h * kv1)
            kv3 = w2 + 0.5 * h * kw2
            kw3 = c1 * (v2 + 0.5 * h * kv2)
            kv4 = w2 + h * kw3
            kw4 = c2 * (v2 + h * kv3)
            v2n = v2 + h / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
            w2n = w2 + h / 6.0 * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4)
            v1, w1, v2, w2 = v1n, w1n, v2n, w2n
            while k < store_idx.shape[0] and store_idx[k] == n + 1:
                out[k, i, 0, 0] = v1
                out[k, i, 1, 0] = w1
                out[k, i, 0, 1] = v2
                out[k, i, 1, 1] = w2
                k += 1
    return out


@njit(cache=True, nogil=True)
def _matvec(m, x0, x1):
    return m[0, 0] * x0 + m[0, 1] * x1, m[1, 0] * x0 + m[1, 1] * x1


@njit(cache=True, nogil=True)
def linear_system(m_half, h, w0):
    """RK4 for ``W' = M(t) W`` with ``M`` sampled at half steps, renormalising every step.

    Returns the unit direction ``W / |W|`` at every step, ``log |W|`` and the
    exact growth rate ``2 Re(M W, W) / |W|^2``.
    """
    n_steps = (m_half.shape[0] - 1) // 2
    direction = np.zeros((n_steps + 1, 2), dtype=np.complex128)
    log_norm = np.zeros(n_steps + 1)
    rate = np.zeros(n_steps + 1)
    x0 = w0[0]
    x1 = w0[1]
    nrm = math.sqrt(abs(x0) ** 2 + abs(x1) ** 2)
    x0 /= nrm
    x1 /= nrm
    log_norm[0] = math.log(nrm)
    for n in range(n_steps):
        ma = m_half[2 * n]
        mb = m_half[2 * n + 1]
        mc = m_half[2 * n + 2]
        direction[n, 0] = x0
        direction[n, 1] = x1
        y0, y1 = _matvec(ma, x0, x1)
        rate[n] = 2.0 * (x0.conjugate() * y0 + x1.conjugate() * y1).real
        k10, k11 = y0, y1
        k20, k21 = _matvec(mb, x0 + 0.5 * h * k10, x1 + 0.5 * h * k11)
        k30, k31 = _matvec(mb, x0 + 0.5 * h * k20, x1 + 0.5 * h * k21)
        k40, k41 = _matvec(mc, x0 + h * k30, x1 + h * k31)
        x0 = x0 + h / 6.0 * (k10 + 2.0 * k20 + 2.0 * k30 + k40)
        x1 = x1 + h / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        nrm = math.sqrt(abs(x0) ** 2 + abs(x1) ** 2)
        x0 /= nrm
        x1 /= nrm
        log_norm[n + 1] = log_norm[n] + math.log(nrm)
    direction[n_steps, 0] = x0
    direction[n_steps, 1] = x1
    mz = m_half[2 * n_steps]
    y0, y1 = _matvec(mz, x0, x1)
    rate[n_steps] = 2.0 * (x0.conjugate() * y0 + x1.conjugate() * y1).real
    return direction, log_norm, rate
