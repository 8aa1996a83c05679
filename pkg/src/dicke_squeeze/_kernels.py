"""Hot loops: Dormand-Prince stepping for small dense affine systems ``y' = M y + g``.

Two interchangeable paths exist.  ``affine_dopri_numba`` is a scalar-loop
kernel compiled with numba; ``affine_dopri_numpy`` drives the generic numpy
stepper with a matrix-vector right-hand side.  Both implement the same
controller and output clipping, so they agree to rounding.
"""

from __future__ import annotations

import numpy as np

from ._accel import njit
from .numkernel import (
    DEFAULT_MAX_STEPS,
    MAX_FACTOR,
    MIN_FACTOR,
    SAFETY,
    IntegrationError,
    dopri5,
)

_OK = 0
_UNDERFLOW = 1
_MAX_STEPS = 2

# Flat copy of the tableau for the compiled kernel.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@njit
def _affine_rhs(m, g, y, out):
    n = y.shape[0]
    for i in range(n):
        acc = g[i]
        for j in range(n):
            acc += m[i, j] * y[j]
        out[i] = acc


@njit
def _err_norm(err, y, y_new, atol, rtol):
    worst = 0.0
    for i in range(y.shape[0]):
        scale = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        r = abs(err[i]) / scale
        if r > worst:
            worst = r
    return worst


@njit
def _affine_dopri_kernel(m, g, y0, times, atol, rtol, max_steps, c, a, e,
                         safety, min_factor, max_factor):
    n = y0.shape[0]
    n_out = times.shape[0]
    out = np.empty((n_out, n), dtype=np.complex128)
    y = y0.copy()
    out[0] = y
    if n_out == 1:
        return out, 0, 0, _OK, times[0]

    k = np.empty((7, n), dtype=np.complex128)
    tmp = np.empty(n, dtype=np.complex128)
    y_new = np.empty(n, dtype=np.complex128)
    err = np.empty(n, dtype=np.complex128)
    t = times[0]
    _affine_rhs(m, g, y, k[0])

    # initial step, same heuristic as the numpy stepper
    span = times[n_out - 1] - t
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 = max(d0, abs(y[i]) / sc)
        d1 = max(d1, abs(k[0, i]) / sc)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    for i in range(n):
        tmp[i] = y[i] + h0 * k[0, i]
    _affine_rhs(m, g, tmp, k[1])
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d2 = max(d2, abs(k[1, i] - k[0, i]) / sc)
    d2 /= h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    h = min(100 * h0, h1, span)

    n_acc = 0
    n_rej = 0
    eps = np.finfo(np.float64).eps
    for idx in range(1, n_out):
        target = times[idx]
        while t < target:
            if n_acc + n_rej >= max_steps:
                return out, n_acc, n_rej, _MAX_STEPS, t
            clipped = False
            h_try = h
            if t + h_try >= target or target - (t + h_try) < 1e-12 * max(1.0, abs(target)):
                h_try = target - t
                clipped = True
            if h_try <= 16 * eps * max(1.0, abs(t)):
                return out, n_acc, n_rej, _UNDERFLOW, t
            for s in range(1, 7):
                for i in range(n):
                    acc = y[i]
                    for j in range(s):
                        if a[s, j] != 0.0:
                            acc += h_try * a[s, j] * k[j, i]
                    tmp[i] = acc
                if s == 6:
                    for i in range(n):
                        y_new[i] = tmp[i]
                _affine_rhs(m, g, tmp, k[s])
            for i in range(n):
                acc = 0.0j
                for j in range(7):
                    if e[j] != 0.0:
                        acc += e[j] * k[j, i]
                err[i] = h_try * acc
            en = _err_norm(err, y, y_new, atol, rtol)
            if en <= 1.0:
                if clipped:
                    t = target
                else:
                    t = t + h_try
                for i in range(n):
                    y[i] = y_new[i]
                    k[0, i] = k[6, i]
                n_acc += 1
                if en == 0.0:
                    factor = max_factor
                else:
                    factor = min(max_factor, safety * en ** (-0.2))
                if clipped:
                    h = max(h, h_try * factor)
                else:
                    h = h_try * factor
            else:
                n_rej += 1
                h = h_try * max(min_factor, safety * en ** (-0.2))
        out[idx] = y
    return out, n_acc, n_rej, _OK, t


def affine_dopri_numba(m, g, y0, times, atol, rtol, max_steps=DEFAULT_MAX_STEPS):
    out, n_acc, n_rej, status, t_fail = _affine_dopri_kernel(
        np.ascontiguousarray(m, dtype=np.complex128),
        np.ascontiguousarray(g, dtype=np.complex128),
        np.ascontiguousarray(y0, dtype=np.complex128),
        np.ascontiguousarray(times, dtype=np.float64),
        float(atol), float(rtol), int(max_steps),
        _C, _A, _E, SAFETY, MIN_FACTOR, MAX_FACTOR,
    )
    if status == _UNDERFLOW:
        raise IntegrationError("step size underflow", float(t_fail))
    if status == _MAX_STEPS:
        raise IntegrationError("maximum number of steps exceeded", float(t_fail))
    return out, int(n_acc), int(n_rej)


def affine_dopri_numpy(m, g, y0, times, atol, rtol, max_steps=DEFAULT_MAX_STEPS):
    out = np.empty((len(times), len(y0)), dtype=complex)

    def rhs(_t, y):
        return m @ y + g

    def store(i, _t, y):
        out[i] = y

    n_acc, n_rej = dopri5(rhs, y0, times, atol, rtol, store, max_steps)
    return out, n_acc, n_rej
