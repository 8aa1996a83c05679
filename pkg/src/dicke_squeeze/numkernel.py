"""Dense complex linear algebra and adaptive Runge-Kutta integration.

Everything here is a pure function of its arguments.  The integrator is the
Dormand-Prince 5(4) embedded pair with FSAL; steps are shortened so that every
requested output time is hit exactly, which keeps output values at full
step accuracy instead of interpolant accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from ._accel import resolve_backend


class ShapeError(ValueError):
    """Operand has the wrong shape for the requested operation."""


class NotHermitianError(ValueError):
    """Matrix fails the Hermiticity tolerance."""


class IntegrationError(RuntimeError):
    """Adaptive integration could not continue."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t:.17g}")
        self.t = t


HERMITIAN_TOL = 1e-10


def _require_square(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{what} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} has non-finite entries")
    return a


def hermiticity_error(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T)))


def hermitian_eig(h: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.

    Raises
    ------
    ShapeError
        If ``h`` is not square.
    NotHermitianError
        If ``max|h - h^dagger| > tol``.
    """
    h = _require_square(h)
    err = hermiticity_error(h)
    if err > tol:
        raise NotHermitianError(f"matrix is not Hermitian: max|H - H^dagger| = {err:.3e} > {tol:.1e}")
    w, v = np.linalg.eigh(h)
    return w, v


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential.

    Hermitian and anti-Hermitian inputs go through an eigendecomposition, which
    keeps ``expm(anti-Hermitian)`` unitary to rounding.  Everything else uses
    scipy's scaling-and-squaring Pade algorithm.
    """
    a = _require_square(a)
    if a.shape[0] == 0:
        return a.copy()
    scale = max(1.0, float(np.max(np.abs(a))))
    if hermiticity_error(a) <= 1e-14 * scale:
        w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
        return (v * np.exp(w)) @ v.conj().T
    if float(np.max(np.abs(a + a.conj().T))) <= 1e-14 * scale:
        # a = -i h with h Hermitian
        h = 1j * a
        w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
        return (v * np.exp(-1j * w)) @ v.conj().T
    return scipy.linalg.expm(a)


# Dormand-Prince 5(4) tableau.
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# fifth-order weights minus embedded fourth-order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
ERR_EXPONENT = -1.0 / 5.0
DEFAULT_MAX_STEPS = 2_000_000


@dataclass(frozen=True)
class OdeTrajectory:
    """Solution samples ``states[i]`` at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0

    def __len__(self) -> int:
        return len(self.times)


def check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-D sequence")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    if not np.all(np.isfinite(t)):
        raise ValueError("times must be finite")
    return t


def _error_norm(err, y, y_new, atol, rtol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.max(np.abs(err) / scale))


def _initial_step(rhs, t0, y0, f0, atol, rtol, span) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.max(np.abs(y0) / scale))
    d1 = float(np.max(np.abs(f0) / scale))
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = float(np.max(np.abs(f1 - f0) / scale)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100 * h0, h1, span)


def dopri5(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    times,
    atol: float,
    rtol: float,
    on_output: Callable[[int, float, np.ndarray], None],
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[int, int]:
    """Integrate ``y' = rhs(t, y)`` from ``times[0]`` and report every output time.

    ``on_output(i, t, y)`` is called with the state at ``times[i]`` (``y`` must
    not be mutated).  Works for arrays of any shape.  Returns
    ``(accepted_steps, rejected_steps)``.
    """
    if atol <= 0 or rtol < 0:
        raise ValueError("tolerances must be positive")
    t_out = check_times(times)
    y = np.array(y0, dtype=complex)
    t = float(t_out[0])
    on_output(0, t, y)
    if t_out.size == 1:
        return 0, 0

    f = rhs(t, y)
    h = _initial_step(rhs, t, y, f, atol, rtol, float(t_out[-1] - t))
    n_acc = n_rej = 0
    k = [None] * 7
    for i in range(1, t_out.size):
        target = float(t_out[i])
        while t < target:
            if n_acc + n_rej >= max_steps:
                raise IntegrationError("maximum number of steps exceeded", t)
            clipped = False
            h_try = h
            if t + h_try >= target or target - (t + h_try) < 1e-12 * max(1.0, abs(target)):
                h_try = target - t
                clipped = True
            if h_try <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
                raise IntegrationError("step size underflow", t)

            k[0] = f
            for s in range(1, 7):
                acc = y.copy()
                for j, a in enumerate(A[s]):
                    if a != 0.0:
                        acc += (h_try * a) * k[j]
                k[s] = rhs(t + C[s] * h_try, acc)
                if s == 6:
                    y_new = acc
            err = E[0] * k[0]
            for j in range(2, 7):
                err = err + E[j] * k[j]
            err *= h_try
            err_norm = _error_norm(err, y, y_new, atol, rtol)

            if err_norm <= 1.0:
                t = target if clipped else t + h_try
                y = y_new
                f = k[6]
                n_acc += 1
                factor = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, SAFETY * err_norm**ERR_EXPONENT)
                if not clipped:
                    h = h_try * factor
                else:
                    # a shortened step says little about the natural step size
                    h = max(h, h_try * factor)
            else:
                n_rej += 1
                h = h_try * max(MIN_FACTOR, SAFETY * err_norm**ERR_EXPONENT)
        on_output(i, t, y)
    return n_acc, n_rej


def integrate_linear_ode(
    m: np.ndarray,
    gamma: np.ndarray,
    y0: np.ndarray,
    times,
    tol: float = 1e-10,
    rtol: float | None = None,
    backend: str | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> OdeTrajectory:
    """Solve the affine system ``y' = m y + gamma`` with adaptive Dormand-Prince.

    ``tol`` is the absolute tolerance and, unless ``rtol`` is given, also the
    relative one.  ``backend`` selects the compiled kernel (``"numba"``) or the
    numpy stepper (``"numpy"``); the default follows the environment flag.
    """
    from . import _kernels

    m = _require_square(np.asarray(m, dtype=complex), "M")
    n = m.shape[0]
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    y0 = np.asarray(y0, dtype=complex).reshape(-1)
    if gamma.size != n or y0.size != n:
        raise ShapeError(f"dimension mismatch: M is {n}x{n}, Gamma has {gamma.size}, y0 has {y0.size}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rtol = tol if rtol is None else rtol
    t = check_times(times)
    backend = resolve_backend(backend)
    if backend == "numba":
        states, n_acc, n_rej = _kernels.affine_dopri_numba(m, gamma, y0, t, tol, rtol, max_steps)
    else:
        states, n_acc, n_rej = _kernels.affine_dopri_numpy(m, gamma, y0, t, tol, rtol, max_steps)
    return OdeTrajectory(t, states, n_acc, n_rej)


def integrate_matrix_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    rho0: np.ndarray,
    times,
    tol: float = 1e-9,
    rtol: float | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> OdeTrajectory:
    """Integrate a matrix-valued ODE ``rho' = rhs(t, rho)``; all snapshots are kept."""
    rho0 = np.asarray(rho0, dtype=complex)
    t = check_times(times)
    if tol <= 0:
        raise ValueError("tol must be positive")
    out = np.empty((t.size,) + rho0.shape, dtype=complex)

    def store(i, _t, y):
        out[i] = y

    n_acc, n_rej = dopri5(rhs, rho0, t, tol, tol if rtol is None else rtol, store, max_steps)
    return OdeTrajectory(t, out, n_acc, n_rej)
