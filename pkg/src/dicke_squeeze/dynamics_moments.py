"""Second-order moment equations ``dA/dt = M A + Gamma`` in the frozen-spin limit.

The spin is treated as pinned to ``<J_z> = -N/2``, which closes the hierarchy
at second order.  Moment order (0-based index in brackets)::

    [0] <J+J->  [1] <J+J+>  [2] <J-J+>  [3] <J-J->
    [4] <J+b>   [5] <J+b+>  [6] <J-b>   [7] <J-b+>
    [8] <bb>    [9] <b+b>   [10] <b+b+>
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DerivedParams, SystemParams
from .numkernel import OdeTrajectory, integrate_linear_ode

MOMENT_LABELS = (
    "J+J-", "J+J+", "J-J+", "J-J-",
    "J+b", "J+bd", "J-b", "J-bd",
    "bb", "bdb", "bdbd",
)
N_MOMENTS = len(MOMENT_LABELS)
IDX = {name: i for i, name in enumerate(MOMENT_LABELS)}

# (i, j) with A[j] == conj(A[i]); entries 0, 2 and 9 are real
CONJUGATE_PAIRS = ((1, 3), (4, 7), (5, 6), (8, 10))
REAL_ENTRIES = (0, 2, 9)


class ConjugacyError(RuntimeError):
    """Moment trajectory lost its conjugate-pair structure."""


@dataclass(frozen=True)
class MomentSystem:
    """Generator ``M``, forcing ``Gamma`` and the diagonal shorthands ``Lambda_1..8``."""

    M: np.ndarray
    Gamma: np.ndarray
    Lambda: tuple
    N: int
    rwa: bool


def diagonal_shorthands(N, Omega, omega, kappa, gamma):
    """``Lambda_1 .. Lambda_8`` as a tuple (index 0 holds ``Lambda_1``)."""
    half = N * kappa / 2 + gamma / 2
    return (
        2j * Omega - kappa * N,
        -2j * Omega - kappa * N,
        1j * (Omega - omega) - half,
        1j * (Omega + omega) - half,
        -1j * (Omega + omega) - half,
        -1j * (Omega - omega) - half,
        -2j * omega - gamma,
        2j * omega - gamma,
    )


def moment_system(N, Omega, omega, coupling, kappa, gamma, N_s, M_s, rwa=True) -> MomentSystem:
    """Assemble ``(M, Gamma)`` for explicit frequencies, coupling and reservoir numbers.

    ``omega`` is the phonon frequency and ``coupling`` the spin-phonon coupling
    in the ``(b + b^dagger) J_x`` normalization.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if kappa < 0 or gamma < 0:
        raise ValueError("rates must be non-negative")
    L = diagonal_shorthands(N, Omega, omega, kappa, gamma)
    G = coupling
    gN = 1j * G * N
    g2 = 1j * G / 2
    gN2 = gN / 2

    M = np.zeros((N_MOMENTS, N_MOMENTS), dtype=complex)

    def put(row, entries):
        # 1-based indices, as in the printed tables
        for col, val in entries.items():
            M[row - 1, col - 1] += val

    if rwa:
        put(1, {1: -kappa * N, 5: -gN2, 8: gN2})
        put(2, {2: L[0], 6: gN})
        put(3, {1: -kappa * N, 5: -gN2, 8: gN2})
        put(4, {4: L[1], 7: -gN})
        put(5, {1: -g2, 5: L[2], 10: gN2})
        put(6, {2: g2, 6: L[3], 11: gN2})
        put(7, {4: -g2, 7: L[4], 9: -gN2})
        put(8, {1: g2, 8: L[5], 10: -gN2})
        put(9, {7: -1j * G, 9: L[6]})
        put(10, {5: g2, 8: -g2, 10: -gamma})
        put(11, {6: 1j * G, 11: L[7]})
    else:
        put(1, {1: -kappa * N, 5: -gN2, 6: -gN2, 7: gN2, 8: gN2})
        put(2, {2: L[0], 5: gN, 6: gN})
        put(3, {1: -kappa * N, 5: -gN2, 6: -gN2, 7: gN2, 8: gN2})
        put(4, {4: L[1], 7: -gN, 8: -gN})
        put(5, {1: -g2, 2: -g2, 5: L[2], 9: gN2, 10: gN2})
        put(6, {2: g2, 3: g2, 6: L[3], 10: gN2, 11: gN2})
        put(7, {3: -g2, 4: -g2, 7: L[4], 9: -gN2, 10: -gN2})
        put(8, {1: g2, 4: g2, 8: L[5], 10: -gN2, 11: -gN2})
        put(9, {5: -1j * G, 7: -1j * G, 9: L[6]})
        put(10, {5: g2, 6: -g2, 7: g2, 8: -g2, 10: -gamma})
        put(11, {6: 1j * G, 8: 1j * G, 11: L[7]})

    Gamma = np.zeros(N_MOMENTS, dtype=complex)
    Gamma[8] = gamma * np.conj(M_s)
    Gamma[9] = gamma * N_s
    Gamma[10] = gamma * M_s
    return MomentSystem(M, Gamma, L, int(N), bool(rwa))


def assemble_moment_system(p: SystemParams, d: DerivedParams, rwa: bool = True) -> MomentSystem:
    """Moment system of the squeezed-frame model (``omega_n``, ``G_n``, ``N_s``, ``M_s``)."""
    return moment_system(p.N, p.Omega, d.omega_n, d.G_n, p.kappa, p.gamma, d.N_s, d.M_s, rwa)


def squeezed_vacuum_moments(N: int, r: float) -> np.ndarray:
    c, s = np.cosh(r), np.sinh(r)
    A = np.zeros(N_MOMENTS, dtype=complex)
    A[IDX["J-J+"]] = N
    A[IDX["bb"]] = -c * s
    A[IDX["bdb"]] = s * s
    A[IDX["bdbd"]] = -c * s
    return A


def initial_moments(p: SystemParams, d: DerivedParams) -> np.ndarray:
    """All spins down, phonon in the squeezed vacuum with ``<bb> = -cosh r sinh r``."""
    return squeezed_vacuum_moments(p.N, d.r_n)


@dataclass(frozen=True)
class MomentTrajectory:
    times: np.ndarray
    moments: np.ndarray  # shape (len(times), 11)
    N: int
    rwa: bool
    conjugacy_error: float
    n_steps: int = 0

    def __len__(self) -> int:
        return len(self.times)

    def column(self, label: str) -> np.ndarray:
        return self.moments[:, IDX[label]]


def conjugacy_error(moments: np.ndarray) -> float:
    a = np.atleast_2d(moments)
    err = 0.0
    for i, j in CONJUGATE_PAIRS:
        err = max(err, float(np.max(np.abs(a[:, j] - np.conj(a[:, i])))))
    for i in REAL_ENTRIES:
        err = max(err, float(np.max(np.abs(a[:, i].imag))))
    return err


def evolve_moments(
    system: MomentSystem,
    A0: np.ndarray,
    times,
    tol: float = 1e-10,
    rtol: float | None = None,
    backend: str | None = None,
    check: bool = True,
) -> MomentTrajectory:
    """Integrate the moment flow and verify the conjugate-pair structure.

    The structure check uses a bound of ``10 * tol`` relative to the largest
    moment magnitude; a violation raises :class:`ConjugacyError`.
    """
    A0 = np.asarray(A0, dtype=complex)
    if A0.shape != (N_MOMENTS,):
        raise ValueError(f"initial moment vector must have {N_MOMENTS} entries")
    sol: OdeTrajectory = integrate_linear_ode(system.M, system.Gamma, A0, times, tol, rtol, backend)
    err = conjugacy_error(sol.states)
    if check:
        scale = max(1.0, float(np.max(np.abs(sol.states))))
        if err > 10 * tol * scale:
            raise ConjugacyError(f"conjugate-pair drift {err:.3e} exceeds {10 * tol * scale:.3e}")
    return MomentTrajectory(sol.times, sol.states, system.N, system.rwa, err, sol.n_steps)
