"""Collective-spin and truncated-boson operators on the composite space.

Global ordering is spin first, boson second: composite index ``m * cutoff + k``
for Dicke index ``m`` (0 is ``|J, -J>``) and Fock level ``k``.  Use the lift
helpers on :class:`HilbertSpace` rather than calling ``np.kron`` by hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import lgamma, log

import numpy as np

from .numkernel import expm

DEFAULT_TAIL_TOL = 1e-8
NORM_TOL = 1e-12


class TruncationError(ValueError):
    """Fock cutoff too small for the requested state."""


@dataclass(frozen=True)
class SpinOps:
    """Collective operators in the Dicke basis ``|J, m>``, ``m = -J..J`` ascending."""

    jz: np.ndarray
    jp: np.ndarray
    jm: np.ndarray
    jx: np.ndarray
    jy: np.ndarray

    @property
    def dim(self) -> int:
        return self.jz.shape[0]


@dataclass(frozen=True)
class BosonOps:
    b: np.ndarray
    bd: np.ndarray

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    @property
    def number(self) -> np.ndarray:
        return self.bd @ self.b


def spin_raising_elements(N: int) -> np.ndarray:
    """``<J, m+1| J_+ |J, m>`` for ``m = -J..J-1``."""
    J = N / 2
    m = np.arange(N) - J
    return np.sqrt(J * (J + 1) - m * (m + 1))


def build_spin_ops(N: int) -> SpinOps:
    if int(N) != N or N < 1:
        raise ValueError(f"spin count N must be a positive integer, got {N!r}")
    N = int(N)
    J = N / 2
    m = np.arange(N + 1) - J
    jz = np.diag(m).astype(complex)
    jp = np.diag(spin_raising_elements(N), -1).astype(complex)
    jm = jp.T.copy()
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    return SpinOps(jz, jp, jm, jx, jy)


def build_boson_ops(cutoff: int) -> BosonOps:
    if int(cutoff) != cutoff or cutoff < 2:
        raise ValueError(f"Fock cutoff must be an integer >= 2, got {cutoff!r}")
    b = np.diag(np.sqrt(np.arange(1, int(cutoff))), 1).astype(complex)
    return BosonOps(b, b.T.copy())


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, spin factor first."""
    return np.kron(a, b)


def squeeze_operator(r: float, theta: float, cutoff: int) -> np.ndarray:
    """``S(zeta) = exp[(zeta^* b^2 - zeta b^dagger^2) / 2]`` with ``zeta = r e^{i theta}``.

    The truncated generator is anti-Hermitian, so the result is exactly unitary
    on the retained levels; it agrees with the infinite-dimensional operator
    only on levels whose squeezed image stays clear of the cutoff.
    """
    if r < 0:
        raise ValueError("squeeze amplitude must be non-negative")
    ops = build_boson_ops(cutoff)
    if r == 0:
        return np.eye(cutoff, dtype=complex)
    zeta = r * np.exp(1j * theta)
    gen = (np.conj(zeta) * (ops.b @ ops.b) - zeta * (ops.bd @ ops.bd)) / 2
    return expm(gen)


def squeezed_vacuum_amplitudes(r: float, theta: float, levels: int) -> np.ndarray:
    """Untruncated Fock amplitudes ``c_k`` of ``S(r e^{i theta})|0>`` for ``k < levels``."""
    c = np.zeros(levels, dtype=complex)
    if r == 0:
        c[0] = 1.0
        return c
    k = np.arange(0, levels, 2)
    half = k // 2
    log_mag = (
        -0.5 * np.log(np.cosh(r))
        + half * (np.log(np.tanh(r)) - log(2))
        + 0.5 * np.array([lgamma(x + 1) for x in k])
        - np.array([lgamma(x + 1) for x in half])
    )
    c[k] = (-1.0) ** half * np.exp(1j * theta * half) * np.exp(log_mag)
    return c


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size != int(np.prod(self.dims)):
            raise ValueError(f"amplitude length {amps.size} does not match dims {self.dims}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"state is not normalized: |psi| = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def squeezed_vacuum_tail(r: float, cutoff: int) -> float:
    """Probability weight of ``S(zeta)|0>`` on levels ``>= cutoff``."""
    kept = np.sum(np.abs(squeezed_vacuum_amplitudes(r, 0.0, cutoff)) ** 2)
    return max(0.0, 1.0 - float(kept))


def squeezed_vacuum_state(
    r: float, theta: float, cutoff: int, tail_tol: float = DEFAULT_TAIL_TOL
) -> StateVector:
    """Truncated, renormalized squeezed vacuum.

    Raises :class:`TruncationError` when more than ``tail_tol`` of the
    probability lies above the cutoff.
    """
    if cutoff < 2:
        raise ValueError("Fock cutoff must be >= 2")
    tail = squeezed_vacuum_tail(r, cutoff)
    if tail > tail_tol:
        raise TruncationError(
            f"squeezed vacuum with r={r:.6g} loses {tail:.3e} of its weight above cutoff "
            f"{cutoff} (limit {tail_tol:.1e}); increase the Fock cutoff"
        )
    c = squeezed_vacuum_amplitudes(r, theta, cutoff)
    return StateVector(c / np.linalg.norm(c), (cutoff,))


class HilbertSpace:
    """Dicke ladder of ``N`` spins times ``cutoff`` Fock levels, with cached operators."""

    def __init__(self, N: int, cutoff: int):
        self.spin = build_spin_ops(N)
        self.boson = build_boson_ops(cutoff)
        self.N = int(N)
        self.cutoff = int(cutoff)

    def __repr__(self) -> str:
        return f"HilbertSpace(N={self.N}, cutoff={self.cutoff})"

    @property
    def spin_dim(self) -> int:
        return self.N + 1

    @property
    def dim(self) -> int:
        return self.spin_dim * self.cutoff

    @property
    def shape4(self) -> tuple[int, int, int, int]:
        return (self.spin_dim, self.cutoff, self.spin_dim, self.cutoff)

    def lift_spin(self, op: np.ndarray) -> np.ndarray:
        return tensor(op, np.eye(self.cutoff))

    def lift_boson(self, op: np.ndarray) -> np.ndarray:
        return tensor(np.eye(self.spin_dim), op)

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    @cached_property
    def Jz(self) -> np.ndarray:
        return self.lift_spin(self.spin.jz)

    @cached_property
    def Jp(self) -> np.ndarray:
        return self.lift_spin(self.spin.jp)

    @cached_property
    def Jm(self) -> np.ndarray:
        return self.lift_spin(self.spin.jm)

    @cached_property
    def Jx(self) -> np.ndarray:
        return self.lift_spin(self.spin.jx)

    @cached_property
    def Jy(self) -> np.ndarray:
        return self.lift_spin(self.spin.jy)

    @cached_property
    def b(self) -> np.ndarray:
        return self.lift_boson(self.boson.b)

    @cached_property
    def bd(self) -> np.ndarray:
        return self.lift_boson(self.boson.bd)

    def spin_down(self) -> np.ndarray:
        """``|J, -J>`` as a spin-space vector."""
        v = np.zeros(self.spin_dim, dtype=complex)
        v[0] = 1.0
        return v

    def product_state(self, spin_vec: np.ndarray, boson_vec: np.ndarray) -> StateVector:
        return StateVector(tensor(spin_vec, boson_vec), (self.spin_dim, self.cutoff))
