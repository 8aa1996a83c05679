"""Physical parameters, squeezing-frame quantities and the model Hamiltonians.

Frequencies are in units of the spin-phonon coupling ``G`` and times are the
dimensionless ``G t``.  The cavity photon number ``n`` is a fixed integer; the
photon mode has no Hilbert space of its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import HilbertSpace, build_boson_ops, squeezed_vacuum_tail
from .numkernel import expm

SQUEEZE_ANGLE = math.pi
HAMILTONIAN_VARIANTS = ("full", "effective", "rwa")
RWA_ENHANCEMENT_LIMIT = 0.1
RWA_DETUNING_LIMIT = 0.05


@dataclass(frozen=True)
class SystemParams:
    """Physical inputs.  Defaults are the parameter set of the reference figures.

    ``r_e`` / ``phi_e`` left as ``None`` mean the phase-matched reservoir
    ``r_e = r_n``, ``phi_e = pi``.  ``omega_a`` only shifts a constant once
    ``n`` is fixed and is not used by the dynamics.
    """

    N: int = 100
    n: int = 1
    Omega: float = 200.0
    omega_b: float = 2300.0
    g_over_omega_b: float = 0.2481
    G: float = 1.0
    kappa: float = 0.01
    gamma: float = 1.0
    r_e: float | None = None
    phi_e: float | None = None
    omega_a: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"photon number n must be a non-negative integer, got {self.n!r}")
        if self.omega_b <= 0:
            raise ValueError("omega_b must be positive")
        if self.g_over_omega_b < 0:
            raise ValueError("g must be non-negative")
        for name in ("kappa", "gamma", "G"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.r_e is not None and self.r_e < 0:
            raise ValueError("r_e must be non-negative")
        if 4 * self.n * self.g_over_omega_b >= 1:
            raise ValueError(
                f"4ng >= omega_b (4*{self.n}*{self.g_over_omega_b} = "
                f"{4 * self.n * self.g_over_omega_b:.4g}): squeezing transformation undefined"
            )

    @property
    def g(self) -> float:
        return self.g_over_omega_b * self.omega_b


@dataclass(frozen=True)
class DerivedParams:
    r_n: float
    theta: float
    omega_n: float
    G_n: float
    r_e: float
    phi_e: float
    R: float
    N_s: float
    M_s: complex


def squeeze_amplitude(n: int, g_over_omega_b: float) -> float:
    x = 4 * n * g_over_omega_b
    if x >= 1:
        raise ValueError("4ng >= omega_b: squeezing transformation undefined")
    return -0.25 * math.log1p(-x)


def reservoir_noise(r_n: float, r_e: float, phi_e: float) -> tuple[float, complex]:
    """Effective thermal noise ``N_s`` and two-phonon correlation ``M_s`` in the squeezed frame."""
    ch_n, sh_n = math.cosh(r_n), math.sinh(r_n)
    ch_e, sh_e = math.cosh(r_e), math.sinh(r_e)
    N_s = (
        sh_e**2 * ch_n**2
        + ch_e**2 * sh_n**2
        + 0.5 * math.sinh(2 * r_n) * math.sinh(2 * r_e) * math.cos(phi_e)
    )
    M_s = (sh_n * ch_e + np.exp(-1j * phi_e) * ch_n * sh_e) * (
        ch_n * ch_e + np.exp(1j * phi_e) * sh_n * sh_e
    )
    return float(N_s), complex(M_s)


def derive_params(p: SystemParams) -> DerivedParams:
    r_n = squeeze_amplitude(p.n, p.g_over_omega_b)
    r_e = r_n if p.r_e is None else float(p.r_e)
    phi_e = SQUEEZE_ANGLE if p.phi_e is None else float(p.phi_e)
    N_s, M_s = reservoir_noise(r_n, r_e, phi_e)
    return DerivedParams(
        r_n=r_n,
        theta=SQUEEZE_ANGLE,
        omega_n=math.exp(-2 * r_n) * p.omega_b,
        G_n=math.exp(r_n) * p.G,
        r_e=r_e,
        phi_e=phi_e,
        R=r_n - r_e,
        N_s=N_s,
        M_s=M_s,
    )


def build_hamiltonian(p: SystemParams, d: DerivedParams, space: HilbertSpace, variant: str) -> np.ndarray:
    """Dense Hamiltonian on ``space``.

    ``full``: photon-number-fixed Hamiltonian before the squeezing transformation.
    ``effective``: Dicke form with ``omega_n`` and ``G_n``.
    ``rwa``: Tavis-Cummings form of the effective Hamiltonian.
    """
    if variant not in HAMILTONIAN_VARIANTS:
        raise ValueError(f"unknown Hamiltonian variant {variant!r}; expected one of {HAMILTONIAN_VARIANTS}")
    if space.N != p.N:
        raise ValueError(f"space has N={space.N} but params have N={p.N}")
    s, b, bd = space, space.b, space.bd
    if variant == "full":
        gn = p.g * p.n
        h = (
            p.Omega * s.Jz
            + (p.omega_b - 2 * gn) * (bd @ b)
            + p.G * (b + bd) @ s.Jx
            - gn * (b @ b + bd @ bd)
        )
    elif variant == "effective":
        h = p.Omega * s.Jz + d.omega_n * (bd @ b) + d.G_n * (b + bd) @ s.Jx
    else:
        h = p.Omega * s.Jz + d.omega_n * (bd @ b) + (d.G_n / 2) * (b @ s.Jp + bd @ s.Jm)
    # exact Hermitian symmetrization; entries are real-valued combinations already
    return 0.5 * (h + h.conj().T)


@dataclass(frozen=True)
class DiagonalizationReport:
    """Quadratic-form coefficients of ``S^dagger H S`` on the lowest Fock levels.

    ``residual`` is the larger magnitude of the ``b^2`` / ``b^dagger^2``
    coefficients; ``fit_error`` is the largest entrywise deviation of the
    transformed block from its fitted quadratic form.
    """

    residual: float
    number_coefficient: float
    omega_n: float
    constant: float
    coupling_ratio: float
    fit_error: float
    levels: int
    work_cutoff: int

    @property
    def number_relative_error(self) -> float:
        return abs(self.number_coefficient / self.omega_n - 1)


def _fit_quadratic(block: np.ndarray, basis: list[np.ndarray]) -> tuple[np.ndarray, float]:
    # orthonormalize the vectorized basis, project, map back to the original basis
    mat = np.stack([m.reshape(-1) for m in basis], axis=1)
    q, r = np.linalg.qr(mat)
    coef = np.linalg.solve(r, q.conj().T @ block.reshape(-1))
    fit = (mat @ coef).reshape(block.shape)
    return coef, float(np.max(np.abs(block - fit)))


def default_work_cutoff(r_n: float, levels: int) -> int:
    # the squeezed image of level k spreads to roughly k e^{2r}; pad generously
    return int(math.ceil(1.4 * math.exp(2 * r_n) * (levels + 10))) + 40


def verify_diagonalization(
    p: SystemParams,
    d: DerivedParams | None = None,
    cutoff: int = 120,
    work_cutoff: int | None = None,
) -> DiagonalizationReport:
    """Numerically transform the phonon part of the full Hamiltonian by ``S(zeta)``.

    The transformed operator is examined on the lowest ``cutoff // 2`` Fock
    levels.  ``S`` and ``H`` are built on ``work_cutoff`` levels (default sized
    from ``r_n``) so the examined block is free of truncation reflections.
    """
    d = derive_params(p) if d is None else d
    if cutoff < 100:
        raise ValueError("cutoff must be >= 100 for the diagonalization check")
    if d.r_n > 1.3:
        raise ValueError(f"r_n = {d.r_n:.4g} > 1.3: cutoff too small for the r_n tail")
    levels = cutoff // 2
    if work_cutoff is None:
        work_cutoff = cutoff if d.r_n == 0 else max(cutoff, default_work_cutoff(d.r_n, levels))
    if work_cutoff < cutoff:
        raise ValueError("work_cutoff must be at least cutoff")
    if squeezed_vacuum_tail(d.r_n, work_cutoff) > 1e-12:
        raise ValueError(f"work_cutoff {work_cutoff} too small for the r_n tail")

    ops = build_boson_ops(work_cutoff)
    b, bd = ops.b, ops.bd
    gn = p.g * p.n
    h = (p.omega_b - 2 * gn) * (bd @ b) - gn * (b @ b + bd @ bd)
    zeta = d.r_n * np.exp(1j * d.theta)
    S = expm((np.conj(zeta) * (b @ b) - zeta * (bd @ bd)) / 2) if d.r_n > 0 else np.eye(work_cutoff)
    Sd = S.conj().T
    lo = slice(0, levels)
    h_t = (Sd @ h @ S)[lo, lo]
    basis = [(bd @ b)[lo, lo], (b @ b)[lo, lo], (bd @ bd)[lo, lo], np.eye(levels)]
    coef, fit_error = _fit_quadratic(h_t, basis)

    # the linear coupling (b + b^dagger) must come out scaled by e^{r_n}
    x_t = (Sd @ (b + bd) @ S)[lo, lo]
    x = (b + bd)[lo, lo]
    coupling_ratio = float(np.real(np.vdot(x, x_t) / np.vdot(x, x)))

    return DiagonalizationReport(
        residual=float(max(abs(coef[1]), abs(coef[2]))),
        number_coefficient=float(coef[0].real),
        omega_n=d.omega_n,
        constant=float(coef[3].real),
        coupling_ratio=coupling_ratio,
        fit_error=fit_error,
        levels=levels,
        work_cutoff=work_cutoff,
    )


@dataclass(frozen=True)
class RwaReport:
    enhancement_ratio: float
    detuning: float
    enhancement_ok: bool
    detuning_ok: bool

    @property
    def ok(self) -> bool:
        return self.enhancement_ok and self.detuning_ok


def check_rwa_regime(p: SystemParams, d: DerivedParams | None = None) -> RwaReport:
    """``exp(3 r_n) G / omega_b`` and ``|omega_n - Omega| / omega_n`` against their warn levels."""
    d = derive_params(p) if d is None else d
    ratio = math.exp(3 * d.r_n) * p.G / p.omega_b
    detuning = abs(d.omega_n - p.Omega) / d.omega_n
    return RwaReport(ratio, detuning, ratio <= RWA_ENHANCEMENT_LIMIT, detuning <= RWA_DETUNING_LIMIT)
