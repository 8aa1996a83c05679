"""Exact master-equation dynamics on the Dicke-ladder x Fock space.

The spin lives in the symmetric ladder ``|J, m>`` only.  Collective decay
``J_-`` never leaves that ladder and the initial state lies in it, so the
``(N + 1)``-dimensional representation is exact for this model.

Integration runs in the interaction picture of ``H0 = Omega J_z + omega b^dag b``
with the density matrix stored as a 4-index array ``R[m, k, m', k']``.  Every
operator that appears is a product of one spin and one boson operator, each
with a single nonzero diagonal, so all products reduce to shifted slices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics_moments import MOMENT_LABELS, N_MOMENTS
from .hilbert import (
    DEFAULT_TAIL_TOL,
    HilbertSpace,
    build_boson_ops,
    build_spin_ops,
    squeezed_vacuum_state,
)
from .model import DerivedParams, SystemParams
from .numkernel import DEFAULT_MAX_STEPS, check_times, dopri5, hermiticity_error

MAX_EXACT_N = 24
MAX_EXACT_DIM = 2600
VARIANTS = ("effective", "rwa")
POSITIVITY_ABORT = -1e-6
DEFAULT_SNAPSHOTS = 12


class PositivityError(RuntimeError):
    """Density matrix acquired a significantly negative eigenvalue."""


@dataclass(frozen=True)
class DensityOperator:
    """Density matrix on the composite space, in the squeezed frame."""

    matrix: np.ndarray
    dims: tuple[int, int]
    frame: str = "squeezed"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.dims[0] * self.dims[1]
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        object.__setattr__(self, "matrix", m)

    def validate(self, herm_tol=1e-10, trace_tol=1e-10, eig_tol=-1e-8) -> None:
        if hermiticity_error(self.matrix) > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(self.matrix) - 1) > trace_tol:
            raise ValueError("density matrix is not normalized")
        if np.linalg.eigvalsh(self.matrix).min() < eig_tol:
            raise ValueError("density matrix is not positive")

    @property
    def tensor(self) -> np.ndarray:
        s, c = self.dims
        return self.matrix.reshape(s, c, s, c)

    def spin_state(self) -> np.ndarray:
        return np.einsum("akbk->ab", self.tensor)

    def boson_state(self) -> np.ndarray:
        return np.einsum("mamb->ab", self.tensor)

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.sum(op * self.matrix.T))


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian variant, frequencies, coupling and reservoir numbers.

    ``coupling`` multiplies ``(b + b^dag) J_x``; the RWA variant keeps
    ``(coupling / 2)(b J_+ + b^dag J_-)``.
    """

    variant: str
    N: int
    Omega: float
    omega: float
    coupling: float
    kappa: float
    gamma: float
    N_s: float = 0.0
    M_s: complex = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.kappa < 0 or self.gamma < 0:
            raise ValueError("rates must be non-negative")
        if self.N_s < -1e-12:
            raise ValueError("N_s must be non-negative")
        if abs(self.M_s) ** 2 > self.N_s * (self.N_s + 1) + 1e-9 * max(1.0, self.N_s**2):
            raise ValueError("|M_s|^2 > N_s (N_s + 1): reservoir is unphysical")

    @classmethod
    def from_params(cls, p: SystemParams, d: DerivedParams, rwa: bool = True, closed: bool = False):
        return cls(
            variant="rwa" if rwa else "effective",
            N=p.N,
            Omega=p.Omega,
            omega=d.omega_n,
            coupling=d.G_n,
            kappa=0.0 if closed else p.kappa,
            gamma=0.0 if closed else p.gamma,
            N_s=max(0.0, d.N_s),
            M_s=d.M_s,
        )

    @property
    def closed(self) -> bool:
        return self.kappa == 0 and self.gamma == 0


def hamiltonian(m: LindbladModel, space: HilbertSpace) -> np.ndarray:
    h = m.Omega * space.Jz + m.omega * (space.bd @ space.b)
    if m.variant == "rwa":
        h = h + (m.coupling / 2) * (space.b @ space.Jp + space.bd @ space.Jm)
    else:
        h = h + m.coupling * (space.b + space.bd) @ space.Jx
    return h


def lindblad_rhs(rho: np.ndarray, m: LindbladModel, space: HilbertSpace) -> np.ndarray:
    """Dense, term-by-term master-equation right-hand side (reference implementation)."""
    rho = np.asarray(rho, dtype=complex)
    h = hamiltonian(m, space)
    Jp, Jm, b, bd = space.Jp, space.Jm, space.b, space.bd
    out = 1j * (rho @ h - h @ rho)
    out += (m.kappa / 2) * (2 * Jm @ rho @ Jp - Jp @ Jm @ rho - rho @ Jp @ Jm)
    g2 = m.gamma / 2
    out += g2 * m.N_s * (2 * bd @ rho @ b - b @ bd @ rho - rho @ b @ bd)
    out += g2 * (m.N_s + 1) * (2 * b @ rho @ bd - bd @ b @ rho - rho @ bd @ b)
    out -= g2 * np.conj(m.M_s) * (2 * bd @ rho @ bd - bd @ bd @ rho - rho @ bd @ bd)
    out -= g2 * m.M_s * (2 * b @ rho @ b - b @ b @ rho - rho @ b @ b)
    return out


# --- structured interaction-picture right-hand side -------------------------

def _slices(n: int, k: int) -> tuple[slice, slice]:
    """``(dst, src)`` index ranges with ``src = dst + k`` inside ``[0, n)``."""
    if k >= 0:
        return slice(0, n - k), slice(k, n)
    return slice(-k, n), slice(0, n + k)


@dataclass(frozen=True)
class _Diag:
    """Matrix with one nonzero diagonal: ``A[i, i + k] = v[i']`` over valid rows."""

    k: int
    v: np.ndarray


def _diag_of(mat: np.ndarray, k: int) -> _Diag:
    return _Diag(k, np.diagonal(mat, k).copy())


class _Term:
    """``spin (x) boson`` product with a single-diagonal factor on each side."""

    def __init__(self, s: _Diag, b: _Diag, S: int, C: int):
        self.sk, self.bk = s.k, b.k
        self.s_dst, self.s_src = _slices(S, s.k)
        self.b_dst, self.b_src = _slices(C, b.k)
        self.w = np.outer(s.v, b.v)[:, :, None, None]
        self.wr = np.outer(s.v, b.v)[None, None, :, :]
        # right multiplication reads columns j - k
        self.sr_dst, self.sr_src = _slices(S, -s.k)
        self.br_dst, self.br_src = _slices(C, -b.k)

    def left(self, R, coef, out):
        out[self.s_dst, self.b_dst] += coef * self.w * R[self.s_src, self.b_src]

    def right(self, R, coef, out):
        out[:, :, self.sr_dst, self.br_dst] += coef * self.wr * R[:, :, self.sr_src, self.br_src]

    def sandwich(self, R, other: "_Term", coef, out):
        # self . R . other
        tmp = np.zeros_like(R)
        self.left(R, 1.0, tmp)
        other.right(tmp, coef, out)


def _dagger(R: np.ndarray) -> np.ndarray:
    return R.transpose(2, 3, 0, 1).conj()


class StructuredRhs:
    """Interaction-picture right-hand side ``d R / dt`` for a :class:`LindbladModel`."""

    def __init__(self, m: LindbladModel, cutoff: int):
        self.model = m
        S, C = m.N + 1, int(cutoff)
        self.shape = (S, C, S, C)
        spin = build_spin_ops(m.N)
        bos = build_boson_ops(C)
        eye_s = _Diag(0, np.ones(S))
        eye_b = _Diag(0, np.ones(C))
        jp, jm = _diag_of(spin.jp, -1), _diag_of(spin.jm, 1)
        b, bd = _diag_of(bos.b, 1), _diag_of(bos.bd, -1)

        self.t_jpb = _Term(jp, b, S, C)
        self.t_jmbd = _Term(jm, bd, S, C)
        self.t_jpbd = _Term(jp, bd, S, C)
        self.t_jmb = _Term(jm, b, S, C)
        self.t_jm = _Term(jm, eye_b, S, C)
        self.t_jp = _Term(jp, eye_b, S, C)
        self.t_b = _Term(eye_s, b, S, C)
        self.t_bd = _Term(eye_s, bd, S, C)
        self.t_bb = _Term(eye_s, _diag_of(bos.b @ bos.b, 2), S, C)

        # diagonal generator K of the anticommutator part
        jpjm = np.diagonal(spin.jp @ spin.jm).real
        # truncated b b^dag has a zero in the top level; keep it so the trace is conserved
        bbd = np.diagonal(bos.b @ bos.bd).real
        bdb = np.diagonal(bos.bd @ bos.b).real
        kdiag = (
            m.kappa * jpjm[:, None]
            + m.gamma * m.N_s * bbd[None, :]
            + m.gamma * (m.N_s + 1) * bdb[None, :]
        )
        self.k_half = (0.5 * kdiag)[:, :, None, None]
        self.has_k = bool(np.any(kdiag))
        self.n_evals = 0

    def __call__(self, t: float, R: np.ndarray) -> np.ndarray:
        m = self.model
        self.n_evals += 1
        Z = np.zeros_like(R)
        g = m.coupling / 2
        if g != 0:
            d1 = np.exp(1j * (m.Omega - m.omega) * t)
            self.t_jpb.left(R, -1j * g * d1, Z)
            self.t_jmbd.left(R, -1j * g * np.conj(d1), Z)
            if m.variant == "effective":
                d2 = np.exp(1j * (m.Omega + m.omega) * t)
                self.t_jpbd.left(R, -1j * g * d2, Z)
                self.t_jmb.left(R, -1j * g * np.conj(d2), Z)
        if self.has_k:
            Z -= self.k_half * R
        if m.kappa:
            self.t_jm.sandwich(R, self.t_jp, 0.5 * m.kappa, Z)
        if m.gamma:
            if m.N_s:
                self.t_bd.sandwich(R, self.t_b, 0.5 * m.gamma * m.N_s, Z)
            self.t_b.sandwich(R, self.t_bd, 0.5 * m.gamma * (m.N_s + 1), Z)
            if m.M_s:
                c = -0.5 * m.gamma * m.M_s * np.exp(-2j * m.omega * t)
                self.t_b.sandwich(R, self.t_b, 2 * c, Z)
                self.t_bb.left(R, -c, Z)
                self.t_bb.right(R, -c, Z)
        return Z + _dagger(Z)


def frame_phases(m: LindbladModel, cutoff: int, t: float) -> np.ndarray:
    """``exp(-i E t)`` for ``E = Omega m_z + omega k`` on the composite index (spin, boson)."""
    mz = np.arange(m.N + 1) - m.N / 2
    e = m.Omega * mz[:, None] + m.omega * np.arange(cutoff)[None, :]
    return np.exp(-1j * e * t)


def to_lab(R: np.ndarray, m: LindbladModel, t: float) -> np.ndarray:
    """Undo the interaction picture: ``rho = exp(-i H0 t) R exp(i H0 t)``."""
    ph = frame_phases(m, R.shape[1], t)
    return ph[:, :, None, None] * R * np.conj(ph)[None, None, :, :]


def from_lab(rho: np.ndarray, m: LindbladModel, t: float) -> np.ndarray:
    ph = frame_phases(m, rho.shape[1], t)
    return np.conj(ph)[:, :, None, None] * rho * ph[None, None, :, :]


# --- initial state and trajectory -------------------------------------------

def initial_state(
    p: SystemParams,
    d: DerivedParams,
    space: HilbertSpace,
    phonon_angle: float = 0.0,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> DensityOperator:
    """All spins down times the squeezed phonon vacuum of amplitude ``r_n``.

    ``phonon_angle = 0`` gives ``<bb> = -cosh r sinh r``, the sign used by the
    moment initial vector; pass ``pi`` for the opposite squeezing orientation.
    """
    phonon = squeezed_vacuum_state(d.r_n, phonon_angle, space.cutoff, tail_tol)
    psi = space.product_state(space.spin_down(), phonon.amplitudes)
    return DensityOperator(psi.projector(), (space.spin_dim, space.cutoff))


@dataclass
class ExactTrajectory:
    """Per-time reduced states and moments (lab frame of the squeezed picture).

    Full density matrices are kept only at ``snapshot_index`` positions.
    """

    times: np.ndarray
    N: int
    cutoff: int
    model: LindbladModel
    spin_states: np.ndarray
    boson_states: np.ndarray
    moments: np.ndarray
    jz: np.ndarray
    nb: np.ndarray
    mean_b: np.ndarray
    mean_jp: np.ndarray
    purity: np.ndarray
    trace_err: np.ndarray
    herm_err: np.ndarray
    snapshot_index: np.ndarray
    min_eigs: np.ndarray
    snapshots: list = field(default_factory=list)
    n_steps: int = 0
    n_rejected: int = 0

    def __len__(self) -> int:
        return len(self.times)

    @property
    def excitation(self) -> np.ndarray:
        return self.jz + self.nb


def _moment_phases(m: LindbladModel) -> np.ndarray:
    """Frequencies ``f`` with ``<X>_lab = exp(i f t) <X>_frame`` for each moment."""
    W, w = m.Omega, m.omega
    f = {
        "J+J-": 0.0, "J+J+": 2 * W, "J-J+": 0.0, "J-J-": -2 * W,
        "J+b": W - w, "J+bd": W + w, "J-b": -W - w, "J-bd": -W + w,
        "bb": -2 * w, "bdb": 0.0, "bdbd": 2 * w,
    }
    return np.array([f[k] for k in MOMENT_LABELS])


class _Recorder:
    def __init__(self, m, times, cutoff, snapshot_index, keep_snapshots):
        self.m = m
        S = m.N + 1
        T = len(times)
        self.spin = build_spin_ops(m.N)
        self.bos = build_boson_ops(cutoff)
        self.freqs = _moment_phases(m)
        self.snap = set(int(i) for i in snapshot_index)
        self.keep = keep_snapshots
        self.spin_states = np.empty((T, S, S), complex)
        self.boson_states = np.empty((T, cutoff, cutoff), complex)
        self.moments = np.empty((T, N_MOMENTS), complex)
        self.jz = np.empty(T)
        self.nb = np.empty(T)
        self.mean_b = np.empty(T, complex)
        self.mean_jp = np.empty(T, complex)
        self.purity = np.empty(T)
        self.trace_err = np.empty(T)
        self.herm_err = np.empty(T)
        self.min_eigs = {}
        self.snapshots = []

    def __call__(self, i, t, R):
        sp, bo = self.spin, self.bos
        S, C = R.shape[0], R.shape[1]
        rs = np.einsum("akbk->ab", R)
        rb = np.einsum("mamb->ab", R)
        # reduced states back in the lab frame
        mz = np.arange(S) - self.m.N / 2
        ps = np.exp(-1j * self.m.Omega * mz * t)
        pb = np.exp(-1j * self.m.omega * np.arange(C) * t)
        self.spin_states[i] = ps[:, None] * rs * np.conj(ps)[None, :]
        self.boson_states[i] = pb[:, None] * rb * np.conj(pb)[None, :]

        def tr(op, r):
            return np.sum(op * r.T)

        jp, jm, b, bd = sp.jp, sp.jm, bo.b, bo.bd
        mom = np.array([
            tr(jp @ jm, rs), tr(jp @ jp, rs), tr(jm @ jp, rs), tr(jm @ jm, rs),
            np.einsum("ab,cd,bdac->", jp, b, R), np.einsum("ab,cd,bdac->", jp, bd, R),
            np.einsum("ab,cd,bdac->", jm, b, R), np.einsum("ab,cd,bdac->", jm, bd, R),
            tr(b @ b, rb), tr(bd @ b, rb), tr(bd @ bd, rb),
        ])
        self.moments[i] = mom * np.exp(1j * self.freqs * t)
        self.jz[i] = float(np.real(tr(sp.jz, rs)))
        self.nb[i] = float(np.real(mom[9]))
        self.mean_b[i] = tr(b, self.boson_states[i])
        self.mean_jp[i] = tr(jp, self.spin_states[i])
        self.purity[i] = float(np.sum(np.abs(R) ** 2))
        self.trace_err[i] = abs(np.einsum("akak->", R) - 1)
        self.herm_err[i] = float(np.max(np.abs(R - _dagger(R))))
        if i in self.snap:
            rho = to_lab(R, self.m, t).reshape(S * C, S * C)
            w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
            self.min_eigs[i] = float(w[0])
            if w[0] < POSITIVITY_ABORT:
                raise PositivityError(
                    f"minimum eigenvalue {w[0]:.3e} at Gt={t:.6g} (N={self.m.N}, cutoff={C}); "
                    "the Fock cutoff is likely too small or the tolerance too loose"
                )
            if self.keep:
                self.snapshots.append(DensityOperator(rho, (S, C)))


def check_exact_size(N: int, cutoff: int) -> None:
    if N > MAX_EXACT_N:
        raise ValueError(f"exact solver supports N <= {MAX_EXACT_N}, got N={N}; use the moment solver")
    if (N + 1) * cutoff > MAX_EXACT_DIM:
        raise ValueError(
            f"composite dimension {(N + 1) * cutoff} exceeds {MAX_EXACT_DIM}; lower the Fock cutoff or N"
        )


def evolve_exact(
    rho0: DensityOperator,
    m: LindbladModel,
    times,
    tol: float = 1e-9,
    rtol: float | None = None,
    n_snapshots: int = DEFAULT_SNAPSHOTS,
    keep_snapshots: bool = False,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> ExactTrajectory:
    """Integrate the master equation from ``rho0`` and record observables at ``times``.

    ``times`` must start at 0.  The minimum eigenvalue is checked at
    ``n_snapshots`` evenly spread output indices (always including the last);
    a value below ``-1e-6`` raises :class:`PositivityError`.
    """
    t = check_times(times)
    if t[0] != 0:
        raise ValueError("times must start at 0")
    S, C = rho0.dims
    if S != m.N + 1:
        raise ValueError(f"state has spin dimension {S}, model needs {m.N + 1}")
    check_exact_size(m.N, C)
    snap = np.unique(np.linspace(0, len(t) - 1, max(1, min(n_snapshots, len(t)))).round().astype(int))
    rhs = StructuredRhs(m, C)
    rec = _Recorder(m, t, C, snap, keep_snapshots)
    R0 = rho0.tensor.copy()
    n_acc, n_rej = dopri5(rhs, R0, t, tol, tol if rtol is None else rtol, rec, max_steps)
    return ExactTrajectory(
        times=t, N=m.N, cutoff=C, model=m,
        spin_states=rec.spin_states, boson_states=rec.boson_states, moments=rec.moments,
        jz=rec.jz, nb=rec.nb, mean_b=rec.mean_b, mean_jp=rec.mean_jp,
        purity=rec.purity, trace_err=rec.trace_err, herm_err=rec.herm_err,
        snapshot_index=snap, min_eigs=np.array([rec.min_eigs[i] for i in snap]),
        snapshots=rec.snapshots, n_steps=n_acc, n_rejected=n_rej,
    )
