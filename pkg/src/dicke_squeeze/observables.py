"""Squeezing parameters, mean spin, pairwise concurrence and the phonon Wigner function.

Functions accept either reduced density matrices or 11-entry moment vectors
(order as in :mod:`dicke_squeeze.dynamics_moments`).  Quadratures are
``Q = b + b^dag`` and ``P = -i(b - b^dag)``, so the vacuum has unit variance in
both and ``W(Q, P) = exp(-(Q^2 + P^2)/2) / (2 pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics_moments import IDX, N_MOMENTS
from .hilbert import build_boson_ops, build_spin_ops

MEAN_TOL = 1e-6
RADICAND_ABORT = 1e-6
MAX_CONCURRENCE_N = 12


class ObservableError(ValueError):
    """Input violates the assumptions behind a squeezing formula."""


@dataclass(frozen=True)
class SqueezingSample:
    """One time point.  Quantities a data path cannot provide are ``None``."""

    t: float
    xi_b2: float
    xi_s2: float
    xi_R2: float | None = None
    jz: float | None = None
    concurrence: float | None = None
    source: str = "exact"


def _is_moments(x) -> bool:
    x = np.asarray(x)
    return x.ndim >= 1 and x.shape[-1] == N_MOMENTS and (x.ndim == 1 or x.shape[-2] != N_MOMENTS)


# --- phonon -----------------------------------------------------------------

def xi_b2_from_moments(A) -> np.ndarray | float:
    """``1 + 2(<b^dag b> - |<b^2>|)``, vectorized over leading axes."""
    A = np.asarray(A)
    val = 1 + 2 * (A[..., IDX["bdb"]].real - np.abs(A[..., IDX["bb"]]))
    return float(val) if np.ndim(val) == 0 else val


def xi_b2(state) -> float:
    """Phonon quadrature squeezing from a boson density matrix or a moment vector.

    Raises :class:`ObservableError` when ``|<b>| > 1e-6``: the formula assumes
    a zero mean amplitude.
    """
    if _is_moments(state):
        return xi_b2_from_moments(state)
    rho = _boson_matrix(state)
    ops = build_boson_ops(rho.shape[0])
    mean_b = np.sum(ops.b * rho.T)
    if abs(mean_b) > MEAN_TOL:
        raise ObservableError(f"<b> = {mean_b:.3e} is nonzero; the quadrature formula assumes <b> = 0")
    n = np.sum((ops.bd @ ops.b) * rho.T).real
    bb = np.sum((ops.b @ ops.b) * rho.T)
    return float(1 + 2 * (n - abs(bb)))


def _boson_matrix(state) -> np.ndarray:
    if hasattr(state, "boson_state"):
        return state.boson_state()
    rho = np.asarray(state, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("expected a square boson density matrix")
    return rho


def _spin_matrix(state) -> np.ndarray:
    if hasattr(state, "spin_state"):
        return state.spin_state()
    rho = np.asarray(state, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("expected a square spin density matrix")
    return rho


# --- spin -------------------------------------------------------------------

def _xi_s2_core(pm, mp, pp, mm, N):
    pm, mp, pp, mm = (np.asarray(x) for x in (pm, mp, pp, mm))
    s = pp + mm
    d = pp - mm
    rad = (s * s - d * d).real
    # s^2 - d^2 = 4 <J+^2><J-^2>, which is |<J+^2>|^2 >= 0 in exact arithmetic
    worst = float(np.min(rad)) if rad.size else 0.0
    if worst < -RADICAND_ABORT * max(1.0, float(np.max(np.abs(s * s)))):
        raise ObservableError(f"negative radicand {worst:.3e}: moments are inconsistent")
    rad = np.where(rad < 0, 0.0, rad)
    return ((pm + mp).real - np.sqrt(rad)) / N


def xi_s2_from_moments(A, N: int):
    A = np.asarray(A)
    val = _xi_s2_core(A[..., IDX["J+J-"]], A[..., IDX["J-J+"]], A[..., IDX["J+J+"]], A[..., IDX["J-J-"]], N)
    return float(val) if np.ndim(val) == 0 else val


def spin_moments(rho_s: np.ndarray) -> dict:
    """``<J+J->``, ``<J-J+>``, ``<J+^2>``, ``<J-^2>``, ``<J+>`` and ``<J_z>`` of a Dicke-basis state."""
    N = rho_s.shape[0] - 1
    ops = _spin_ops(N)

    def ev(op):
        return np.sum(op * rho_s.T)

    return {
        "J+J-": ev(ops.jp @ ops.jm),
        "J-J+": ev(ops.jm @ ops.jp),
        "J+J+": ev(ops.jp @ ops.jp),
        "J-J-": ev(ops.jm @ ops.jm),
        "J+": ev(ops.jp),
        "Jz": float(ev(ops.jz).real),
    }


@lru_cache(maxsize=32)
def _spin_ops(N: int):
    return build_spin_ops(N)


def xi_s2(state, N: int | None = None) -> float:
    """Transverse collective-spin squeezing (``< 1`` means squeezed).

    Accepts a Dicke-basis spin density matrix (or anything with
    ``spin_state()``) or a moment vector; ``N`` is required for the latter.
    """
    if _is_moments(state):
        if N is None:
            raise ValueError("N is required for a moment vector")
        return xi_s2_from_moments(state, N)
    rho = _spin_matrix(state)
    n_spin = rho.shape[0] - 1
    if N is not None and N != n_spin:
        raise ValueError(f"spin matrix describes N={n_spin}, got N={N}")
    m = spin_moments(rho)
    if abs(m["J+"]) > MEAN_TOL:
        raise ObservableError(f"<J+> = {m['J+']:.3e} is nonzero; the transverse formula assumes <J+-> = 0")
    return float(_xi_s2_core(m["J+J-"], m["J-J+"], m["J+J+"], m["J-J-"], n_spin))


def jz_expect(state) -> float:
    rho = _spin_matrix(state)
    N = rho.shape[0] - 1
    return float(np.sum(_spin_ops(N).jz * rho.T).real)


def xi_R2(xi_s2_value, jz, N: int):
    """Wineland parameter from ``xi_s^2`` and the mean spin ``<J_z>``."""
    jz = np.asarray(jz, dtype=float)
    if np.any(np.abs(jz) <= MEAN_TOL * N):
        raise ObservableError("mean spin vanishes; the Wineland parameter is undefined")
    val = np.asarray(xi_s2_value) * (N / 2) ** 2 / jz**2
    return float(val) if np.ndim(val) == 0 else val


# --- concurrence ------------------------------------------------------------

@lru_cache(maxsize=16)
def _dicke_embedding(N: int) -> np.ndarray:
    """Columns are the symmetric states with ``k`` excitations in the ``2^N`` product basis."""
    dim = 1 << N
    ones = np.array([bin(i).count("1") for i in range(dim)])
    V = np.zeros((dim, N + 1))
    for k in range(N + 1):
        V[ones == k, k] = 1 / math.sqrt(math.comb(N, k))
    return V


def two_qubit_state(rho_s: np.ndarray) -> np.ndarray:
    """Reduced state of two spins taken from a symmetric ``N``-spin state."""
    rho_s = np.asarray(rho_s, dtype=complex)
    N = rho_s.shape[0] - 1
    if N < 2:
        raise ValueError("need at least two spins")
    if N > MAX_CONCURRENCE_N:
        raise ValueError(f"concurrence embedding supports N <= {MAX_CONCURRENCE_N}, got N={N}")
    V = _dicke_embedding(N).reshape(4, 1 << (N - 2), N + 1)
    return np.einsum("arm,mn,brn->ab", V, rho_s, V)


_SYSY = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex)


def wootters_concurrence(rho2: np.ndarray) -> float:
    rho2 = 0.5 * (rho2 + rho2.conj().T)
    w, v = np.linalg.eigh(rho2)
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    flipped = _SYSY @ rho2.conj() @ _SYSY
    r = sq @ flipped @ sq
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(0.5 * (r + r.conj().T)), 0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence(state) -> float:
    """Wootters concurrence of any two spins of a symmetric ensemble (``2 <= N <= 12``)."""
    return wootters_concurrence(two_qubit_state(_spin_matrix(state)))


def concurrence_residual(xi_s2_value, c, N: int):
    """``xi_s^2 + (N - 1) C - 1``; zero when squeezing and pairwise entanglement agree."""
    return np.asarray(xi_s2_value) + (N - 1) * np.asarray(c) - 1


# --- closed-form transfer ---------------------------------------------------

def analytic_curves(N: int, G_n: float, r_n: float, times) -> tuple[np.ndarray, np.ndarray]:
    """Resonant, closed, frozen-spin transfer: ``(xi_s^2(t), xi_b^2(t))``."""
    t = np.asarray(times, dtype=float)
    x0 = math.exp(-2 * r_n)
    c2 = np.cos(math.sqrt(N) * G_n * t / 2) ** 2
    return c2 + x0 * (1 - c2), (1 - c2) + x0 * c2


def analytic_squeezing(p, d, times) -> list[SqueezingSample]:
    xs, xb = analytic_curves(p.N, d.G_n, d.r_n, times)
    return [
        SqueezingSample(float(t), float(b), float(s), source="analytic")
        for t, s, b in zip(np.asarray(times, dtype=float), xs, xb)
    ]


# --- minima -----------------------------------------------------------------

def _refine(t, y, i):
    if i == 0 or i == len(y) - 1:
        return float(y[i]), float(t[i])
    t0, t1, t2 = t[i - 1], t[i], t[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / den
    b = (t2 * t2 * (y0 - y1) + t1 * t1 * (y2 - y0) + t0 * t0 * (y1 - y2)) / den
    if a <= 0:
        return float(y1), float(t1)
    tv = -b / (2 * a)
    if not t0 <= tv <= t2:
        return float(y1), float(t1)
    c = y1 - a * t1 * t1 - b * t1
    return float(min(y1, a * tv * tv + b * tv + c)), float(tv)


def min_squeezing(times, values, tie_tol: float = 1e-4) -> tuple[float, float]:
    """Minimum of a sampled curve, refined by a parabola through the neighbours.

    Local minima whose refined values lie within ``tie_tol`` of the global
    minimum count as equal; the earliest of them is returned.  Returns
    ``(value, time)``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.size == 0 or t.size != y.size:
        raise ValueError("need a non-empty trajectory with matching times")
    if t.size < 3:
        i = int(np.argmin(y))
        return float(y[i]), float(t[i])
    cand = [0] if y[0] <= y[1] else []
    inner = np.nonzero((y[1:-1] <= y[:-2]) & (y[1:-1] <= y[2:]))[0] + 1
    cand.extend(int(i) for i in inner)
    if y[-1] <= y[-2]:
        cand.append(t.size - 1)
    refined = [_refine(t, y, i) for i in cand]
    best = min(v for v, _ in refined)
    for v, tv in refined:
        if v <= best + tie_tol:
            return v, tv
    raise AssertionError("unreachable")


# --- Wigner function --------------------------------------------------------

@dataclass(frozen=True)
class WignerGrid:
    q: np.ndarray
    p: np.ndarray
    values: np.ndarray  # shape (len(q), len(p))
    convention: str = "W(Q,P), Q=b+b^dag, P=-i(b-b^dag), vacuum peak 1/(2pi)"

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0]) if self.q.size > 1 else 1.0

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0]) if self.p.size > 1 else 1.0

    def norm(self) -> float:
        return float(np.sum(self.values) * self.dq * self.dp)

    def moment(self, fq, fp) -> float:
        w = self.values * self.dq * self.dp
        return float(np.sum(w * fq(self.q)[:, None] * fp(self.p)[None, :]))

    def variance_p(self) -> float:
        n = self.norm()
        mp = self.moment(np.ones_like, lambda p: p) / n
        return self.moment(np.ones_like, lambda p: p**2) / n - mp**2

    def variance_q(self) -> float:
        n = self.norm()
        mq = self.moment(lambda q: q, np.ones_like) / n
        return self.moment(lambda q: q**2, np.ones_like) / n - mq**2


def quadrature_stddev(rho_b: np.ndarray) -> tuple[float, float]:
    ops = build_boson_ops(rho_b.shape[0])
    q = ops.b + ops.bd
    p = -1j * (ops.b - ops.bd)

    def var(x):
        m1 = np.sum(x * rho_b.T).real
        return np.sum((x @ x) * rho_b.T).real - m1 * m1

    return math.sqrt(max(var(q), 1e-12)), math.sqrt(max(var(p), 1e-12))


def default_wigner_axes(rho_b: np.ndarray, n_sigma: float = 6.0, points: int = 101):
    """Symmetric axes spanning ``+-n_sigma`` standard deviations (at least the vacuum width)."""
    sq, sp = quadrature_stddev(rho_b)
    hq = n_sigma * max(sq, 1.0 if sq > 1 else sq)
    hp = n_sigma * max(sp, 1.0 if sp > 1 else sp)
    return np.linspace(-hq, hq, points), np.linspace(-hp, hp, points)


@lru_cache(maxsize=4)
def _x_eigensystem(dim: int):
    ops = build_boson_ops(dim)
    k = 1j * (ops.bd - ops.b)
    w, v = np.linalg.eigh(k)
    return w, v


def _working_dim(cutoff: int, amax: float) -> int:
    return int(cutoff + math.ceil((amax + 8.0) ** 2))


def phonon_wigner(
    rho_b: np.ndarray,
    q=None,
    p=None,
    tail_tol: float = 1e-6,
    work_dim: int | None = None,
    chunk: int = 2048,
) -> WignerGrid:
    """Wigner function from displaced parity, ``W = Tr[rho D(a) Pi D(a)^dag] / (2 pi)``.

    ``a = (Q + iP)/2``.  Displacements are applied in a zero-padded Fock space
    of ``work_dim`` levels (default sized from the largest ``|a|``) so that the
    truncated displacement does not reflect off the top level.
    """
    rho_b = np.asarray(rho_b, dtype=complex)
    c = rho_b.shape[0]
    top = float(np.real(np.trace(rho_b[max(0, c - 2):, max(0, c - 2):])))
    if top > tail_tol:
        raise ObservableError(f"weight {top:.2e} on the two highest Fock levels exceeds {tail_tol:.0e}")
    if q is None or p is None:
        dq, dp = default_wigner_axes(rho_b)
        q = dq if q is None else q
        p = dp if p is None else p
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    alpha = (q[:, None] + 1j * p[None, :]).ravel() / 2
    amax = float(np.max(np.abs(alpha))) if alpha.size else 0.0
    dim = work_dim or _working_dim(c, amax)
    if dim < c:
        raise ValueError("work_dim must be at least the state dimension")

    lam, V = _x_eigensystem(dim)
    w_rho, u_rho = np.linalg.eigh(0.5 * (rho_b + rho_b.conj().T))
    keep = np.abs(w_rho) > 1e-14
    n = np.arange(dim)
    parity = np.where(n % 2 == 0, 1.0, -1.0)
    Vh = V.conj().T

    out = np.zeros(alpha.size)
    mag = np.abs(alpha)
    phi = np.angle(alpha)
    for weight, vec in zip(w_rho[keep], u_rho[:, keep].T):
        psi = np.zeros(dim, dtype=complex)
        psi[:c] = vec
        for s in range(0, alpha.size, chunk):
            sl = slice(s, s + chunk)
            # D(-a) = R(phi) exp(-|a| (b^dag - b)) R(-phi); R phases drop out of the parity sum
            rotated = psi[:, None] * np.exp(-1j * np.outer(n, phi[sl]))
            y = Vh @ rotated
            y *= np.exp(1j * np.outer(lam, mag[sl]))
            disp = V @ y
            out[sl] += weight * (parity @ (np.abs(disp) ** 2))
    values = out.reshape(q.size, p.size) / (2 * math.pi)
    return WignerGrid(q, p, values)


def fock_wigner(m: int, n: int, q, p) -> np.ndarray:
    """Closed-form Wigner function of ``|m><n|`` in the same convention (Laguerre form)."""
    from scipy.special import eval_genlaguerre, gammaln

    if m < n:
        return np.conj(fock_wigner(n, m, q, p))
    Q, P = np.meshgrid(np.asarray(q, float), np.asarray(p, float), indexing="ij")
    x = (Q + 1j * P) / math.sqrt(2)
    r2 = np.abs(x) ** 2
    k = m - n
    pref = (-1) ** n * np.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
    return pref / (2 * math.pi) * (np.sqrt(2) * x) ** k * np.exp(-r2) * eval_genlaguerre(n, k, 2 * r2)
