import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dicke_squeeze import observables as obs
from dicke_squeeze.hilbert import build_spin_ops, squeezed_vacuum_state


def brute_xi_s2(rho, N):
    # 4/N times the smallest transverse variance over a fine angle grid
    ops = build_spin_ops(N)
    jx = (ops.jp + ops.jm) / 2
    jy = (ops.jp - ops.jm) / 2j
    best = np.inf
    for phi in np.linspace(0, math.pi, 20001):
        j = math.cos(phi) * jx + math.sin(phi) * jy
        best = min(best, np.trace(j @ j @ rho).real - np.trace(j @ rho).real ** 2)
    return 4 * best / N


def spin_squeezed_state(N, mu):
    # one-axis-twisted-like state built from exp(-i mu (Jx^2 - Jy^2)) on the ground state
    import scipy.linalg
    ops = build_spin_ops(N)
    gen = (ops.jp @ ops.jp + ops.jm @ ops.jm) / 2
    psi = scipy.linalg.expm(-1j * mu * gen)[:, 0]
    return np.outer(psi, psi.conj())


@pytest.mark.parametrize("N,mu", [(2, 0.3), (4, 0.1), (6, 0.05), (3, 0.0)])
def test_xi_s2_matches_variance_scan(N, mu):
    rho = spin_squeezed_state(N, mu)
    assert obs.xi_s2(rho) == pytest.approx(brute_xi_s2(rho, N), abs=1e-7)


def test_coherent_spin_state_is_standard_quantum_limit():
    rho = np.zeros((11, 11))
    rho[0, 0] = 1
    assert obs.xi_s2(rho) == pytest.approx(1.0)
    assert obs.jz_expect(rho) == pytest.approx(-5.0)
    assert obs.xi_R2(1.0, -5.0, 10) == pytest.approx(1.0)


def test_nonzero_mean_spin_rejected():
    psi = np.array([1, 1, 0]) / math.sqrt(2)
    with pytest.raises(obs.ObservableError):
        obs.xi_s2(np.outer(psi, psi))
    with pytest.raises(obs.ObservableError):
        obs.xi_R2(0.5, 0.0, 4)


@given(st.floats(0, 1.3), st.floats(-math.pi, math.pi))
def test_xi_b2_of_squeezed_vacuum(r, theta):
    psi = squeezed_vacuum_state(r, theta, 120).amplitudes
    assert obs.xi_b2(np.outer(psi, psi.conj())) == pytest.approx(math.exp(-2 * r), abs=1e-6)


def test_xi_b2_rejects_coherent_amplitude():
    psi = np.array([1, 1, 0, 0]) / math.sqrt(2)
    with pytest.raises(obs.ObservableError):
        obs.xi_b2(np.outer(psi, psi))


def test_moment_and_matrix_forms_agree():
    N = 4
    rho = spin_squeezed_state(N, 0.2)
    m = obs.spin_moments(rho)
    A = np.zeros(11, complex)
    for k in ("J+J-", "J+J+", "J-J+", "J-J-"):
        A[obs.IDX[k]] = m[k]
    assert obs.xi_s2(A, N) == pytest.approx(obs.xi_s2(rho))


def test_inconsistent_moments_abort():
    A = np.zeros(11, complex)
    A[obs.IDX["J+J+"]] = 3.0
    A[obs.IDX["J-J-"]] = -3.0
    with pytest.raises(obs.ObservableError):
        obs.xi_s2_from_moments(A, 10)


def test_wootters_reference_states():
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert obs.wootters_concurrence(np.outer(bell, bell)) == pytest.approx(1.0)
    assert obs.wootters_concurrence(np.eye(4) / 4) == 0.0
    prod = np.kron([1, 0], [0.6, 0.8])
    assert obs.wootters_concurrence(np.outer(prod, prod)) == pytest.approx(0.0, abs=1e-8)


@given(st.integers(0, 10_000))
def test_wootters_pure_states(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    a /= np.linalg.norm(a)
    expected = 2 * abs(a[0] * a[3] - a[1] * a[2])
    assert obs.wootters_concurrence(np.outer(a, a.conj())) == pytest.approx(expected, abs=1e-7)


def test_w_state_concurrence():
    # single excitation shared by N spins: C = 2/N
    for N in (2, 3, 5):
        rho = np.zeros((N + 1, N + 1))
        rho[1, 1] = 1
        assert obs.concurrence(rho) == pytest.approx(2 / N)


def test_squeezing_concurrence_identity_on_squeezed_states():
    for N in (2, 4):
        rho = spin_squeezed_state(N, 0.15)
        xi = obs.xi_s2(rho)
        assert xi < 1
        assert obs.concurrence_residual(xi, obs.concurrence(rho), N) == pytest.approx(0, abs=1e-8)


def test_analytic_curves_limits():
    r = 1.2199017579224611
    t = np.array([0.0, math.pi / (math.sqrt(100) * 3.38685)])
    xs, xb = obs.analytic_curves(100, 3.38685, r, t)
    assert xs[0] == pytest.approx(1) and xb[0] == pytest.approx(math.exp(-2 * r))
    assert xs[1] == pytest.approx(math.exp(-2 * r)) and xb[1] == pytest.approx(1)


def test_min_squeezing_refines_parabola():
    t = np.linspace(0, 1, 11)
    v, tv = obs.min_squeezing(t, (t - 0.437) ** 2 + 0.2)
    assert v == pytest.approx(0.2) and tv == pytest.approx(0.437)


def test_min_squeezing_prefers_earliest_tie():
    t = np.linspace(0, 1, 1001)
    y = 0.5 + 0.4 * np.cos(4 * math.pi * t + 0.5) ** 2 - 1e-6 * t
    v, tv = obs.min_squeezing(t, y)
    assert tv < 0.5


def test_vacuum_wigner_peak():
    rho = np.zeros((4, 4))
    rho[0, 0] = 1
    g = obs.phonon_wigner(rho, np.array([0.0]), np.array([0.0]))
    assert g.values[0, 0] == pytest.approx(1 / (2 * math.pi), abs=1e-12)


@pytest.mark.parametrize("m,n", [(0, 0), (1, 1), (2, 0), (3, 1), (4, 4)])
def test_wigner_matches_laguerre_form(m, n):
    # Hermitian part of |m><n|, since the grid evaluator assumes a Hermitian operator
    rho = np.zeros((8, 8), complex)
    rho[m, n] += 0.5
    rho[n, m] += 0.5
    q = np.linspace(-3, 3, 7)
    p = np.linspace(-2.5, 2.5, 6)
    got = obs.phonon_wigner(rho, q, p).values
    assert np.allclose(got, obs.fock_wigner(m, n, q, p).real, atol=1e-10)


def test_squeezed_wigner_quadratures():
    r = 1.2199017579224611
    psi = squeezed_vacuum_state(r, math.pi, 100).amplitudes
    rho = np.outer(psi, psi.conj())
    q, p = obs.default_wigner_axes(rho)
    g = obs.phonon_wigner(rho, q, p)
    assert g.norm() == pytest.approx(1, abs=1e-3)
    assert g.variance_p() == pytest.approx(math.exp(-2 * r), abs=1e-3)
    assert g.variance_q() == pytest.approx(math.exp(2 * r), rel=1e-2)
