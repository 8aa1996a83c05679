import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from dicke_squeeze.dynamics_moments import (
    IDX,
    assemble_moment_system,
    conjugacy_error,
    evolve_moments,
    initial_moments,
    moment_system,
)
from dicke_squeeze.model import SystemParams, derive_params

P = SystemParams()
D = derive_params(P)


def exact_affine(system, A0, t):
    n = len(A0)
    aug = np.zeros((n + 1, n + 1), dtype=complex)
    aug[:n, :n] = system.M
    aug[:n, n] = system.Gamma
    return np.array([(scipy.linalg.expm(aug * ti) @ np.append(A0, 1))[:n] for ti in t])


def test_shorthands_as_defined():
    s = assemble_moment_system(P, D)
    N, W, w, k, g = P.N, P.Omega, D.omega_n, P.kappa, P.gamma
    assert s.Lambda[0] == 2j * W - k * N
    assert s.Lambda[1] == -2j * W - k * N
    assert s.Lambda[6] == -2j * w - g
    assert s.Lambda[7] == 2j * w - g
    assert s.Lambda[2] == pytest.approx(1j * (W - w) - N * k / 2 - g / 2)
    assert np.all(s.Gamma[:8] == 0)


def test_forcing_entries():
    s = moment_system(10, 1.0, 1.0, 1.0, 0.0, 0.5, 0.3, 0.2 + 0.1j)
    assert s.Gamma[8] == 0.5 * (0.2 - 0.1j)
    assert s.Gamma[9] == 0.5 * 0.3
    assert s.Gamma[10] == 0.5 * (0.2 + 0.1j)


def test_uncoupled_is_block_diagonal():
    s = moment_system(10, 200, 200.5, 0.0, 0.01, 1.0, 0.0, 0.0)
    spin, boson = slice(0, 4), slice(8, 11)
    assert np.all(s.M[spin, 4:] == 0) and np.all(s.M[boson, :8] == 0)
    assert np.all(s.M[4:8, :] == np.diag(np.diag(s.M))[4:8, :])


def test_counter_rotating_positions():
    a = assemble_moment_system(P, D, rwa=True).M
    b = assemble_moment_system(P, D, rwa=False).M
    diff = np.argwhere(np.abs(b - a) > 0) + 1
    expected = {
        (1, 6), (1, 7), (2, 5), (3, 6), (3, 7), (4, 8),
        (5, 2), (5, 9), (6, 3), (6, 10), (7, 3), (7, 10), (8, 4), (8, 11),
        (9, 5), (10, 6), (10, 7), (11, 8),
    }
    assert {tuple(x) for x in diff} == expected
    G, N = D.G_n, P.N
    assert b[0, 5] - a[0, 5] == pytest.approx(-1j * G * N / 2)
    assert b[0, 6] - a[0, 6] == pytest.approx(1j * G * N / 2)


def test_rwa_generator_drops_counter_rotating_pair():
    # R7 of the RWA table: (4: -iG/2, 7: Lambda5, 9: -iGN/2)
    M = assemble_moment_system(P, D).M
    assert M[6, 3] == pytest.approx(-1j * D.G_n / 2)
    assert M[6, 8] == pytest.approx(-1j * D.G_n * P.N / 2)
    assert M[6, 2] == 0


def test_initial_vector():
    A = initial_moments(P, D)
    assert A[IDX["J-J+"]] == P.N
    assert A[IDX["bdb"]] == pytest.approx(2.3895, abs=1e-4)
    assert A[IDX["bb"]] == pytest.approx(-2.84590, abs=1e-5)
    assert A[IDX["bb"]] == A[IDX["bdbd"]]
    A0 = initial_moments(SystemParams(n=0), derive_params(SystemParams(n=0)))
    assert np.count_nonzero(A0) == 1


@pytest.mark.parametrize("rwa", [True, False])
def test_evolution_matches_matrix_exponential(rwa):
    p = SystemParams(N=20)
    s = assemble_moment_system(p, derive_params(p), rwa)
    A0 = initial_moments(p, derive_params(p))
    t = np.linspace(0, 0.2, 5)
    traj = evolve_moments(s, A0, t, tol=1e-11)
    ref = exact_affine(s, A0, t)
    assert np.allclose(traj.moments, ref, rtol=1e-7, atol=1e-7 * P.N)


def test_conjugate_pairs_maintained():
    s = assemble_moment_system(P, D, rwa=False)
    traj = evolve_moments(s, initial_moments(P, D), np.linspace(0, 0.3, 31), tol=1e-10)
    assert traj.conjugacy_error < 1e-9 * P.N
    assert conjugacy_error(traj.moments) == traj.conjugacy_error


def test_closed_rwa_excitation_conserved():
    s = moment_system(P.N, P.Omega, D.omega_n, D.G_n, 0, 0, 0, 0, True)
    A = evolve_moments(s, initial_moments(P, D), np.linspace(0, 0.3, 61)).moments
    x = A[:, IDX["J+J-"]] + P.N * A[:, IDX["bdb"]]
    assert np.max(np.abs(x - x[0])) < 1e-6 * P.N
    # the frozen spin keeps the commutator difference at N
    assert np.allclose(A[:, IDX["J-J+"]] - A[:, IDX["J+J-"]], P.N)


def test_free_boson_rotation():
    w = D.omega_n
    s = moment_system(P.N, P.Omega, w, 0.0, 0, 0, 0, 0)
    t = np.linspace(0, 0.05, 11)
    A0 = initial_moments(P, D)
    A = evolve_moments(s, A0, t, tol=1e-12).moments
    assert np.allclose(A[:, IDX["bb"]], A0[IDX["bb"]] * np.exp(-2j * w * t), atol=1e-9)
    assert np.allclose(np.abs(A[:, IDX["bdbd"]]), abs(A0[IDX["bdbd"]]), atol=1e-9)


def test_vacuum_reservoir_relaxes():
    s = moment_system(P.N, P.Omega, D.omega_n, 0.0, 0.0, 1.0, 0.0, 0.0)
    t = np.linspace(0, 3, 7)
    A = evolve_moments(s, initial_moments(P, D), t).moments
    assert np.allclose(A[:, IDX["bdb"]].real, math.sinh(D.r_n) ** 2 * np.exp(-t), atol=1e-8)


@given(st.integers(0, 1000))
def test_affine_superposition(seed):
    rng = np.random.default_rng(seed)
    s = assemble_moment_system(P, D)
    a, b = rng.normal(size=(2, 11)) + 1j * rng.normal(size=(2, 11))
    t = np.linspace(0, 0.05, 3)
    kw = dict(tol=1e-11, check=False)
    zero = evolve_moments(s, np.zeros(11), t, **kw).moments
    lhs = evolve_moments(s, a, t, **kw).moments + evolve_moments(s, b, t, **kw).moments
    rhs = evolve_moments(s, a + b, t, **kw).moments + zero
    assert np.allclose(lhs, rhs, atol=1e-7)
