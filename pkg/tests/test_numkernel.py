import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from dicke_squeeze.numkernel import (
    IntegrationError,
    NotHermitianError,
    ShapeError,
    check_times,
    dopri5,
    expm,
    hermitian_eig,
    integrate_linear_ode,
    integrate_matrix_ode,
)

BACKENDS = ["numba", "numpy"]


def random_matrix(seed, n, scale=1.0):
    rng = np.random.default_rng(seed)
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


def affine_exact(m, g, y0, t):
    """Solution of y' = m y + g via the exponential of the augmented generator."""
    n = len(y0)
    aug = np.zeros((n + 1, n + 1), dtype=complex)
    aug[:n, :n] = m
    aug[:n, n] = g
    z0 = np.append(y0, 1.0)
    return np.array([(scipy.linalg.expm(aug * ti) @ z0)[:n] for ti in t])


def test_hermitian_eig_rejects_non_hermitian():
    a = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(NotHermitianError):
        hermitian_eig(a)


def test_hermitian_eig_rejects_non_square():
    with pytest.raises(ShapeError):
        hermitian_eig(np.zeros((2, 3)))


def test_hermitian_eig_reconstructs():
    a = random_matrix(0, 6)
    h = a + a.conj().T
    w, v = hermitian_eig(h)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-12)


def test_expm_zero_is_identity():
    assert np.allclose(expm(np.zeros((4, 4))), np.eye(4))


def test_expm_anti_hermitian_is_unitary():
    a = random_matrix(1, 8)
    u = expm(a - a.conj().T)
    assert np.allclose(u @ u.conj().T, np.eye(8), atol=1e-12)


@given(st.integers(0, 10_000), st.sampled_from(["general", "hermitian", "anti"]))
def test_expm_matches_scipy(seed, kind):
    a = random_matrix(seed, 5, 0.5)
    if kind == "hermitian":
        a = a + a.conj().T
    elif kind == "anti":
        a = a - a.conj().T
    assert np.allclose(expm(a), scipy.linalg.expm(a), rtol=1e-10, atol=1e-11)


def test_check_times_validation():
    with pytest.raises(ValueError):
        check_times([0.0, 0.2, 0.1])
    with pytest.raises(ValueError):
        check_times([])
    with pytest.raises(ValueError):
        check_times([0.0, np.inf])


@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_generator_keeps_state(backend):
    y0 = np.array([1.0, 2.0j, -3.0])
    sol = integrate_linear_ode(np.zeros((3, 3)), np.zeros(3), y0, [0, 0.5, 1.0], backend=backend)
    assert np.allclose(sol.states, y0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_scalar_decay(backend):
    t = np.linspace(0, 2, 11)
    sol = integrate_linear_ode(np.array([[-1.5]]), np.zeros(1), np.ones(1), t, tol=1e-12, backend=backend)
    assert np.allclose(sol.states[:, 0], np.exp(-1.5 * t), atol=1e-11)
    assert np.array_equal(sol.times, t)


@pytest.mark.parametrize("backend", BACKENDS)
def test_affine_against_matrix_exponential(backend):
    rng = np.random.default_rng(5)
    m = random_matrix(5, 6, 0.7) - 1.0 * np.eye(6)
    g = rng.normal(size=6) + 1j * rng.normal(size=6)
    y0 = rng.normal(size=6) + 0j
    t = np.linspace(0, 1.5, 7)
    sol = integrate_linear_ode(m, g, y0, t, tol=1e-11, backend=backend)
    assert np.allclose(sol.states, affine_exact(m, g, y0, t), atol=1e-8)


@given(st.integers(0, 10_000))
def test_backends_agree(seed):
    rng = np.random.default_rng(seed)
    m = random_matrix(seed, 4, 0.5) - 0.3 * np.eye(4)
    g = rng.normal(size=4) + 0j
    y0 = rng.normal(size=4) + 0j
    t = np.linspace(0, 1, 5)
    a = integrate_linear_ode(m, g, y0, t, tol=1e-10, backend="numba")
    b = integrate_linear_ode(m, g, y0, t, tol=1e-10, backend="numpy")
    assert np.allclose(a.states, b.states, rtol=1e-12, atol=1e-13)
    assert a.n_steps == b.n_steps


def test_oscillator_hits_output_times_exactly():
    m = np.array([[0, 1], [-100.0, 0]], dtype=complex)
    t = np.array([0.0, 0.013, 0.5, 0.50001, 1.0])
    sol = integrate_linear_ode(m, np.zeros(2), np.array([1.0, 0]), t, tol=1e-12)
    assert np.allclose(sol.states[:, 0], np.cos(10 * t), atol=1e-9)


def test_max_steps_raises_with_time():
    m = np.array([[-1.0 + 500j]])
    with pytest.raises(IntegrationError) as err:
        integrate_linear_ode(m, np.zeros(1), np.ones(1), [0, 10], tol=1e-12, max_steps=20)
    assert err.value.t > 0
    assert "at t=" in str(err.value)


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        integrate_linear_ode(np.eye(3), np.zeros(2), np.zeros(3), [0, 1])


def test_unknown_backend():
    with pytest.raises(ValueError):
        integrate_linear_ode(np.eye(1), np.zeros(1), np.ones(1), [0, 1], backend="fortran")


def test_env_flag_selects_numpy(monkeypatch):
    from dicke_squeeze import _accel

    monkeypatch.setenv(_accel.ENV_FLAG, "1")
    assert _accel.default_backend() == "numpy"
    monkeypatch.setenv(_accel.ENV_FLAG, "")
    assert _accel.default_backend() == ("numba" if _accel.NUMBA_AVAILABLE else "numpy")


def test_matrix_ode_unitary_rotation():
    h = np.array([[1.0, 0.3], [0.3, -1.0]])
    rho0 = np.array([[1.0, 0], [0, 0]], dtype=complex)
    t = np.linspace(0, 2, 5)
    sol = integrate_matrix_ode(lambda _t, r: -1j * (h @ r - r @ h), rho0, t, tol=1e-11)
    for ti, r in zip(t, sol.states):
        u = scipy.linalg.expm(-1j * h * ti)
        assert np.allclose(r, u @ rho0 @ u.conj().T, atol=1e-9)


def test_dopri5_reports_every_output():
    seen = []
    dopri5(lambda t, y: -y, np.ones(2), [0, 0.1, 0.2], 1e-8, 1e-8, lambda i, t, y: seen.append((i, t)))
    assert seen == [(0, 0.0), (1, 0.1), (2, 0.2)]
