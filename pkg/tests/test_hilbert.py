import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dicke_squeeze.hilbert import (
    HilbertSpace,
    StateVector,
    TruncationError,
    build_boson_ops,
    build_spin_ops,
    squeeze_operator,
    squeezed_vacuum_amplitudes,
    squeezed_vacuum_state,
    squeezed_vacuum_tail,
)


@given(st.integers(1, 30))
def test_spin_algebra(N):
    s = build_spin_ops(N)
    J = N / 2
    assert np.allclose(s.jp @ s.jm - s.jm @ s.jp, 2 * s.jz)
    assert np.allclose(s.jz @ s.jp - s.jp @ s.jz, s.jp)
    casimir = s.jx @ s.jx + s.jy @ s.jy + s.jz @ s.jz
    assert np.allclose(casimir, J * (J + 1) * np.eye(N + 1))
    assert s.jz[0, 0] == -J


def test_spin_rejects_bad_N():
    with pytest.raises(ValueError):
        build_spin_ops(0)
    with pytest.raises(ValueError):
        build_spin_ops(2.5)


def test_boson_commutator_below_cutoff():
    ops = build_boson_ops(12)
    comm = ops.b @ ops.bd - ops.bd @ ops.b
    assert np.allclose(np.diag(comm)[:-1], 1)
    assert np.allclose(np.diag(ops.number), np.arange(12))


def test_squeezed_vacuum_matches_operator():
    r, theta = 0.6, 0.9
    exact = squeeze_operator(r, theta, 200)[:40, 0]
    assert np.allclose(squeezed_vacuum_amplitudes(r, theta, 40), exact, atol=1e-12)


@given(st.floats(0.0, 1.3), st.floats(-math.pi, math.pi))
def test_squeezed_vacuum_moments(r, theta):
    psi = squeezed_vacuum_state(r, theta, 180, tail_tol=1e-10).amplitudes
    ops = build_boson_ops(180)
    n = np.vdot(psi, ops.number @ psi).real
    bb = np.vdot(psi, ops.b @ ops.b @ psi)
    assert n == pytest.approx(math.sinh(r) ** 2, abs=1e-8)
    expected = -np.exp(1j * theta) * math.sinh(r) * math.cosh(r)
    assert abs(bb - expected) < 1e-8


def test_tail_check_raises_with_hint():
    with pytest.raises(TruncationError, match="increase the Fock cutoff"):
        squeezed_vacuum_state(1.2199, math.pi, 40)


def test_tail_shrinks_with_cutoff():
    tails = [squeezed_vacuum_tail(1.2199, c) for c in (40, 60, 100)]
    assert tails[0] > tails[1] > tails[2]
    assert tails[2] < 1e-8 < tails[1]


def test_state_vector_checks_norm():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]), (2,))


def test_space_lifts_and_ordering():
    sp = HilbertSpace(3, 5)
    assert sp.dim == 20 and sp.shape4 == (4, 5, 4, 5)
    assert np.allclose(sp.Jz @ sp.b, sp.b @ sp.Jz)
    psi = sp.product_state(sp.spin_down(), np.eye(5)[2])
    assert np.argmax(np.abs(psi.amplitudes)) == 0 * 5 + 2
