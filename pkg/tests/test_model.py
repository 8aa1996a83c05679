import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dicke_squeeze.hilbert import HilbertSpace
from dicke_squeeze.model import (
    SystemParams,
    build_hamiltonian,
    check_rwa_regime,
    derive_params,
    reservoir_noise,
    squeeze_amplitude,
    verify_diagonalization,
)


def test_reference_parameters():
    d = derive_params(SystemParams())
    assert d.r_n == pytest.approx(1.2199017579, abs=1e-9)
    assert d.G_n == pytest.approx(3.38685, abs=1e-4)
    assert d.omega_n == pytest.approx(200.509, abs=1e-3)
    assert d.theta == math.pi


def test_no_photon_means_no_squeezing():
    d = derive_params(SystemParams(n=0))
    assert d.r_n == 0 and d.G_n == 1.0 and d.omega_n == 2300.0


def test_domain_error():
    with pytest.raises(ValueError, match="4ng >= omega_b"):
        SystemParams(n=2)
    with pytest.raises(ValueError):
        squeeze_amplitude(1, 0.25)


@pytest.mark.parametrize("field,value", [("N", 0), ("kappa", -1.0), ("gamma", -0.1), ("omega_b", 0.0)])
def test_invalid_inputs(field, value):
    with pytest.raises(ValueError):
        SystemParams(**{field: value})


@given(st.floats(0, 1.5), st.floats(0, 1.5))
def test_phase_matched_noise_closed_form(r_n, r_e):
    N_s, M_s = reservoir_noise(r_n, r_e, math.pi)
    R = r_n - r_e
    assert N_s == pytest.approx(math.sinh(R) ** 2, abs=1e-9)
    assert M_s.real == pytest.approx(math.cosh(R) * math.sinh(R), abs=1e-9)
    assert abs(M_s.imag) < 1e-9


@given(st.floats(0, 1.5), st.floats(0, 1.5), st.floats(-math.pi, math.pi))
def test_squeezed_reservoir_is_pure(r_n, r_e, phi):
    # a squeezed vacuum stays a minimum-uncertainty reservoir under the frame change
    N_s, M_s = reservoir_noise(r_n, r_e, phi)
    assert N_s >= -1e-12
    assert abs(M_s) ** 2 == pytest.approx(N_s * (N_s + 1), rel=1e-9, abs=1e-9)


def test_matched_noise_vanishes():
    d = derive_params(SystemParams())
    assert abs(d.N_s) < 1e-12 and abs(d.M_s) < 1e-12


def test_unmatched_vacuum_reservoir_amplified():
    d = derive_params(SystemParams(r_e=0.0, phi_e=0.0))
    assert d.N_s == pytest.approx(math.sinh(d.r_n) ** 2, rel=1e-12)


@pytest.mark.parametrize("variant", ["full", "effective", "rwa"])
def test_hamiltonians_hermitian(variant):
    p = SystemParams(N=3)
    h = build_hamiltonian(p, derive_params(p), HilbertSpace(3, 8), variant)
    assert np.allclose(h, h.conj().T)


def test_rwa_conserves_excitations():
    p = SystemParams(N=4)
    sp = HilbertSpace(4, 10)
    h = build_hamiltonian(p, derive_params(p), sp, "rwa")
    x = sp.Jz + sp.bd @ sp.b
    assert np.allclose(h @ x - x @ h, 0, atol=1e-10)


def test_unknown_variant():
    p = SystemParams(N=2)
    with pytest.raises(ValueError):
        build_hamiltonian(p, derive_params(p), HilbertSpace(2, 4), "lab")


def test_diagonalization_report():
    p = SystemParams()
    rep = verify_diagonalization(p, cutoff=120)
    assert rep.residual < 1e-6 * p.omega_b
    assert rep.number_relative_error < 1e-5
    assert rep.coupling_ratio == pytest.approx(math.exp(derive_params(p).r_n), rel=1e-8)
    assert rep.fit_error < 1e-6 * p.omega_b


def test_diagonalization_needs_cutoff():
    with pytest.raises(ValueError):
        verify_diagonalization(SystemParams(), cutoff=60)


def test_rwa_regime_report():
    rep = check_rwa_regime(SystemParams())
    assert rep.enhancement_ratio == pytest.approx(math.exp(3 * 1.2199017579) / 2300, rel=1e-8)
    assert rep.ok
    assert not check_rwa_regime(SystemParams(Omega=150)).detuning_ok
