"""Level-system construction and Hamiltonian assembly."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkbeam import (
    ConfigError,
    ExtraCoupling,
    build_extended,
    build_lambda,
    extended_system,
    lambda_system,
    lirb_spec,
    rabi_frequency,
)
from darkbeam.fields import peak_amplitude
from darkbeam.hamiltonian import coupling_channels
from tests.test_fields import _probe

FINITE = st.floats(min_value=-1e12, max_value=1e12, allow_nan=False)
POSITIVE = st.floats(min_value=1e3, max_value=1e12, allow_nan=False)


def test_rabi_frequency_paper_scale():
    # 4 Debye dipole in the 0.8 W / 10 um beam: mu eps / (2 hbar)
    spec = lirb_spec()
    omega = rabi_frequency(spec.dipole_ge_cm, peak_amplitude(_probe()))
    assert omega == pytest.approx(123922015513.26, rel=1e-9)


def test_rabi_frequency_linear():
    assert rabi_frequency(2e-29, 1e6) == pytest.approx(2 * rabi_frequency(1e-29, 1e6))
    assert rabi_frequency(1e-29, 2e6) == pytest.approx(2 * rabi_frequency(1e-29, 1e6))


def test_lambda_system_structure():
    sys3 = lambda_system(delta_p=5.0, delta_two=0.25, gamma_rads=2.0)
    assert sys3.labels == ["g", "e", "s"]
    assert sys3.dim == 3
    assert sys3.delta_p == 5.0
    assert sys3.delta_two == 0.25
    np.testing.assert_allclose(sys3.detunings, [0.0, 5.0, 0.25])


def test_build_lambda_matrix():
    sys3 = lambda_system(delta_p=7.0, delta_two=0.5)
    h = build_lambda(sys3, 2.0, 3.0)
    expected = np.array([
        [0.0, 2.0, 0.0],
        [2.0, 7.0, 3.0],
        [0.0, 3.0, 0.5],
    ])
    np.testing.assert_allclose(h.matrix.real, expected)
    assert h.is_hermitian()


def test_decay_enters_anti_hermitian():
    sys3 = lambda_system(delta_p=7.0, delta_two=0.0, gamma_rads=4.0)
    h = build_lambda(sys3, 1.0, 1.0)
    assert not h.is_hermitian()
    # -i Gamma/2 on the intermediate level only
    anti = h.anti_hermitian_part
    np.testing.assert_allclose(anti, np.diag([0.0, -2.0j, 0.0]), atol=1e-15)
    np.testing.assert_allclose(h.hermitian_part[1, 1], 7.0)


def test_coupling_scale_toggle():
    weak = lambda_system(delta_p=5.0, delta_two=0.0, coupling_scale=0.0)
    h = build_lambda(weak, 2.0, 3.0)
    np.testing.assert_allclose(h.matrix, np.diag([0.0, 5.0, 0.0]).astype(complex))
    half = lambda_system(delta_p=5.0, delta_two=0.0, coupling_scale=0.5)
    assert build_lambda(half, 2.0, 3.0).matrix[0, 1] == pytest.approx(1.0)


def test_two_level_limit_spectrum():
    # control off, resonant: a bare two-level crossing with eigenvalues +-Omega
    sys3 = lambda_system(delta_p=0.0, delta_two=0.0)
    vals = np.linalg.eigvalsh(build_lambda(sys3, 1.0, 0.0).matrix.real)
    np.testing.assert_allclose(vals, [-1.0, 0.0, 1.0], atol=1e-12)


@settings(deadline=None)
@given(POSITIVE, POSITIVE, FINITE)
def test_zero_eigenvalue_at_two_photon_resonance(omega_p, omega_c, delta_p):
    sys3 = lambda_system(delta_p=delta_p, delta_two=0.0)
    vals = np.linalg.eigvalsh(build_lambda(sys3, omega_p, omega_c).matrix.real)
    scale = max(omega_p, omega_c, abs(delta_p))
    assert np.min(np.abs(vals)) < 1e-12 * scale


@settings(deadline=None)
@given(POSITIVE, POSITIVE, FINITE)
def test_spectrum_symmetric_under_leg_swap(omega_p, omega_c, delta_p):
    # at delta_two = 0 the g and s levels are interchangeable
    sys3 = lambda_system(delta_p=delta_p, delta_two=0.0)
    a = np.linalg.eigvalsh(build_lambda(sys3, omega_p, omega_c).matrix.real)
    b = np.linalg.eigvalsh(build_lambda(sys3, omega_c, omega_p).matrix.real)
    scale = max(omega_p, omega_c, abs(delta_p), 1.0)
    np.testing.assert_allclose(a, b, atol=1e-12 * scale)


def test_extended_dimensions_and_labels():
    for n in (3, 7, 9, 11):
        sysn = extended_system(n, delta_p=1e12, delta_two=0.0)
        assert sysn.dim == n
        assert sysn.labels[:3] == ["g", "e", "s"]
        assert len(set(sysn.labels)) == n
    with pytest.raises(ConfigError):
        extended_system(5, delta_p=1e12, delta_two=0.0)


def test_extended_reduces_to_lambda():
    sys3 = extended_system(3, delta_p=3.0, delta_two=0.5, gamma_rads=1.0)
    direct = build_lambda(lambda_system(3.0, 0.5, gamma_rads=1.0), 2.0, 4.0)
    via_extended = build_extended(sys3, 2.0, 4.0)
    np.testing.assert_array_equal(via_extended.matrix, direct.matrix)


def test_decoupled_extras_preserve_lambda_spectrum():
    # extra levels with zero coupling ratio leave the core block untouched
    delta_p = 5.65e13
    sys3 = lambda_system(delta_p, 0.0)
    sys7 = extended_system(7, delta_p, 0.0, extra_ratio=0.0)
    op, oc = 1.24e11, 1.22e11
    vals3 = np.linalg.eigvalsh(build_lambda(sys3, op, oc).matrix.real)
    vals7 = np.linalg.eigvalsh(build_extended(sys7, op, oc).matrix.real)
    for v in vals3:
        nearest = vals7[np.argmin(np.abs(vals7 - v))]
        assert abs(nearest - v) <= 1e-6 * max(abs(v), op)


def test_extra_couplings_shift_spectrum():
    delta_p = 1e12
    sys7 = extended_system(7, delta_p, 0.0, extra_ratio=0.5)
    assert len(sys7.extra_couplings) > 0
    op = 1e10
    with_extras = np.linalg.eigvalsh(build_extended(sys7, op, op).matrix.real)
    without = np.linalg.eigvalsh(
        build_extended(extended_system(7, delta_p, 0.0, extra_ratio=0.0), op, op).matrix.real
    )
    assert not np.allclose(with_extras, without, atol=1.0)


def test_coupling_channels_reassemble():
    for n in (3, 7):
        sysn = extended_system(n, delta_p=2e12, delta_two=3e8, gamma_rads=1e7)
        h0, kp, kc, mp, mc = coupling_channels(sysn)
        op, oc = 5.4e10, 8.1e10
        assembled = h0 + op * kp + oc * kc
        direct = build_extended(sysn, op, oc).matrix
        np.testing.assert_allclose(assembled, direct, atol=1e-3)
        np.testing.assert_array_equal(mp, np.zeros((n, n)))
        np.testing.assert_array_equal(mc, np.zeros((n, n)))


def test_coupling_channels_mixing_patterns():
    sys3 = extended_system(3, delta_p=1e12, delta_two=0.0, coupling_scale=1.0)
    _, _, _, mp, mc = coupling_channels(sys3, pulse_mixing=True)
    # the probe bleeds onto the control leg and vice versa
    assert mp[1, 2] == pytest.approx(sys3.mixing_ratio)
    assert mc[0, 1] == pytest.approx(sys3.mixing_ratio)


def test_static_pulse_mixing_symmetric_at_resonance():
    # equal legs + delta_two = 0: mixing keeps the g<->s exchange symmetry
    sys3 = extended_system(3, delta_p=4e12, delta_two=0.0)
    h = build_extended(sys3, 2e10, 2e10, pulse_mixing=True).matrix.real
    swap = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=float)
    np.testing.assert_allclose(swap @ h @ swap, h, atol=1e-3)


def test_counter_rotating_needs_optical_frequencies():
    sys3 = extended_system(3, delta_p=1e12, delta_two=0.0)
    with pytest.raises(ConfigError):
        build_extended(sys3, 1e10, 1e10, counter_rotating=True)
    sys_cr = extended_system(
        3, delta_p=1e12, delta_two=0.0,
        optical_omega_p_rads=3.2e15, optical_omega_c_rads=3.18e15,
    )
    h = build_extended(sys_cr, 1e10, 1e10, counter_rotating=True).matrix.real
    base = build_extended(sys_cr, 1e10, 1e10).matrix.real
    # Bloch-Siegert pushes the diagonal, leaves couplings alone
    assert h[0, 0] < base[0, 0]
    assert h[1, 1] > base[1, 1]
    np.testing.assert_allclose(h - np.diag(np.diag(h)), base - np.diag(np.diag(base)))


def test_extra_coupling_validation():
    with pytest.raises(ConfigError):
        ExtraCoupling(i=2, j=1, driven_by="probe")
    with pytest.raises(ConfigError):
        ExtraCoupling(i=0, j=1, driven_by="laser")
