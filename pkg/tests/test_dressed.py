"""Dressed eigensystem, branch tracking, and dipole forces."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkbeam import (
    ConfigError,
    HamiltonianMatrix,
    NumericError,
    PotentialSurface,
    build_lambda,
    dark_state,
    eigensystem,
    force,
    force_grid,
    hellmann_feynman_force,
    lambda_system,
    lirb_spec,
    potential_surface,
    track_adiabatic,
)
from darkbeam.constants import HBAR, TWO_PI, percm_to_rads
from darkbeam.dressed import bare_solution
from darkbeam.errors import StepRefinementNeeded
from tests.test_fields import _geometry, _probe

DELTA_P = percm_to_rads(300.0)
POSITIVE = st.floats(min_value=1e3, max_value=1e12)


def _control(**overrides):
    params = dict(role="control", center_t_s=-0.6e-6, wavelength_m=592.8e-9)
    params.update(overrides)
    return _probe(**params)


def _surface(delta_two, state_index=0, nx=41, nt=31, x_half=40e-6, **kwargs):
    spec = lirb_spec()
    system = lambda_system(DELTA_P, delta_two)
    x_grid = np.linspace(-x_half, x_half, nx)
    t_half = 4.5 * 0.81e-6 + 0.6e-6
    t_grid = np.linspace(-t_half, t_half, nt)
    return potential_surface(
        system, _probe(), _control(), _geometry(),
        spec.dipole_ge_cm, spec.dipole_se_cm,
        state_index=state_index, x_grid=x_grid, t_grid=t_grid, **kwargs,
    )


def test_dark_state_vector():
    v = dark_state(3.0, 4.0)
    np.testing.assert_allclose(v, [0.8, 0.0, -0.6])
    assert np.linalg.norm(v) == pytest.approx(1.0)


@settings(deadline=None)
@given(POSITIVE, POSITIVE, st.floats(min_value=-1e13, max_value=1e13))
def test_dark_state_annihilated(omega_p, omega_c, delta_p):
    sys3 = lambda_system(delta_p, 0.0)
    h = build_lambda(sys3, omega_p, omega_c).matrix.real
    v = dark_state(omega_p, omega_c)
    residual = np.max(np.abs(h @ v))
    assert residual < 1e-12 * max(omega_p, omega_c, abs(delta_p))


def test_eigensystem_ascending_and_dark_flag():
    sys3 = lambda_system(5.0, 0.0)
    sol = eigensystem(build_lambda(sys3, 2.0, 3.0))
    assert np.all(np.diff(sol.eigenvalues.real) >= 0)
    assert sol.dark_index is not None
    assert abs(sol.eigenvalues[sol.dark_index]) < 1e-12 * 5.0
    # eigenvector matches the analytic dark state up to phase
    v = sol.eigenvectors[:, sol.dark_index]
    overlap = abs(np.vdot(v, dark_state(2.0, 3.0)))
    assert overlap == pytest.approx(1.0, abs=1e-12)


def test_eigensystem_no_dark_flag_off_resonance():
    sys3 = lambda_system(5.0, 1.0)
    sol = eigensystem(build_lambda(sys3, 2.0, 3.0))
    assert sol.dark_index is None


def test_eigensystem_damped_complex():
    sys3 = lambda_system(5.0, 0.0, gamma_rads=0.5)
    sol = eigensystem(build_lambda(sys3, 2.0, 3.0))
    assert np.all(np.diff(sol.eigenvalues.real) >= 0)
    assert np.min(sol.eigenvalues.imag) < -1e-3
    # decay cannot amplify any branch
    assert np.max(sol.eigenvalues.imag) < 1e-12


def test_eigensystem_rejects_nan():
    bad = HamiltonianMatrix(np.full((3, 3), np.nan, dtype=complex))
    with pytest.raises(NumericError):
        eigensystem(bad)


def test_bare_solution_keeps_level_order():
    # branches index the bare levels (g, e, s), not the energy order
    sys3 = lambda_system(5.0, 1.0)
    sol = bare_solution(sys3)
    np.testing.assert_allclose(sol.eigenvalues.real, [0.0, 5.0, 1.0])
    np.testing.assert_allclose(np.abs(sol.eigenvectors), np.eye(3), atol=1e-12)


def test_track_identity():
    sys3 = lambda_system(5.0, 0.0)
    sol = eigensystem(build_lambda(sys3, 2.0, 3.0))
    tracked = track_adiabatic(sol, sol)
    assert tracked.branch_ordered
    np.testing.assert_allclose(tracked.eigenvalues, sol.eigenvalues)
    np.testing.assert_allclose(np.abs(np.diag(
        tracked.eigenvectors.conj().T @ sol.eigenvectors)), 1.0, atol=1e-12)


def _crossing_h(delta):
    m = np.array([
        [delta, 0.05, 0.0],
        [0.05, -delta, 0.0],
        [0.0, 0.0, 9.0],
    ], dtype=complex)
    return HamiltonianMatrix(m)


def test_track_follows_character_through_crossing():
    # one coarse step across a narrow avoided crossing: the branch keeps its
    # vector character, so its tracked eigenvalue jumps the energy order
    prev = eigensystem(_crossing_h(-1.0))
    cur = eigensystem(_crossing_h(+1.0))
    tracked = track_adiabatic(prev, cur)
    assert tracked.eigenvalues[0].real == pytest.approx(+1.0, rel=1e-2)
    assert tracked.eigenvalues[1].real == pytest.approx(-1.0, rel=1e-2)


def test_track_ambiguous_raises():
    # 45 degree rotation between non-degenerate bases: overlaps tie at 1/2
    prev = bare_solution(lambda_system(2.0, 1.0))
    theta = math.pi / 4
    r = np.array([
        [math.cos(theta), -math.sin(theta), 0.0],
        [math.sin(theta), math.cos(theta), 0.0],
        [0.0, 0.0, 1.0],
    ])
    rotated = r @ np.diag([0.0, 1.0, 2.0]) @ r.T
    cur = eigensystem(HamiltonianMatrix(rotated.astype(complex)))
    with pytest.raises(StepRefinementNeeded):
        track_adiabatic(prev, cur)


def test_track_degenerate_subspace_rotates_cleanly():
    # exact degeneracy is not ambiguity: the subspace is rotated back onto
    # the previous basis instead of erroring
    prev = bare_solution(lambda_system(5.0, 0.0))
    cur = eigensystem(HamiltonianMatrix(np.diag([0.0, 5.0, 0.0]).astype(complex)))
    tracked = track_adiabatic(prev, cur)
    overlaps = np.abs(np.diag(tracked.eigenvectors.conj().T @ prev.eigenvectors))
    np.testing.assert_allclose(overlaps, 1.0, atol=1e-9)


def test_resonant_surface_is_flat_zero():
    # 61 time samples: the dark vector's mixing angle must be resolved for
    # the adjacent-sample overlap to stay high
    surface = _surface(0.0, nt=61)
    scale = max(DELTA_P, 1.24e11)
    assert np.max(np.abs(surface.energies)) < 1e-10 * scale
    assert surface.continuity_minimum() > 0.99


def test_trap_surface_well_and_edges():
    delta_two = TWO_PI * 89.9377374e6
    surface = _surface(delta_two)
    # wings of the grid see no light: bare ground level at zero
    assert abs(surface.energies[0, 0]) < 1e-4 * delta_two
    # the well reaches the dispersive depth scale Omega^2 / delta_p
    assert surface.energies.min() < -2e8
    assert surface.continuity_minimum() > 0.99


def test_s_branch_edge_energy_is_delta_two():
    # state_index 2 is the branch connected to the bare |s> level
    delta_two = TWO_PI * 89.9377374e6
    surface = _surface(delta_two, state_index=2)
    assert surface.energies[0, 0] == pytest.approx(delta_two, rel=1e-3)


def test_surface_tracking_stable_under_denser_time_grid():
    delta_two = TWO_PI * 89.9377374e6
    coarse = _surface(delta_two, nt=31)
    dense = _surface(delta_two, nt=301)
    # shared samples: t grids align every 10th dense sample
    np.testing.assert_allclose(coarse.t_grid, dense.t_grid[::10], rtol=1e-12)
    diff = np.max(np.abs(coarse.energies - dense.energies[:, ::10]))
    assert diff < 1.0  # rad/s, against a 2.8e8 rad/s deep well


def test_force_matches_hellmann_feynman():
    delta_two = TWO_PI * 89.9377374e6
    surface = _surface(delta_two)
    for x_um, t_us in ((5.0, 0.0), (12.0, 0.3), (-3.0, -0.4), (18.0, 0.0)):
        f_fd = force(surface, x_um * 1e-6, t_us * 1e-6)
        f_hf = hellmann_feynman_force(surface, x_um * 1e-6, t_us * 1e-6)
        assert f_fd == pytest.approx(f_hf, rel=1e-6, abs=1e-40)


def test_force_sign_pulls_toward_beam():
    # positive delta_p: high field is low energy, force points up the
    # intensity gradient toward the beam center at +10 um
    delta_two = TWO_PI * 89.9377374e6
    surface = _surface(delta_two)
    assert force(surface, 2e-6, 0.0) > 0
    assert force(surface, 18e-6, 0.0) < 0


def test_dark_branch_force_negligible():
    surface = _surface(0.0)
    f_dark = abs(force(surface, 5e-6, 0.0))
    trap = _surface(TWO_PI * 89.9377374e6)
    f_trap = abs(force(trap, 5e-6, 0.0))
    assert f_dark < 1e-6 * f_trap


def test_force_grid_exact_on_quadratic():
    x = np.linspace(-1.0, 1.0, 21)
    t = np.linspace(0.0, 1.0, 3)
    a = 7.5e8
    energies = a * (x[:, None] - 0.1) ** 2 * np.ones((1, t.size))
    surface = PotentialSurface(
        x_grid=x, t_grid=t, energies=energies,
        vectors=np.zeros((x.size, t.size, 3), dtype=complex),
        state_index=0,
    )
    grid = force_grid(surface)
    expected = -HBAR * 2.0 * a * (x - 0.1)
    # interior stencil is 4th order: exact on a parabola (absolute floor
    # covers the node where the force crosses zero)
    np.testing.assert_allclose(grid[2:-2, 0], expected[2:-2], rtol=1e-10, atol=1e-36)
    assert grid.shape == energies.shape


def test_force_grid_matches_point_force():
    delta_two = TWO_PI * 89.9377374e6
    surface = _surface(delta_two)
    grid = force_grid(surface)
    ix = np.argmin(np.abs(surface.x_grid - 5e-6))
    it = np.argmin(np.abs(surface.t_grid))
    f_pt = force(surface, float(surface.x_grid[ix]), float(surface.t_grid[it]))
    # grid stencil spacing 2 um vs point stencil 50 nm: agreement is limited
    # by the grid resolution, not the evaluators
    assert grid[ix, it] == pytest.approx(f_pt, rel=2e-3)


def test_force_edge_warns():
    delta_two = TWO_PI * 89.9377374e6
    surface = _surface(delta_two)
    with pytest.warns(RuntimeWarning):
        force(surface, float(surface.x_grid[0]), 0.0)


def test_force_without_context_raises():
    surface = PotentialSurface(
        x_grid=np.linspace(0, 1, 5), t_grid=np.linspace(0, 1, 2),
        energies=np.zeros((5, 2)), vectors=np.zeros((5, 2, 3), dtype=complex),
        state_index=0,
    )
    with pytest.raises(ConfigError):
        force(surface, 0.5, 0.5)


def test_surface_rejects_bad_state_index():
    with pytest.raises(ConfigError):
        _surface(0.0, state_index=5)
