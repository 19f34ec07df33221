"""Beamline tests: sampling statistics, transport integrity, and a frozen
end-to-end benchmark on coarse grids."""

import math

import numpy as np
import pytest

from darkbeam.beamline import (
    OUTCOME_BLOCKED_SLIT2,
    OUTCOME_BLOCKED_SLIT3,
    OUTCOME_DEFLECTED_OUT,
    OUTCOME_PASSED,
    SEPARATION_SENTINEL,
    Ensemble,
    ForceTable,
    SlitGeometry,
    build_force_table,
    depth_separation_ratio,
    doppler_spread,
    propagate_ensemble,
    purification_report,
    sample_ensemble,
    score_purification,
    separation_criterion,
)
from darkbeam.constants import C_LIGHT, mhz_to_rads, percm_to_rads
from darkbeam.errors import ConfigError
from darkbeam.fields import BeamGeometry, FieldProfile, sigma_t_from_geometry
from darkbeam.molecule import RoLevel, lirb_spec, two_photon_offset
from tests.test_molecule import THERMAL_5K

# dispersive-depth inputs reused across the ratio checks
OMEGA_PEAK = 123922015513.26
DELTA_P = 56509547019265.59
MASS_LIRB = 1.5264970320659148e-25


def _geometry():
    return BeamGeometry(crossing_angle_rad=math.radians(1.0),
                        longitudinal_velocity_mps=500.0)


def _beams():
    geom = _geometry()
    sig = sigma_t_from_geometry(10e-6, geom)
    probe = FieldProfile("probe", 0.8, 10e-6, 586e-9, 10e-6, 0.6e-6, sig)
    control = FieldProfile("control", 0.8, 10e-6, 592.8e-9, 10e-6, -0.6e-6, sig)
    return probe, control, geom, sig


def _null_table(levels=(0, 1), x_half=40e-6, nx=21, t_half=4.0e-6, nt=11):
    levels = np.asarray(levels, dtype=np.int64)
    xg = np.linspace(-x_half, x_half, nx)
    tg = np.linspace(-t_half, t_half, nt)
    return ForceTable(
        x_grid=xg,
        t_grid=tg,
        levels=levels,
        forces=np.zeros((levels.size, nx, nt)),
        offsets_rads=np.linspace(0.0, 1e6, levels.size),
        depths_rads=np.zeros(levels.size),
    )


def _hand_ensemble(x, v_t, v_z, level_j, seed=0):
    x = np.asarray(x, dtype=float)
    n = x.size
    return Ensemble(
        x_m=x,
        v_t_mps=np.asarray(v_t, dtype=float),
        v_z_mps=np.asarray(v_z, dtype=float),
        level_j=np.asarray(level_j, dtype=np.int64),
        weight=np.full(n, 1.0 / n),
        seed=seed,
    )


# ------------------------------------------------------ resolution helpers


def test_doppler_spread_is_fractional():
    assert doppler_spread(50.0) == pytest.approx(50.0 / C_LIGHT, rel=1e-15)
    assert doppler_spread(50.0) == pytest.approx(1.6678e-7, rel=1e-4)


def test_separation_ratio_values():
    slow = separation_criterion(OMEGA_PEAK, DELTA_P, MASS_LIRB, 0.002)
    assert slow.ratio == pytest.approx(18773.93488441606, rel=1e-9)
    assert slow.satisfied
    fast = separation_criterion(OMEGA_PEAK, DELTA_P, MASS_LIRB, 0.25)
    assert fast.ratio == pytest.approx(1.2015318326026276, rel=1e-9)
    assert fast.satisfied
    assert not separation_criterion(OMEGA_PEAK, DELTA_P, MASS_LIRB, 0.4).satisfied


def test_separation_ratio_scales_inverse_square():
    r1 = separation_criterion(OMEGA_PEAK, DELTA_P, MASS_LIRB, 0.01).ratio
    r2 = separation_criterion(OMEGA_PEAK, DELTA_P, MASS_LIRB, 0.02).ratio
    assert r1 == pytest.approx(4.0 * r2, rel=1e-12)
    # doubling the design margin halves the ratio
    r_m10 = separation_criterion(OMEGA_PEAK, DELTA_P, MASS_LIRB, 0.01, margin=10.0).ratio
    assert r_m10 == pytest.approx(0.5 * r1, rel=1e-12)


def test_separation_ratio_edge_cases():
    assert depth_separation_ratio(1e8, MASS_LIRB, 0.0) == SEPARATION_SENTINEL
    assert separation_criterion(OMEGA_PEAK, DELTA_P, MASS_LIRB, 0.0).ratio == SEPARATION_SENTINEL
    with pytest.raises(ConfigError):
        separation_criterion(OMEGA_PEAK, 0.0, MASS_LIRB, 0.01)
    with pytest.raises(ConfigError):
        depth_separation_ratio(1e8, -1.0, 0.01)
    with pytest.raises(ConfigError):
        depth_separation_ratio(1e8, MASS_LIRB, 0.01, margin=0.0)


# --------------------------------------------------------------- sampling


def test_sample_ensemble_is_deterministic():
    spec = lirb_spec()
    slits = SlitGeometry()
    a = sample_ensemble(spec, slits, 500, seed=123)
    b = sample_ensemble(spec, slits, 500, seed=123)
    np.testing.assert_array_equal(a.x_m, b.x_m)
    np.testing.assert_array_equal(a.v_t_mps, b.v_t_mps)
    np.testing.assert_array_equal(a.v_z_mps, b.v_z_mps)
    np.testing.assert_array_equal(a.level_j, b.level_j)
    c = sample_ensemble(spec, slits, 500, seed=124)
    assert not np.array_equal(a.x_m, c.x_m)


def test_sample_positions_fill_the_first_slit():
    ens = sample_ensemble(lirb_spec(), SlitGeometry(), 20000, seed=5)
    half = 0.5 * SlitGeometry().width_m[0]
    assert np.all(np.abs(ens.x_m) <= half)
    assert ens.x_m.max() > 0.9 * half and ens.x_m.min() < -0.9 * half
    assert abs(ens.x_m.mean()) < 0.05 * half


def test_transverse_spread_is_geometric_acceptance():
    slits = SlitGeometry()
    ens = sample_ensemble(lirb_spec(), slits, 100_000, seed=9)
    sigma = 500.0 * (slits.width_m[0] + slits.width_m[1]) / (
        4.0 * (slits.z_m[1] - slits.z_m[0])
    )
    assert ens.v_t_mps.std() == pytest.approx(sigma, rel=0.02)
    assert abs(ens.v_t_mps.mean()) < 5.0 * sigma / np.sqrt(ens.size)


def test_longitudinal_floor_is_enforced():
    ens = sample_ensemble(lirb_spec(), SlitGeometry(), 20000, seed=3,
                          v_z_mean_mps=500.0, v_z_sigma_mps=400.0)
    assert np.all(ens.v_z_mps >= 100.0)


def test_level_histogram_follows_thermal_weights():
    ens = sample_ensemble(lirb_spec(), SlitGeometry(), 100_000, seed=11)
    counts = np.bincount(ens.level_j, minlength=8) / ens.size
    # 6 sigma of the multinomial per level
    bound = 6.0 * np.sqrt(THERMAL_5K * (1 - THERMAL_5K) / ens.size)
    assert np.all(np.abs(counts - THERMAL_5K) < bound)


def test_level_weights_override():
    ens = sample_ensemble(lirb_spec(), SlitGeometry(), 20000, seed=2,
                          level_weights=[1.0, 0.0, 1.0])
    counts = np.bincount(ens.level_j, minlength=3)
    assert counts[1] == 0
    assert counts[0] + counts[2] == ens.size
    assert counts[0] == pytest.approx(counts[2], rel=0.1)
    np.testing.assert_allclose(ens.weight, 1.0 / 20000)


def test_sample_ensemble_validation():
    spec = lirb_spec()
    slits = SlitGeometry()
    with pytest.raises(ConfigError):
        sample_ensemble(spec, slits, 0, seed=1)
    with pytest.raises(ConfigError):
        sample_ensemble(spec, slits, 10, seed=1, v_z_mean_mps=-5.0)
    with pytest.raises(ConfigError):
        sample_ensemble(spec, slits, 10, seed=1, level_weights=[0.5, -0.1])
    with pytest.raises(ConfigError):
        sample_ensemble(spec, slits, 10, seed=1, level_weights=[0.0, 0.0])


def test_slit_geometry_validation():
    with pytest.raises(ConfigError):
        SlitGeometry(z_m=(0.0, 2.0, 1.0))
    with pytest.raises(ConfigError):
        SlitGeometry(width_m=(4e-6, 0.0, 4e-6))
    with pytest.raises(ConfigError):
        SlitGeometry(z_m=(0.0, 1.0))


# ------------------------------------------------------------ force tables


def test_force_table_offsets_and_lookup():
    probe, control, geom, sig = _beams()
    xg = np.linspace(-40e-6, 40e-6, 41)
    tg = np.linspace(-4e-6, 4e-6, 21)
    spec = lirb_spec()
    table = build_force_table(spec, RoLevel("X", 0, 0), probe, control, geom,
                              percm_to_rads(300.0), [0, 1, 2], xg, tg)
    np.testing.assert_array_equal(table.levels, [0, 1, 2])
    assert table.offsets_rads[0] == 0.0
    expected_j1 = mhz_to_rads(two_photon_offset(
        spec, RoLevel("X", 0, 0), RoLevel("X", 0, 1)
    ))
    assert table.offsets_rads[1] == pytest.approx(expected_j1, rel=1e-12)
    assert table.offsets_rads[2] > table.offsets_rads[1] > 0
    assert table.level_row(2) == 2
    with pytest.raises(ConfigError):
        table.level_row(5)


def test_force_table_from_offsets_validation():
    probe, control, geom, _ = _beams()
    xg = np.linspace(-40e-6, 40e-6, 11)
    tg = np.linspace(-4e-6, 4e-6, 5)
    from darkbeam.beamline import force_table_from_offsets

    with pytest.raises(ConfigError):
        force_table_from_offsets([0.0, 1.0], [0], probe, control, geom,
                                 1e13, 1.33e-29, 1.33e-29, xg, tg)
    with pytest.raises(ConfigError):
        force_table_from_offsets([0.0, 1.0], [3, 3], probe, control, geom,
                                 1e13, 1.33e-29, 1.33e-29, xg, tg)


def test_dark_level_force_is_negligible():
    """The zero-offset level rides the decoupled branch: its force grid is
    smaller than the trapping level's by many orders of magnitude."""
    probe, control, geom, sig = _beams()
    xg = np.linspace(-40e-6, 40e-6, 41)
    half = 4.5 * sig + 0.6e-6
    tg = np.linspace(-half, half, 31)
    table = build_force_table(lirb_spec(), RoLevel("X", 0, 0), probe, control,
                              geom, percm_to_rads(300.0), [0, 1], xg, tg)
    dark = np.max(np.abs(table.forces[0]))
    trap = np.max(np.abs(table.forces[1]))
    assert dark < 1e-6 * trap
    assert table.depths_rads[0] < 1e-4 * table.depths_rads[1]


# ---------------------------------------------------------------- transport


def test_null_force_transport_is_ballistic():
    table = _null_table()
    slits = SlitGeometry()
    rng = np.random.default_rng(31)
    n = 200
    ens = _hand_ensemble(
        x=rng.uniform(-2e-6, 2e-6, n),
        v_t=rng.normal(0.0, 1e-3, n),
        v_z=rng.normal(500.0, 50.0, n),
        level_j=rng.integers(0, 2, n),
    )
    result = propagate_ensemble(ens, slits, 1.02, table, MASS_LIRB)
    straight2 = ens.x_m + ens.v_t_mps * (slits.z_m[1] - slits.z_m[0]) / ens.v_z_mps
    straight3 = ens.x_m + ens.v_t_mps * (slits.z_m[2] - slits.z_m[0]) / ens.v_z_mps
    np.testing.assert_allclose(result.x_slit2_m, straight2, atol=1e-12)
    free = result.outcome != OUTCOME_BLOCKED_SLIT2
    np.testing.assert_allclose(result.x_slit3_m[free], straight3[free], atol=1e-12)
    np.testing.assert_array_equal(result.kick_mps, 0.0)
    # outcome codes reproduce the hand slit cuts
    want = np.where(np.abs(straight2) > 2e-6, OUTCOME_BLOCKED_SLIT2,
                    np.where(np.abs(straight3) > 2e-6, OUTCOME_BLOCKED_SLIT3,
                             OUTCOME_PASSED))
    np.testing.assert_array_equal(result.outcome, want)


def test_straying_molecule_is_frozen_not_passed():
    table = _null_table()
    slits = SlitGeometry(width_m=(200e-6, 200e-6, 200e-6))
    ens = _hand_ensemble([0.0], [0.04], [500.0], [0])
    result = propagate_ensemble(ens, slits, 1.02, table, MASS_LIRB)
    assert result.outcome[0] == OUTCOME_DEFLECTED_OUT


def test_nontarget_level_is_pulled_toward_the_beam():
    """A quiet molecule on the slit axis sits one waist below the beam
    center; a trapping level must move toward it, a dark level must not."""
    probe, control, geom, sig = _beams()
    xg = np.linspace(-40e-6, 40e-6, 61)
    half = 4.5 * sig + 0.6e-6
    tg = np.linspace(-half, half, 41)
    table = build_force_table(lirb_spec(), RoLevel("X", 0, 0), probe, control,
                              geom, percm_to_rads(300.0), [0, 1], xg, tg)
    ens = _hand_ensemble([0.0, 0.0], [0.0, 0.0], [500.0, 500.0], [0, 1])
    result = propagate_ensemble(ens, SlitGeometry(), 1.02, table, MASS_LIRB,
                                record_indices=np.array([0, 1]))
    assert result.kick_mps[1] > 1e-3  # signed: toward the +10 um beam axis
    assert abs(result.kick_mps[0]) < 1e-9 * result.kick_mps[1]
    path = result.window_x_m[:, 1]
    assert path[-1] > 1e-8            # drifts upward already inside the window
    assert path.min() > -1e-9         # and is never pushed away
    # downstream lever arm turns the kick into a tens-of-microns walk
    assert result.x_slit3_m[1] > 1e-5
    np.testing.assert_allclose(result.window_x_m[:, 0], 0.0, atol=1e-11)


def test_harmonic_window_conserves_energy():
    """Velocity Verlet on a linear-in-x force: no secular energy drift.

    Bilinear interpolation reproduces a linear force exactly, so the only
    error left is the integrator's own bounded oscillation.
    """
    mass = 1e-25
    omega = 2.0 * np.pi * 1000.0
    k = mass * omega**2
    nx = 11
    xg = np.linspace(-40e-6, 40e-6, nx)
    tg = np.linspace(-1e-3, 1e-3, 5)
    forces = np.tile((-k * xg)[None, :, None], (1, 1, tg.size))
    table = ForceTable(x_grid=xg, t_grid=tg, levels=np.array([0]),
                       forces=forces, offsets_rads=np.zeros(1),
                       depths_rads=np.zeros(1))
    slits = SlitGeometry(z_m=(0.0, 0.5, 3.0), width_m=(100e-6, 100e-6, 100e-6))
    x0 = 20e-6
    ens = _hand_ensemble([x0], [0.0], [500.0], [0])
    dt = 1e-7
    result = propagate_ensemble(ens, slits, 1.5, table, mass,
                                v_nominal_mps=500.0, dt_s=dt)
    za = 1.5 + 500.0 * tg[0]
    zb = 1.5 + 500.0 * tg[-1]
    n_steps = int(np.ceil((zb - za) / (500.0 * dt)))
    z_end = za + n_steps * 500.0 * dt
    v_exit = result.kick_mps[0]
    x_exit = result.x_slit3_m[0] - v_exit * (slits.z_m[2] - z_end) / 500.0
    e0 = 0.5 * k * x0**2
    e1 = 0.5 * mass * v_exit**2 + 0.5 * k * x_exit**2
    assert (zb - za) / 500.0 * omega / (2 * np.pi) > 1.5   # more than one period
    assert abs(e1 - e0) / e0 < 1e-6


def test_propagate_validation():
    table = _null_table()
    slits = SlitGeometry()
    ens = _hand_ensemble([0.0], [0.0], [500.0], [0])
    with pytest.raises(ConfigError):
        propagate_ensemble(ens, slits, 0.5, table, MASS_LIRB)
    with pytest.raises(ConfigError):
        propagate_ensemble(ens, slits, 1.02, table, -1.0)
    with pytest.raises(ConfigError):
        propagate_ensemble(ens, slits, 1.02, table, MASS_LIRB, dt_s=0.0)
    wide = _null_table(t_half=1e-3)
    with pytest.raises(ConfigError):
        propagate_ensemble(ens, slits, 1.02, wide, MASS_LIRB)
    missing = _hand_ensemble([0.0], [0.0], [500.0], [5])
    with pytest.raises(ConfigError):
        propagate_ensemble(missing, slits, 1.02, table, MASS_LIRB)
    with pytest.raises(ConfigError):
        propagate_ensemble(ens, slits, 1.02, table, MASS_LIRB,
                           record_indices=np.array([4]))
    bent = _null_table()
    bent.x_grid = bent.x_grid.copy()
    bent.x_grid[3] += 1e-6
    with pytest.raises(ConfigError):
        propagate_ensemble(ens, slits, 1.02, bent, MASS_LIRB)


def test_empty_pass_yields_undefined_purity():
    table = _null_table()
    slits = SlitGeometry()
    ens = _hand_ensemble([0.0, 0.0], [1.0, -1.0], [500.0, 500.0], [0, 1])
    result = propagate_ensemble(ens, slits, 1.02, table, MASS_LIRB)
    report = score_purification(result, table, 0, MASS_LIRB, 1e-3, 50.0)
    assert report.purity is None
    assert report.target_yield == 0.0
    assert sum(report.outcome_totals().values()) == pytest.approx(1.0, rel=1e-12)


def test_purification_rejects_excited_target():
    probe, control, geom, _ = _beams()
    with pytest.raises(ConfigError):
        purification_report(lirb_spec(), RoLevel("X", 1, 0), SlitGeometry(),
                            probe, control, geom, percm_to_rads(300.0),
                            1.02, 10, 1)


# ------------------------------------------------------- frozen benchmark


def test_coarse_purification_benchmark():
    """End-to-end run on coarse grids, frozen once and kept as a tripwire.

    2000 molecules, 101 x 91 force grids. Any drift in sampling, surface
    generation, interpolation, or scoring moves at least one number here.
    """
    spec = lirb_spec()
    probe, control, geom, sig = _beams()
    slits = SlitGeometry()
    xg = np.linspace(-40e-6, 40e-6, 101)
    half = 4.5 * sig + 0.6e-6
    tg = np.linspace(-half, half, 91)
    report, result, table = purification_report(
        spec, RoLevel("X", 0, 0), slits, probe, control, geom,
        percm_to_rads(300.0), 1.02, 2000, 42, x_grid=xg, t_grid=tg,
    )
    assert report.purity == 1.0
    assert report.target_yield == pytest.approx(0.2748091603053435, rel=1e-12)
    np.testing.assert_allclose(
        report.depths_rads,
        [2.67746995e+01, 2.81765647e+08, 2.75176706e+08, 2.72953449e+08,
         2.71977866e+08, 2.71469809e+08, 2.71173169e+08, 2.70985381e+08],
        rtol=1e-6,
    )
    np.testing.assert_allclose(
        report.separation_ratios[:3],
        [7.39885972e-03, 7.78624797e+04, 7.60417067e+04],
        rtol=1e-6,
    )
    totals = report.outcome_totals()
    assert totals["passed"] == pytest.approx(0.018, abs=1e-9)
    assert totals["blocked_slit2"] == pytest.approx(0.404, abs=1e-9)
    assert totals["blocked_slit3"] == pytest.approx(0.578, abs=1e-9)
    assert totals["deflected_out"] == 0.0
    assert report.kick_rms_mps[0] < 1e-10
    assert np.all(report.kick_rms_mps[1:] > 1e-2)
    assert np.all(report.kick_rms_mps[1:] < 2e-2)
    assert report.doppler_fractional == pytest.approx(50.0 / C_LIGHT, rel=1e-12)

    # target survivors stay on their ballistic line through the window
    ens = result.ensemble
    straight3 = ens.x_m + ens.v_t_mps * (slits.z_m[2] - slits.z_m[0]) / ens.v_z_mps
    moved = result.outcome != OUTCOME_BLOCKED_SLIT2
    is_target = ens.level_j == 0
    target_disp = np.abs(result.x_slit3_m - straight3)[moved & is_target]
    assert target_disp.max() < 1e-7
    # every other level walks toward the beam axis on the +x side
    other_disp = (result.x_slit3_m - straight3)[moved & ~is_target]
    assert np.mean(other_disp) > 1e-5

    # recording window paths must not perturb the dynamics
    idx = np.where(result.outcome == OUTCOME_PASSED)[0][:5]
    again = propagate_ensemble(ens, slits, 1.02, table, spec.mass_kg, 500.0,
                               4e-9, record_indices=idx)
    np.testing.assert_array_equal(result.outcome, again.outcome)
    np.testing.assert_array_equal(result.x_slit3_m, again.x_slit3_m)
    assert again.window_x_m.shape[1] == 5
